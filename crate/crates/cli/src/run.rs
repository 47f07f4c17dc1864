use std::sync::Arc;

use rand::Rng;

use kisin_models::coeff::CoeffRing;
use kisin_models::lattice::Lattice;
use kisin_models::models::{
    bounding_window, check_torsion_bound, enumerate_in_window, enumerate_models_with, naive_models, quotient_dim,
    EnumOptions, QuotientProblem,
};
use kisin_models::phi_module::{plant_model_with, random_module, PhiModule};
use kisin_models::rng::instance_rng;
use kisin_models::tower::make_field_tower;
use kisin_models::towers::{
    assemble_limit, build_tower, check_transitions, detect_stabilization, find_compatible_sequence, verify_splitting,
    window_transfer,
};
use kisin_models::Error;

use crate::config::{ExperimentConfig, Generator};
use crate::records::*;

pub struct Instance {
    pub index: u64,
    pub module: PhiModule,
    pub planted: Option<Lattice>,
    pub exponents: Option<Vec<u32>>,
}

pub fn ring_for(cfg: &ExperimentConfig, level: usize) -> CoeffRing {
    let tower = make_field_tower(cfg.p, cfg.f, cfg.g).expect("validated configs have a tower");
    CoeffRing::new(Arc::new(tower), level)
}

/// The module of instance `index`, from the stream `(seed, index)`.
pub fn make_instance(cfg: &ExperimentConfig, ring: &CoeffRing, index: u64) -> Instance {
    let mut rng = instance_rng(cfg.seed, index);
    match cfg.generator {
        Generator::Planted => {
            let exps = cfg.exponents.clone().unwrap_or_else(|| (0..cfg.d).map(|_| rng.gen_range(0..=cfg.e)).collect());
            let pl = plant_model_with(ring, &exps, &mut rng);
            Instance { index, module: pl.module, planted: Some(pl.lattice), exponents: Some(exps) }
        }
        Generator::Random => {
            let module = random_module(ring, cfg.d, cfg.e.max(1) as i64, cfg.precision, &mut rng);
            Instance { index, module, planted: None, exponents: None }
        }
    }
}

fn params(cfg: &ExperimentConfig, level: usize, inst: &Instance) -> Params {
    Params { p: cfg.p, f: cfg.f, g: cfg.g, d: cfg.d, n: level, e: cfg.e, exponents: inst.exponents.clone() }
}

/// Errors that mean "out of reach", not "wrong".
fn skip_reason(e: &Error) -> Option<String> {
    match e {
        Error::Infeasible { .. } | Error::TooManyModels { .. } | Error::NeedsPrecision(_) => Some(e.to_string()),
        _ => None,
    }
}

fn options(cfg: &ExperimentConfig) -> EnumOptions {
    EnumOptions { ceiling: cfg.ceiling, slack: 0, max_models: cfg.max_models }
}

pub fn enumerate_instance(cfg: &ExperimentConfig, inst: &Instance) -> EnumerateRecord {
    let m = &inst.module;
    let mut rec = EnumerateRecord {
        instance: inst.index,
        status: Status::Ok,
        reason: None,
        params: params(cfg, m.level(), inst),
        window: None,
        quotient_dim: 0,
        model_count: 0,
        free_count: 0,
        torsion_histogram: Vec::new(),
        max_torsion: 0,
        torsion_bound: (0, 1),
        max_j: 0,
        certificates_ok: false,
        planted_found: None,
        widened_equal: None,
        counterexample: None,
    };
    let w = bounding_window(m, cfg.e);
    rec.window = Some((w.i1, w.i2));
    rec.quotient_dim = quotient_dim(m, w);
    let set = match enumerate_models_with(m, cfg.e, options(cfg)) {
        Ok(s) => s,
        Err(e) => {
            rec.status = if skip_reason(&e).is_some() { Status::Skipped } else { Status::Violation };
            rec.reason = Some(e.to_string());
            return rec;
        }
    };
    rec.model_count = set.len();
    rec.free_count = set.free_count();
    rec.torsion_histogram = set.torsion_histogram();
    rec.max_j = set.max_j();
    let report = check_torsion_bound(m, &set);
    rec.max_torsion = report.max_torsion;
    rec.torsion_bound = report.bound;
    rec.certificates_ok = report.ok();
    if let Some(c) = report.counterexamples.first() {
        rec.status = Status::Violation;
        rec.reason = Some("torsion certificate failed".into());
        rec.counterexample = Some(c.clone());
    }
    if let Some(pl) = &inst.planted {
        let found = set.lattices().contains(pl);
        rec.planted_found = Some(found);
        if !found {
            rec.status = Status::Violation;
            rec.reason = Some("planted lattice missing".into());
            rec.counterexample = Some(pl.to_wire());
        }
    }
    if cfg.window_slack > 0 {
        let wide = w.widened(cfg.window_slack);
        match enumerate_in_window(m, cfg.e, wide, usize::MAX, cfg.max_models) {
            Ok(more) => {
                let same = more == set.lattices();
                rec.widened_equal = Some(same);
                if !same {
                    rec.status = Status::Violation;
                    rec.reason = Some("widened window finds other models".into());
                    rec.counterexample = more.iter().find(|l| !set.lattices().contains(l)).map(Lattice::to_wire);
                }
            }
            Err(e) => {
                if skip_reason(&e).is_none() {
                    rec.status = Status::Violation;
                    rec.reason = Some(e.to_string());
                }
            }
        }
    }
    rec
}

pub fn tower_instance(cfg: &ExperimentConfig, inst: &Instance) -> TowerRecord {
    let m = &inst.module;
    let mut rec = TowerRecord {
        instance: inst.index,
        status: Status::Ok,
        reason: None,
        params: params(cfg, m.level(), inst),
        depth: m.level(),
        levels: Vec::new(),
        image_sizes: Vec::new(),
        planted_found: None,
        chosen: Vec::new(),
        chosen_free: false,
        stabilization: Vec::new(),
        splitting: Vec::new(),
        assembled: None,
        assembled_ok: false,
        failing_factor: None,
        transfer_s: Vec::new(),
        transfer_slack: 0,
        transfer_uniform: false,
        counterexample: None,
    };
    let fail = |rec: &mut TowerRecord, e: Error| {
        rec.status = if skip_reason(&e).is_some() { Status::Skipped } else { Status::Violation };
        rec.reason = Some(e.to_string());
        if let Error::Violation(s) = e {
            rec.counterexample = Some(s);
        }
    };
    let t = match build_tower(m, cfg.e, options(cfg)) {
        Ok(t) => t,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    for (level, set) in t.sets.iter().enumerate() {
        rec.levels.push(LevelSummary {
            level,
            model_count: set.len(),
            free_count: set.free_count(),
            max_torsion: set.models.iter().map(|x| x.profile.total).max().unwrap_or(0),
        });
    }
    if let Some(pl) = &inst.planted {
        let found = (0..=t.depth()).all(|lvl| pl.reduce_level(lvl).map(|x| t.sets[lvl].lattices().contains(&x)).unwrap_or(false));
        rec.planted_found = Some(found);
        if !found {
            rec.status = Status::Violation;
            rec.reason = Some("planted lattice missing at some level".into());
        }
    }
    match check_transitions(&t) {
        Ok(tr) => rec.image_sizes = tr.image_sizes,
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    }
    let seq = match find_compatible_sequence(&t) {
        Ok(s) => s,
        Err(Error::NoModel { level }) => {
            rec.status = if inst.planted.is_some() { Status::Violation } else { Status::NoModel };
            rec.reason = Some(format!("no model at level {level}"));
            return rec;
        }
        Err(e) => {
            fail(&mut rec, e);
            return rec;
        }
    };
    rec.chosen = seq.models.iter().map(Lattice::to_wire).collect();
    rec.chosen_free = t.sets[t.depth()].models.iter().any(|x| x.free && Some(&x.lattice) == seq.models.last());
    let idx = detect_stabilization(&seq);
    let mut pairs: Vec<(usize, usize)> = idx.windows(2).map(|w| (w[1], w[0])).collect();
    if idx.len() > 2 {
        pairs.push((idx[idx.len() - 1], idx[0]));
    }
    if idx.len() == 1 {
        pairs.push((idx[0], idx[0]));
    }
    rec.stabilization = idx;
    for (upper, lower) in pairs {
        match verify_splitting(&seq, upper, lower) {
            Ok(c) => rec.splitting.push(SplitSummary { upper, lower, kernel_dim: c.kernel_dim, ok: true }),
            Err(e) => {
                rec.splitting.push(SplitSummary { upper, lower, kernel_dim: 0, ok: false });
                fail(&mut rec, e);
            }
        }
    }
    match assemble_limit(&t, &seq) {
        Ok(a) => {
            rec.assembled = Some(a.lattice.to_wire());
            rec.assembled_ok = a.ok();
            rec.failing_factor = a.failing_factor(cfg.d);
            if !a.ok() {
                rec.status = Status::Violation;
                rec.reason.get_or_insert_with(|| "assembled lattice fails a check".into());
            }
        }
        Err(e) => fail(&mut rec, e),
    }
    let slack = cfg.transfer_slack.unwrap_or_else(|| transfer_bound(cfg.e, cfg.e, cfg.p));
    rec.transfer_slack = slack;
    match window_transfer(&t, &seq, None, None, slack) {
        Ok(tr) => {
            rec.transfer_uniform = tr.uniform;
            rec.transfer_s = tr.s;
            if !rec.transfer_uniform {
                rec.status = Status::Violation;
                rec.reason.get_or_insert_with(|| "transfer distance is not uniform".into());
            }
        }
        Err(e) => fail(&mut rec, e),
    }
    rec
}

/// A height-`e` model sits within `ceil((r + e)/(p - 1))` of any lattice
/// with `u^r N ⊆ Φ(φ*N) ⊆ u^{-r} N`.
pub fn transfer_bound(r: u32, e: u32, p: u32) -> i64 {
    ((r + e) as i64 + p as i64 - 2) / (p as i64 - 1)
}

pub fn oracle_instance(cfg: &ExperimentConfig, inst: &Instance) -> OracleRecord {
    let m = &inst.module;
    let mut rec = OracleRecord {
        instance: inst.index,
        status: Status::Ok,
        reason: None,
        params: params(cfg, m.level(), inst),
        fault_ops: cfg.fault_ops,
        quotient_dim: 0,
        fast_count: 0,
        oracle_count: 0,
        equal: false,
        counterexample: None,
    };
    // a broken search is run in a window wide enough for the dropped operators to bind
    let w = match cfg.fault_ops {
        Some(_) => bounding_window(m, cfg.e).widened(1),
        None => bounding_window(m, cfg.e),
    };
    rec.quotient_dim = quotient_dim(m, w);
    if rec.quotient_dim > cfg.oracle_ceiling {
        rec.status = Status::Skipped;
        rec.reason = Some(Error::Infeasible { dim: rec.quotient_dim, ceiling: cfg.oracle_ceiling }.to_string());
        return rec;
    }
    let fast = match cfg.fault_ops {
        None => enumerate_in_window(m, cfg.e, w, cfg.ceiling, cfg.max_models),
        Some(k) => QuotientProblem::new(m, cfg.e, w).and_then(|q| {
            let mut v: Vec<Lattice> =
                q.closed_subspaces_truncated(k, cfg.max_models)?.into_iter().map(|s| q.to_lattice(s)).collect();
            v.sort();
            Ok(v)
        }),
    };
    let slow = naive_models(m, cfg.e, w, cfg.oracle_ceiling, cfg.max_models);
    let (fast, slow) = match (fast, slow) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            rec.status = if skip_reason(&e).is_some() { Status::Skipped } else { Status::Violation };
            rec.reason = Some(e.to_string());
            return rec;
        }
    };
    rec.fast_count = fast.len();
    rec.oracle_count = slow.len();
    rec.equal = fast == slow;
    if !rec.equal {
        rec.status = Status::Violation;
        rec.reason = Some("closure search and oracle disagree".into());
        rec.counterexample = fast
            .iter()
            .find(|l| !slow.contains(l))
            .or_else(|| slow.iter().find(|l| !fast.contains(l)))
            .map(Lattice::to_wire);
    }
    rec
}

pub fn run_enumerate(cfg: &ExperimentConfig) -> Vec<Record> {
    let ring = ring_for(cfg, cfg.n);
    (0..cfg.count).map(|i| Record::Enumerate(enumerate_instance(cfg, &make_instance(cfg, &ring, i)))).collect()
}

pub fn run_tower(cfg: &ExperimentConfig) -> Vec<Record> {
    let ring = ring_for(cfg, cfg.depth);
    (0..cfg.count).map(|i| Record::Tower(tower_instance(cfg, &make_instance(cfg, &ring, i)))).collect()
}

pub fn run_oracle_check(cfg: &ExperimentConfig) -> Vec<Record> {
    let ring = ring_for(cfg, cfg.n);
    (0..cfg.count).map(|i| Record::Oracle(oracle_instance(cfg, &make_instance(cfg, &ring, i)))).collect()
}
