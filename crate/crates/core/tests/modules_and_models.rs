mod common;

use common::{planted, ring};
use kisin_models::lattice::{phi_image, Lattice};
use kisin_models::models::*;
use kisin_models::phi_module::{make_phi_module, monomial_module, random_invertible, PhiModule};
use kisin_models::rng::instance_rng;
use kisin_models::{LaurentSeries, SeriesMatrix};

#[test]
fn reduction_kills_varpi_and_composes() {
    let r = ring(3, 1, 1);
    let c = LaurentSeries::from_terms(&r, &[(0, r.varpi()), (1, r.one())], None);
    let m = make_phi_module(&r, 1, SeriesMatrix::from_rows(vec![vec![c]])).unwrap();
    let m0 = m.reduce_level(0).unwrap();
    assert_eq!(m0.matrix(), monomial_module(&ring(3, 1, 0), 1).matrix());
    assert_eq!(m.reduce_level(1).unwrap().matrix(), m.matrix());
    let r2 = ring(3, 2, 2);
    for i in 0..50 {
        let m = planted(&r2, 2, 2, 77, i).module;
        let direct = m.reduce_level(0).unwrap();
        let stepped = m.reduce_level(1).unwrap().reduce_level(0).unwrap();
        assert_eq!(direct.matrix(), stepped.matrix());
    }
}

#[test]
fn basechange_examples() {
    let r = ring(5, 1, 0);
    let m = monomial_module(&r, 2);
    let (same, _) = m.apply_basechange(&SeriesMatrix::identity(&r, 1)).unwrap();
    assert_eq!(same.matrix(), m.matrix());
    for t in -2..3 {
        let (mt, _) = m.apply_basechange(&SeriesMatrix::diagonal(vec![LaurentSeries::u_pow(&r, t)])).unwrap();
        assert_eq!(mt.matrix(), monomial_module(&r, 2 + 4 * t).matrix());
    }
}

#[test]
fn model_counts_survive_basechange() {
    let r = ring(3, 1, 1);
    let mut rng = instance_rng(5, 99);
    for i in 0..30 {
        let pl = planted(&r, 2, 2, 55, i);
        let before = enumerate_models(&pl.module, 2).unwrap();
        let p = random_invertible(&r, 2, &mut rng);
        let (m2, pinv) = pl.module.apply_basechange(&p).unwrap();
        let after = enumerate_models(&m2, 2).unwrap();
        assert_eq!(before.len(), after.len(), "instance {i}");
        let mut moved: Vec<Lattice> = before.lattices().iter().map(|l| l.apply_linear(&pinv).unwrap()).collect();
        moved.sort();
        assert_eq!(moved, after.lattices());
    }
}

#[test]
fn planting() {
    let r = ring(3, 1, 1);
    let mut rng = instance_rng(1, 1);
    let unimodular = kisin_models::phi_module::plant_model_with(&r, &[0, 0], &mut rng);
    let l0 = Lattice::standard(&r, 2);
    assert_eq!(phi_image(&unimodular.module, &l0).unwrap(), l0);
    let r1 = ring(3, 1, 0);
    let extreme = kisin_models::phi_module::plant_model_with(&r1, &[3], &mut rng);
    assert_eq!(phi_image(&extreme.module, &Lattice::standard(&r1, 1)).unwrap(), Lattice::u_power(&r1, 1, 3));
    for i in 0..20 {
        let pl = planted(&r, 2, 3, 8, i);
        let set = enumerate_models(&pl.module, 3).unwrap();
        assert!(set.lattices().contains(&pl.lattice));
        assert!(set.models.iter().all(|m| m.height_ok));
    }
}

fn closed_form(p: i64, e: i64, a: i64) -> Vec<i64> {
    (-20..=20).filter(|m| (p - 1) * m >= -a && (p - 1) * m <= e - a).collect()
}

#[test]
fn rank_one_grid() {
    for p in [3u32, 5] {
        let r = ring(p, 1, 0);
        for e in 0..=2 * (p - 1) {
            for a in 0..=e as i64 {
                let m = monomial_module(&r, a);
                let want: Vec<Lattice> = closed_form(p as i64, e as i64, a).into_iter().map(|k| Lattice::u_power(&r, 1, k)).collect();
                assert_eq!(enumerate_models(&m, e).unwrap().lattices(), want, "p={p} e={e} a={a}");
                let w = bounding_window(&m, e);
                let slow = naive_models(&m, e, w, ORACLE_CEILING, DEFAULT_MAX_MODELS).unwrap();
                assert_eq!(slow, want);
            }
        }
    }
}

#[test]
fn oracle_agrees_in_rank_two() {
    let mut compared = 0;
    for (f, n, e) in [(1u32, 0usize, 2u32), (1, 0, 4), (2, 0, 2), (1, 1, 2), (1, 1, 3)] {
        let r = ring(3, f, n);
        for i in 0..12 {
            let pl = planted(&r, 2, e, 13, i);
            let w = bounding_window(&pl.module, e);
            if quotient_dim(&pl.module, w) > ORACLE_CEILING {
                continue;
            }
            let fast = enumerate_in_window(&pl.module, e, w, DEFAULT_CEILING, DEFAULT_MAX_MODELS).unwrap();
            let slow = naive_models(&pl.module, e, w, ORACLE_CEILING, DEFAULT_MAX_MODELS).unwrap();
            assert_eq!(fast, slow, "f={f} n={n} e={e} #{i}");
            compared += 1;
        }
    }
    assert!(compared >= 30, "{compared}");
}

#[test]
fn widened_window_adds_nothing() {
    let r = ring(3, 1, 1);
    for i in 0..20 {
        let pl = planted(&r, 2, 3, 21, i);
        let a = enumerate_models(&pl.module, 3).unwrap();
        let b = enumerate_models_with(&pl.module, 3, EnumOptions { slack: 2, ..Default::default() }).unwrap();
        assert_eq!(a.lattices(), b.lattices());
    }
}

#[test]
fn truncated_closure_is_caught_by_the_oracle() {
    let r = ring(3, 1, 0);
    let mut caught = false;
    for a in 0..=4 {
        let m = monomial_module(&r, a);
        let w = bounding_window(&m, 4).widened(1);
        let q = QuotientProblem::new(&m, 4, w).unwrap();
        let broken: Vec<Lattice> = q.closed_subspaces_truncated(1, 1000).unwrap().into_iter().map(|s| q.to_lattice(s)).collect();
        let mut broken = broken;
        broken.sort();
        let full: Vec<Lattice> = q.closed_subspaces(1000).unwrap().into_iter().map(|s| q.to_lattice(s)).collect();
        let mut full = full;
        full.sort();
        assert_eq!(full, naive_models(&m, 4, w, ORACLE_CEILING, 1000).unwrap());
        caught |= broken != full;
    }
    assert!(caught);
}

#[test]
fn torsion_bound_reports() {
    let r = ring(3, 1, 1);
    let m = monomial_module(&r, 0);
    let set = enumerate_models(&m, 4).unwrap();
    let rep = check_torsion_bound(&m, &set);
    assert_eq!(rep.bound, (2, 1));
    assert!(rep.ok() && rep.max_torsion <= 2);
    // e < p - 1: the bound is below one, so no torsion at all
    let r5 = ring(5, 1, 1);
    for i in 0..10 {
        let pl = planted(&r5, 2, 3, 4, i);
        let set = enumerate_models(&pl.module, 3).unwrap();
        let rep = check_torsion_bound(&pl.module, &set);
        assert!(rep.ok());
        assert_eq!(rep.max_torsion, 0);
    }
    let r0 = ring(3, 2, 0);
    let pl = planted(&r0, 2, 4, 3, 0);
    let set = enumerate_models(&pl.module, 4).unwrap();
    assert_eq!(check_torsion_bound(&pl.module, &set).max_torsion, 0);
}

#[test]
fn small_e_gives_unique_free_model() {
    for n in 0..=1 {
        let r = ring(5, 1, n);
        assert_eq!(enumerate_models(&monomial_module(&r, 0), 3).unwrap().len(), 1);
        for i in 0..10 {
            let pl = planted(&r, 2, 3, 6, i);
            let set = enumerate_models(&pl.module, 3).unwrap();
            if set.len() != 1 {
                eprintln!("multiple models at n={n}, instance {i}: {}", set.len());
            }
            assert!(set.models.iter().all(|m| m.free));
        }
    }
}

#[test]
fn rejects_non_etale_and_reports_ceiling() {
    let r = ring(3, 1, 1);
    let c = SeriesMatrix::from_rows(vec![vec![LaurentSeries::constant(r.varpi())]]);
    assert!(PhiModule::new(r.clone(), 1, c).is_err());
    let m = monomial_module(&r, 0);
    let err = enumerate_models_with(&m, 4, EnumOptions { ceiling: 2, ..Default::default() }).unwrap_err();
    assert!(matches!(err, kisin_models::Error::Infeasible { ceiling: 2, .. }));
    let err = enumerate_models_with(&m, 4, EnumOptions { max_models: 2, ..Default::default() }).unwrap_err();
    assert_eq!(err, kisin_models::Error::TooManyModels { limit: 2 });
}
