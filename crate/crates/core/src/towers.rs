//! Towers `M_0 <- M_1 <- ... <- M_N` of reductions, compatible sequences of
//! models pushed down from the top, and the finite-depth checks on them.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    bounded_condition, canonicalize, height_condition, is_free, minimal_generating_set, minimal_generators, phi_image,
    torsion_profile, Freeness, Lattice, LatticeWire,
};
use crate::models::{enumerate_models_with, EnumOptions, ModelSet};
use crate::phi_module::PhiModule;
use crate::series::LaurentSeries;

pub struct Tower {
    pub e: u32,
    /// `modules[m]` is the reduction of the top module to level `m`.
    pub modules: Vec<PhiModule>,
    pub sets: Vec<ModelSet>,
}

impl Tower {
    pub fn depth(&self) -> usize {
        self.modules.len() - 1
    }

    pub fn top(&self) -> &PhiModule {
        self.modules.last().expect("towers are nonempty")
    }
}

/// Reduce `top` to every level `0..=N` and enumerate each `𝒵_m`.
pub fn build_tower(top: &PhiModule, e: u32, opts: EnumOptions) -> Result<Tower> {
    let modules = (0..=top.level()).map(|m| top.reduce_level(m)).collect::<Result<Vec<_>>>()?;
    let sets = modules.iter().map(|m| enumerate_models_with(m, e, opts)).collect::<Result<Vec<_>>>()?;
    Ok(Tower { e, modules, sets })
}

/// `f_{nm}`: the image of a model in `M_m`, checked to be a model.
pub fn transition(target: &PhiModule, n: &Lattice, e: u32) -> Result<Lattice> {
    let m = target.level();
    let img = n.reduce_level(m)?;
    if !height_condition(target, &img, e)? {
        return Err(Error::Violation(format!(
            "image at level {m} of {:?} fails the height condition",
            n.to_wire()
        )));
    }
    Ok(img)
}

/// Sizes of `f_{n,n-1}(𝒵_n)` for `n = 1..=N`, with membership and
/// functoriality `f_{nm} = f_{n-1,m} ∘ f_{n,n-1}` checked on every model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionReport {
    pub image_sizes: Vec<usize>,
    pub target_sizes: Vec<usize>,
}

pub fn check_transitions(t: &Tower) -> Result<TransitionReport> {
    let mut image_sizes = Vec::new();
    let mut target_sizes = Vec::new();
    for n in 1..=t.depth() {
        let below: BTreeSet<&Lattice> = t.sets[n - 1].models.iter().map(|m| &m.lattice).collect();
        let mut image = BTreeSet::new();
        for info in &t.sets[n].models {
            let step = transition(&t.modules[n - 1], &info.lattice, t.e)?;
            if !below.contains(&step) {
                return Err(Error::Violation(format!("image of {:?} is not enumerated at level {}", info.lattice.to_wire(), n - 1)));
            }
            let mut cur = step.clone();
            for m in (0..n - 1).rev() {
                let direct = transition(&t.modules[m], &info.lattice, t.e)?;
                cur = transition(&t.modules[m], &cur, t.e)?;
                if direct != cur {
                    return Err(Error::Violation(format!("transition maps do not compose on {:?}", info.lattice.to_wire())));
                }
            }
            image.insert(step);
        }
        image_sizes.push(image.len());
        target_sizes.push(below.len());
    }
    Ok(TransitionReport { image_sizes, target_sizes })
}

#[derive(Clone, Debug)]
pub struct CompatibleSequence {
    /// `models[m] = f_{Nm}(models[N])`.
    pub models: Vec<Lattice>,
}

/// Choose the smallest free model of `𝒵_N` (the smallest model if none is
/// free) and push it down.
pub fn find_compatible_sequence(t: &Tower) -> Result<CompatibleSequence> {
    if let Some(level) = t.sets.iter().position(ModelSet::is_empty) {
        return Err(Error::NoModel { level });
    }
    let top = t.sets.last().expect("towers are nonempty");
    let chosen = top
        .models
        .iter()
        .find(|m| m.free)
        .unwrap_or(&top.models[0])
        .lattice
        .clone();
    let mut models: Vec<Lattice> = (0..t.depth()).map(|m| transition(&t.modules[m], &chosen, t.e)).collect::<Result<_>>()?;
    models.push(chosen);
    Ok(CompatibleSequence { models })
}

/// Levels whose models carry the most frequent torsion class (ties go
/// to the class seen first).
pub fn detect_stabilization(s: &CompatibleSequence) -> Vec<usize> {
    let mut groups: BTreeMap<Vec<Vec<u32>>, Vec<usize>> = BTreeMap::new();
    let mut order = Vec::new();
    for (n, m) in s.models.iter().enumerate() {
        let key = torsion_profile(m).classes;
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(n);
    }
    let mut best: Vec<usize> = Vec::new();
    for k in order {
        let g = &groups[&k];
        if g.len() > best.len() {
            best = g.clone();
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingCertificate {
    pub upper: usize,
    pub lower: usize,
    /// `dim (𝔐_{upper} ∩ ϖ^{lower+1}M) / ϖ^{lower+1}𝔐_{upper}`: the torsion summand.
    pub kernel_dim: usize,
    /// Minimal generator counts per factor, upstairs and downstairs.
    pub generators_upper: Vec<usize>,
    pub generators_lower: Vec<usize>,
    /// The reductions of the upstairs generators generate `𝔐_{lower}`.
    pub generators_match: bool,
}

impl SplittingCertificate {
    pub fn ok(&self) -> bool {
        self.kernel_dim == 0 && self.generators_match && self.generators_upper == self.generators_lower
    }
}

/// `𝔐_{upper} / ϖ^{lower+1} 𝔐_{upper} → 𝔐_{lower}` is onto; its kernel is
/// the torsion summand. A zero kernel plus matching minimal generators is
/// the Nakayama certificate.
pub fn verify_splitting(s: &CompatibleSequence, upper: usize, lower: usize) -> Result<SplittingCertificate> {
    if lower > upper || upper >= s.models.len() {
        return Err(Error::InvalidParameter(format!("splitting needs lower <= upper < {}", s.models.len())));
    }
    let big = &s.models[upper];
    let small = &s.models[lower];
    let frame = big.frame();
    let field = frame.field();
    let sub = big.subspace();
    let k = lower + 1;
    let kernel_dim = if k > big.level() {
        0
    } else {
        let inter = sub.intersect(field, &frame.varpi_filtration(k));
        let vk = sub.map(field, frame.dim(), |r| frame.varpi_pow(r, k));
        inter.rank() - vk.rank()
    };
    let ring = small.ring();
    let mut gens = Vec::new();
    for i in 0..big.ring().f() {
        for g in minimal_generating_set(big, i) {
            gens.push(g.iter().map(|x| x.reduce(big.ring(), lower)).collect::<Vec<LaurentSeries>>());
        }
    }
    let generators_match = canonicalize(ring, small.d(), &gens).map(|l| &l == small).unwrap_or(false);
    let cert = SplittingCertificate {
        upper,
        lower,
        kernel_dim,
        generators_upper: minimal_generators(big),
        generators_lower: minimal_generators(small),
        generators_match,
    };
    if !cert.ok() {
        return Err(Error::Violation(format!("splitting fails for {:?}: {cert:?}", big.to_wire())));
    }
    Ok(cert)
}

#[derive(Clone, Debug)]
pub struct Assembled {
    pub lattice: Lattice,
    pub freeness: Freeness,
    pub free: bool,
    pub phi_stable: bool,
    pub height_ok: bool,
    pub reductions_match: bool,
}

impl Assembled {
    pub fn ok(&self) -> bool {
        self.free && self.phi_stable && self.height_ok && self.reductions_match
    }

    /// `(factor, minimal generator count)` of the first factor that is not free of rank `d`.
    pub fn failing_factor(&self, d: usize) -> Option<(usize, usize)> {
        (0..self.freeness.free.len())
            .find(|&i| !self.freeness.free[i] || self.freeness.generators[i] != d)
            .map(|i| (i, self.freeness.generators[i]))
    }
}

/// The level-N lattice generated by the per-factor generators of the top
/// model, with the checks that make it the finite-depth limit.
pub fn assemble_limit(t: &Tower, s: &CompatibleSequence) -> Result<Assembled> {
    let top = s.models.last().expect("sequences are nonempty");
    let m = t.top();
    let mut gens = Vec::new();
    for i in 0..m.ring().f() {
        gens.extend(minimal_generating_set(top, i));
    }
    let lattice = canonicalize(m.ring(), m.d(), &gens)?;
    let freeness = is_free(&lattice);
    let free = freeness.is_free_of_rank(m.d());
    let phi_stable = lattice.contains(&phi_image(m, &lattice)?)?;
    let height_ok = height_condition(m, &lattice, t.e)?;
    let mut reductions_match = true;
    for (lvl, target) in s.models.iter().enumerate() {
        reductions_match &= &lattice.reduce_level(lvl)? == target;
    }
    Ok(Assembled { lattice, freeness, free, phi_stable, height_ok, reductions_match })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transfer {
    pub r: u32,
    pub base: LatticeWire,
    /// Minimal `s` at each level.
    pub s: Vec<i64>,
    pub uniform: bool,
}

fn lift_series(target: &crate::coeff::CoeffRing, x: &LaurentSeries) -> LaurentSeries {
    let terms: Vec<_> = x.terms().map(|(t, c)| (t, target.lift_from(c, 0))).collect();
    LaurentSeries::from_terms(target, &terms, x.prec())
}

/// Minimal `s >= 0` with `u^s a ⊆ b ⊆ u^{-s} a`.
pub fn sandwich_distance(a: &Lattice, b: &Lattice) -> Result<i64> {
    let (ba, aa) = a.window();
    let (bb, ab) = b.window();
    let bound = (aa - bb).max(ab - ba).max(0);
    for s in 0..=bound {
        if b.contains(&a.shift(s))? && a.shift(-s).contains(b)? {
            return Ok(s);
        }
    }
    Err(Error::NeedsPrecision(format!("no sandwich within distance {bound}")))
}

/// With `𝔑̃` at level 0 satisfying the bounded condition for `r` (default:
/// the level-0 model with `r = e`), lift its generators to every level and
/// measure the distance to the sequence.
pub fn window_transfer(t: &Tower, s: &CompatibleSequence, base: Option<&Lattice>, r: Option<u32>, slack: i64) -> Result<Transfer> {
    let base = base.unwrap_or(&s.models[0]);
    let r = r.unwrap_or(t.e);
    if base.level() != 0 {
        return Err(Error::InvalidParameter("the transfer base lives at level 0".into()));
    }
    if !bounded_condition(&t.modules[0], base, r)? {
        return Err(Error::InvalidParameter(format!("base does not satisfy the bounded condition for r = {r}")));
    }
    let gens = base.generators();
    let mut out = Vec::with_capacity(s.models.len());
    for (lvl, target) in s.models.iter().enumerate() {
        let ring = t.modules[lvl].ring();
        let lifted: Vec<Vec<LaurentSeries>> = gens.iter().map(|g| g.iter().map(|x| lift_series(ring, x)).collect()).collect();
        let nl = canonicalize(ring, base.d(), &lifted)?;
        out.push(sandwich_distance(&nl, target)?);
    }
    let uniform = out.iter().max().copied().unwrap_or(0) - out[0] <= slack;
    Ok(Transfer { r, base: base.to_wire(), s: out, uniform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffRing;
    use crate::phi_module::{monomial_module, plant_model};
    use crate::tower::make_field_tower;
    use std::sync::Arc;

    fn ring(p: u32, f: u32, n: usize) -> CoeffRing {
        CoeffRing::new(Arc::new(make_field_tower(p, f, f).unwrap()), n)
    }

    #[test]
    fn planted_pipeline() {
        let r = ring(3, 1, 3);
        let (m, planted) = plant_model(&r, 2, 2, 11);
        let t = build_tower(&m, 2, EnumOptions::default()).unwrap();
        for (lvl, set) in t.sets.iter().enumerate() {
            assert!(set.lattices().contains(&planted.reduce_level(lvl).unwrap()));
        }
        check_transitions(&t).unwrap();
        let seq = find_compatible_sequence(&t).unwrap();
        let idx = detect_stabilization(&seq);
        assert!(idx.len() >= 2);
        verify_splitting(&seq, idx[idx.len() - 1], idx[0]).unwrap();
        let a = assemble_limit(&t, &seq).unwrap();
        assert!(a.ok());
        assert_eq!(&a.lattice, seq.models.last().unwrap());
        let tr = window_transfer(&t, &seq, None, None, 0).unwrap();
        assert!(tr.uniform);
    }

    #[test]
    fn transition_to_same_level_is_identity() {
        let r = ring(3, 1, 1);
        let m = monomial_module(&r, 1);
        let n = Lattice::standard(&r, 1);
        assert_eq!(transition(&m, &n, 1).unwrap(), n);
    }

    #[test]
    fn empty_level_is_reported() {
        // rank one, a = 1, e = 0: (p-1)m >= -1 and (p-1)m <= -1 has no solution
        let r = ring(3, 1, 1);
        let t = build_tower(&monomial_module(&r, 1), 0, EnumOptions::default()).unwrap();
        assert_eq!(find_compatible_sequence(&t).unwrap_err(), Error::NoModel { level: 0 });
    }

    #[test]
    fn fixed_lattice_has_zero_transfer() {
        let r = ring(3, 1, 2);
        let t = build_tower(&monomial_module(&r, 0), 0, EnumOptions::default()).unwrap();
        let seq = find_compatible_sequence(&t).unwrap();
        let tr = window_transfer(&t, &seq, None, Some(0), 0).unwrap();
        assert_eq!(tr.s, vec![0, 0, 0]);
    }
}
