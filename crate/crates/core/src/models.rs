//! Enumeration of the finite set `𝒵_n` of lattices of height at most `e`.
//!
//! A lattice `𝔑` satisfies `u^e 𝔑 ⊆ Φ(φ^*𝔑) ⊆ 𝔑` iff it is stable under `Φ`
//! and under the operators `Ψ_r` of [`PhiModule::psi`]: the right inclusion
//! is `Φ(𝔑) ⊆ 𝔑`, and since `B[[u]] = ⊕_r u^r φ(B[[u]])`, the left one says
//! `ψ_r(u^e C^{-1} x) ∈ 𝔑` for all `x ∈ 𝔑` and `0 <= r < p`. Inside a window
//! `u^{i_1} L_0 ⊆ 𝔑 ⊆ u^{i_2} L_0` the models are therefore exactly the
//! subspaces of the quotient that contain the images of `u^{i_1} L_0` and are
//! closed under `u`, `ϖ`, the idempotents, `Φ` and the `Ψ_r`.

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Fq;
use crate::frame::{CoordOp, Frame};
use crate::lattice::{height_condition, is_free, torsion_profile, Freeness, Lattice, LatticeWire, TorsionProfile};
use crate::linalg::{kernel, projective_points, Subspace};
use crate::phi_module::PhiModule;
use crate::series::LaurentSeries;

/// Default ceiling on the quotient l-dimension for the closure search.
pub const DEFAULT_CEILING: usize = 64;
/// Default cap on the number of models before a search is abandoned.
pub const DEFAULT_MAX_MODELS: usize = 20_000;
/// Default ceiling for the exhaustive oracle.
pub const ORACLE_CEILING: usize = 10;

/// Every model satisfies `u^{i1} L_0 ⊆ 𝔑 ⊆ u^{i2} L_0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub i1: i64,
    pub i2: i64,
}

impl Window {
    pub fn widened(&self, by: i64) -> Window {
        Window { i1: self.i1 + by, i2: self.i2 - by }
    }

    pub fn is_empty(&self) -> bool {
        self.i1 < self.i2
    }
}

/// With `α` the least u-exponent of `C` and `β` minus that of `C^{-1}`:
/// `Φ(𝔑) ⊆ 𝔑` forces `(p-1) b >= -β` for the top exponent `b` of `𝔑`, and
/// the dual statement for `u^e C^{-1}` forces `(p-1) a <= e - α` for the
/// bottom exponent `a`.
pub fn bounding_window(m: &PhiModule, e: u32) -> Window {
    let q = m.ring().p() as i64 - 1;
    let i2 = (-m.beta()).div_euclid(q) + i64::from((-m.beta()).rem_euclid(q) != 0);
    let i1 = (e as i64 - m.alpha()).div_euclid(q);
    Window { i1, i2 }
}

/// An l-linear operator on the quotient, tabulated on basis vectors, with
/// the part of each image that falls below the window.
struct OpTable {
    images: Vec<Vec<Fq>>,
    escapes: Vec<Vec<Fq>>,
}

impl OpTable {
    fn build(frame: &Frame, op: &dyn Fn(&[LaurentSeries]) -> Vec<LaurentSeries>) -> Result<OpTable> {
        let raw: Vec<Vec<LaurentSeries>> = (0..frame.dim()).map(|j| op(&frame.to_series(&frame.unit_vector(j)))).collect();
        let low = raw.iter().flatten().filter_map(LaurentSeries::valuation).min().unwrap_or(frame.b()).min(frame.b());
        let below = Frame::new(frame.ring().clone(), frame.d(), low, frame.b());
        let mut images = Vec::with_capacity(raw.len());
        let mut escapes = Vec::with_capacity(raw.len());
        for x in &raw {
            images.push(frame.project(x)?.coords);
            let truncated: Vec<LaurentSeries> = x.iter().map(|s| truncate_below(frame, s)).collect();
            escapes.push(below.project(&truncated)?.coords);
        }
        Ok(OpTable { images, escapes })
    }

    fn apply(&self, field: &crate::field::Field, x: &[Fq]) -> Option<Vec<Fq>> {
        let mut esc_nonzero = false;
        let mut esc = vec![0 as Fq; self.escapes.first().map_or(0, Vec::len)];
        let mut out = vec![0 as Fq; self.images.first().map_or(0, Vec::len)];
        for (j, &c) in x.iter().enumerate() {
            if c != 0 {
                crate::linalg::axpy(field, &mut out, c, &self.images[j]);
                crate::linalg::axpy(field, &mut esc, c, &self.escapes[j]);
            }
        }
        esc_nonzero |= esc.iter().any(|&v| v != 0);
        (!esc_nonzero).then_some(out)
    }
}

/// The exact part of `s` below the frame's bottom exponent.
fn truncate_below(frame: &Frame, s: &LaurentSeries) -> LaurentSeries {
    let terms: Vec<_> = s.terms().filter(|(t, _)| *t < frame.b()).map(|(t, c)| (t, c.clone())).collect();
    LaurentSeries::from_terms(frame.ring(), &terms, None)
}

/// The enumeration problem on the quotient `u^{i2} L_0 / u^{i1} L_0`.
pub struct QuotientProblem {
    frame: Frame,
    ops: Vec<OpTable>,
    /// Per operator; `None` when the images of `u^{i1} L_0` leave the window.
    seeds: Vec<Option<Vec<Vec<Fq>>>>,
}

impl QuotientProblem {
    pub fn new(m: &PhiModule, e: u32, w: Window) -> Result<QuotientProblem> {
        let frame = Frame::new(m.ring().clone(), m.d(), w.i2, w.i1.max(w.i2));
        let p = m.ring().p() as usize;
        let mut ops = vec![OpTable::build(&frame, &|x| m.phi(x))?];
        for r in 0..p {
            ops.push(OpTable::build(&frame, &|x| m.psi(r, e, x))?);
        }
        // seeds[k]: images of u^{i1} L_0 under operator k
        let mut seeds = vec![Some(Vec::new()); ops.len()];
        for c in 0..m.d() {
            let mut v = vec![LaurentSeries::zero(); m.d()];
            v[c] = LaurentSeries::u_pow(m.ring(), w.i1);
            let mut imgs = vec![m.phi(&v)];
            imgs.extend((0..p).map(|r| m.psi(r, e, &v)));
            for (k, img) in imgs.into_iter().enumerate() {
                let pr = frame.project(&img)?;
                match (&mut seeds[k], pr.escaped) {
                    (Some(_), true) => seeds[k] = None,
                    (Some(s), false) => s.push(pr.coords),
                    (None, _) => {}
                }
            }
        }
        Ok(QuotientProblem { frame, ops, seeds })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// Closure of `base + extra` under all operators; `None` if it leaves the window.
    fn close(&self, base: &Subspace, extra: &[Vec<Fq>], ops: usize) -> Option<Subspace> {
        let field = self.frame.field().clone();
        let closures: Vec<Box<CoordOp<'_>>> = self.ops[..ops]
            .iter()
            .map(|t| {
                let f = field.clone();
                Box::new(move |x: &[Fq]| t.apply(&f, x)) as Box<CoordOp<'_>>
            })
            .collect();
        let refs: Vec<&CoordOp<'_>> = closures.iter().map(|b| b.as_ref()).collect();
        self.frame.close(base, extra, &refs)
    }

    /// Socle vectors over `s` in factor `i`: `v` with `u v, ϖ v ∈ s`, modulo `s`.
    fn socle_complement(&self, s: &Subspace, i: usize) -> Vec<Vec<Fq>> {
        let fr = &self.frame;
        let field = fr.field();
        let range = fr.factor_range(i);
        let images: Vec<Vec<Fq>> = range
            .clone()
            .map(|j| {
                let e = fr.unit_vector(j);
                let mut img = s.reduce(field, &fr.mul_u(&e));
                img.extend(s.reduce(field, &fr.mul_varpi(&e)));
                img
            })
            .collect();
        let ker = kernel(field, &images);
        let mut comp = Subspace::zero(fr.dim());
        for k in ker.rows() {
            let mut v = fr.zero();
            v[range.clone()].copy_from_slice(k);
            comp.insert(field, s.reduce(field, &v));
        }
        comp.rows().to_vec()
    }

    /// All closed subspaces containing the seeds. With `ops < 1 + p` only
    /// the first operators are imposed (`0` gives every submodule).
    fn search(&self, ops: usize, seeds: &[Vec<Fq>], limit: usize) -> Result<Vec<Subspace>> {
        let zero = Subspace::zero(self.dim());
        let Some(start) = self.close(&zero, seeds, ops) else {
            return Ok(Vec::new());
        };
        let field = self.frame.field().clone();
        let mut seen: HashSet<Subspace> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(start.clone());
        queue.push_back(start);
        let mut out = Vec::new();
        while let Some(s) = queue.pop_front() {
            for i in 0..self.frame.ring().f() {
                let basis = self.socle_complement(&s, i);
                for v in projective_points(&field, &basis) {
                    if let Some(t) = self.close(&s, &[v], ops) {
                        if !seen.contains(&t) {
                            if seen.len() >= limit {
                                return Err(Error::TooManyModels { limit });
                            }
                            seen.insert(t.clone());
                            queue.push_back(t);
                        }
                    }
                }
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Models as subspaces of the quotient.
    pub fn closed_subspaces(&self, limit: usize) -> Result<Vec<Subspace>> {
        self.closed_subspaces_truncated(self.ops.len(), limit)
    }

    /// Same search with only the first `k` operators (`Φ`, then the `Ψ_r`)
    /// enforced; fewer than all is a deliberately broken search.
    pub fn closed_subspaces_truncated(&self, k: usize, limit: usize) -> Result<Vec<Subspace>> {
        let k = k.min(self.ops.len());
        let mut seeds = Vec::new();
        for s in &self.seeds[..k] {
            match s {
                Some(s) => seeds.extend(s.iter().cloned()),
                None => return Ok(Vec::new()),
            }
        }
        self.search(k, &seeds, limit)
    }

    /// Every `B[u]`-submodule of the quotient.
    pub fn all_submodules(&self, limit: usize) -> Result<Vec<Subspace>> {
        self.search(0, &[], limit)
    }

    pub fn to_lattice(&self, s: Subspace) -> Lattice {
        Lattice::from_parts(self.frame.clone(), s).expect("closed subspaces are submodules")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumOptions {
    pub ceiling: usize,
    /// Widen the computed window by this much on each side.
    pub slack: i64,
    pub max_models: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { ceiling: DEFAULT_CEILING, slack: 0, max_models: DEFAULT_MAX_MODELS }
    }
}

#[derive(Clone, Debug)]
pub struct ModelInfo {
    pub lattice: Lattice,
    pub freeness: Freeness,
    pub free: bool,
    pub profile: TorsionProfile,
    /// The height condition re-checked through `phi_image` and `contains`.
    pub height_ok: bool,
}

#[derive(Clone, Debug)]
pub struct ModelSet {
    pub window: Window,
    pub quotient_dim: usize,
    pub e: u32,
    pub models: Vec<ModelInfo>,
}

impl ModelSet {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn lattices(&self) -> Vec<Lattice> {
        self.models.iter().map(|m| m.lattice.clone()).collect()
    }

    pub fn free_count(&self) -> usize {
        self.models.iter().filter(|m| m.free).count()
    }

    /// `histogram[t]` = number of models with torsion dimension `t`.
    pub fn torsion_histogram(&self) -> Vec<usize> {
        let max = self.models.iter().map(|m| m.profile.total).max().unwrap_or(0);
        let mut h = vec![0; max + 1];
        for m in &self.models {
            h[m.profile.total] += 1;
        }
        if self.models.is_empty() {
            h.clear();
        }
        h
    }

    pub fn max_j(&self) -> u32 {
        self.models.iter().map(|m| m.profile.j).max().unwrap_or(0)
    }
}

/// Canonical lattices of all models inside `w`, sorted by encoding.
pub fn enumerate_in_window(m: &PhiModule, e: u32, w: Window, ceiling: usize, limit: usize) -> Result<Vec<Lattice>> {
    if w.is_empty() {
        return Ok(Vec::new());
    }
    let problem = QuotientProblem::new(m, e, w)?;
    if problem.dim() > ceiling {
        return Err(Error::Infeasible { dim: problem.dim(), ceiling });
    }
    let mut out: Vec<Lattice> = problem.closed_subspaces(limit)?.into_iter().map(|s| problem.to_lattice(s)).collect();
    out.sort();
    Ok(out)
}

/// l-dimension of the quotient for a window.
pub fn quotient_dim(m: &PhiModule, w: Window) -> usize {
    if w.is_empty() {
        0
    } else {
        m.ring().l_dim() * m.d() * (w.i1 - w.i2) as usize
    }
}

pub fn enumerate_models(m: &PhiModule, e: u32) -> Result<ModelSet> {
    enumerate_models_with(m, e, EnumOptions::default())
}

pub fn enumerate_models_with(m: &PhiModule, e: u32, opts: EnumOptions) -> Result<ModelSet> {
    let window = bounding_window(m, e).widened(opts.slack);
    let lattices = enumerate_in_window(m, e, window, opts.ceiling, opts.max_models)?;
    let models = lattices
        .into_iter()
        .map(|lattice| annotate(m, e, lattice))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSet { window, quotient_dim: quotient_dim(m, window), e, models })
}

pub fn annotate(m: &PhiModule, e: u32, lattice: Lattice) -> Result<ModelInfo> {
    let freeness = is_free(&lattice);
    let free = freeness.is_free_of_rank(m.d());
    let profile = torsion_profile(&lattice);
    let height_ok = height_condition(m, &lattice, e)?;
    Ok(ModelInfo { lattice, freeness, free, profile, height_ok })
}

/// Exhaustive oracle: every `B[u]`-submodule of the window quotient, kept
/// if it passes [`height_condition`].
pub fn naive_models(m: &PhiModule, e: u32, w: Window, ceiling: usize, limit: usize) -> Result<Vec<Lattice>> {
    if w.is_empty() {
        return Ok(Vec::new());
    }
    let problem = QuotientProblem::new(m, e, w)?;
    if problem.dim() > ceiling {
        return Err(Error::Infeasible { dim: problem.dim(), ceiling });
    }
    let mut out = Vec::new();
    for s in problem.all_submodules(limit)? {
        let lat = problem.to_lattice(s);
        if height_condition(m, &lat, e)? {
            out.push(lat);
        }
    }
    out.sort();
    Ok(out)
}

/// Per-model certificate of the torsion bound and the fine structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCertificate {
    pub torsion: usize,
    pub j: u32,
    pub bound_ok: bool,
    pub equality_ok: bool,
    pub j_claim_ok: bool,
    pub recursion_ok: bool,
    pub inclusion_ok: bool,
    pub height_ok: bool,
}

impl ModelCertificate {
    pub fn ok(&self) -> bool {
        self.bound_ok && self.equality_ok && self.j_claim_ok && self.recursion_ok && self.inclusion_ok && self.height_ok
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionReport {
    /// The bound `f d e / (p - 1)` as a reduced fraction.
    pub bound: (u64, u64),
    pub max_torsion: usize,
    pub certificates: Vec<ModelCertificate>,
    pub counterexamples: Vec<LatticeWire>,
}

impl TorsionReport {
    pub fn ok(&self) -> bool {
        self.counterexamples.is_empty()
    }

    pub fn into_result(self) -> Result<TorsionReport> {
        if let Some(c) = self.counterexamples.first() {
            return Err(Error::Violation(format!("torsion certificate failed for {c:?}")));
        }
        Ok(self)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Check `dim (𝔑/ϖ𝔑)^tors <= f d e/(p-1)`, the torsion equality, the
/// recursion, and `u^{⌊e/(p-1)⌋}(𝔑∩ϖ^nM) ⊆ ϖ^n𝔑` with `p j <= e + j`.
pub fn check_torsion_bound(m: &PhiModule, set: &ModelSet) -> TorsionReport {
    let p = m.ring().p();
    let f = m.ring().f();
    let d = m.d();
    let e = set.e;
    let num = (f * d) as u64 * e as u64;
    let den = p as u64 - 1;
    let g = gcd(num, den).max(1);
    let mut certificates = Vec::new();
    let mut counterexamples = Vec::new();
    for info in &set.models {
        let pr = &info.profile;
        let cert = ModelCertificate {
            torsion: pr.total,
            j: pr.j,
            bound_ok: pr.bound_holds(p, f, d, e),
            equality_ok: pr.equality_holds(),
            j_claim_ok: pr.j_claim_holds(p, e),
            recursion_ok: pr.recursion_holds(),
            inclusion_ok: crate::lattice::top_torsion_killed(&info.lattice, (e / (p - 1)) as usize),
            height_ok: info.height_ok,
        };
        if !cert.ok() {
            counterexamples.push(info.lattice.to_wire());
        }
        certificates.push(cert);
    }
    TorsionReport {
        bound: (num / g, den / g),
        max_torsion: set.models.iter().map(|i| i.profile.total).max().unwrap_or(0),
        certificates,
        counterexamples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoeffRing;
    use crate::phi_module::monomial_module;
    use crate::tower::make_field_tower;
    use std::sync::Arc;

    fn ring(p: u32, f: u32, n: usize) -> CoeffRing {
        CoeffRing::new(Arc::new(make_field_tower(p, f, f).unwrap()), n)
    }

    #[test]
    fn rank_one_window_matches_closed_form() {
        let r = ring(3, 1, 0);
        let w = bounding_window(&monomial_module(&r, 2), 4);
        assert_eq!((w.i2, w.i1), (-1, 1));
        let w = bounding_window(&monomial_module(&r, 0), 1);
        assert_eq!((w.i2, w.i1), (0, 0));
    }

    #[test]
    fn rank_one_counts() {
        let r = ring(3, 1, 0);
        let set = enumerate_models(&monomial_module(&r, 0), 4).unwrap();
        let expect: Vec<_> = (0..3).map(|k| Lattice::u_power(&r, 1, k)).collect();
        assert_eq!(set.lattices(), expect);
        assert_eq!(enumerate_models(&monomial_module(&r, 0), 1).unwrap().len(), 1);
        let set = enumerate_models(&monomial_module(&r, 2), 4).unwrap();
        let expect: Vec<_> = (-1..2).map(|k| Lattice::u_power(&r, 1, k)).collect();
        assert_eq!(set.lattices(), expect);
    }

    #[test]
    fn oracle_agrees_on_rank_one_level_one() {
        let r = ring(3, 1, 1);
        for a in 0..=4 {
            let m = monomial_module(&r, a);
            let w = bounding_window(&m, 4);
            let fast = enumerate_in_window(&m, 4, w, 64, 1000).unwrap();
            let slow = naive_models(&m, 4, w, 64, 1000).unwrap();
            assert_eq!(fast, slow, "a = {a}");
        }
    }

    #[test]
    fn ceiling_reports_dimension() {
        let r = ring(3, 1, 0);
        let m = monomial_module(&r, 0);
        let err = enumerate_models_with(&m, 4, EnumOptions { ceiling: 1, ..Default::default() }).unwrap_err();
        assert_eq!(err, Error::Infeasible { dim: 2, ceiling: 1 });
    }
}
