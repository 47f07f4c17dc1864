//! Lattices `𝔑 ⊆ B((u))^d`, encoded by a window `u^a L_0 ⊆ 𝔑 ⊆ u^b L_0`
//! and the stable subspace `𝔑 / u^a L_0` of the finite quotient.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::coeff::CoeffRing;
use crate::error::{Error, Result};
use crate::field::Fq;
use crate::frame::Frame;
use crate::linalg::Subspace;
use crate::phi_module::{mat_vec, PhiModule};
use crate::series::{LaurentSeries, SeriesMatrix, INF};
use crate::snf::{column_hermite, smith_valuations, solve_lower, PolyMatrix};

/// A full `B[[u]]`-lattice in canonical form: the window is minimal and
/// the subspace is in reduced echelon form, so equal lattices have equal
/// encodings.
#[derive(Clone, Debug)]
pub struct Lattice {
    frame: Frame,
    sub: Subspace,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame && self.sub == other.sub
    }
}

impl Eq for Lattice {}

impl PartialOrd for Lattice {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Encodings compare by window, then rank, then rows.
impl Ord for Lattice {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.frame.b(), self.frame.a(), self.sub.rank())
            .cmp(&(other.frame.b(), other.frame.a(), other.sub.rank()))
            .then_with(|| self.sub.rows().cmp(other.sub.rows()))
    }
}

impl std::hash::Hash for Lattice {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        (self.frame.b(), self.frame.a()).hash(state);
        self.sub.rows().hash(state);
    }
}

impl Lattice {
    /// `L_0 = B[[u]]^d`.
    pub fn standard(ring: &CoeffRing, d: usize) -> Lattice {
        Self::u_power(ring, d, 0)
    }

    /// `u^m L_0`.
    pub fn u_power(ring: &CoeffRing, d: usize, m: i64) -> Lattice {
        let frame = Frame::new(ring.clone(), d, m, m);
        Lattice { sub: Subspace::zero(0), frame }
    }

    /// Validate a subspace of `frame` and bring the window to minimal form.
    pub fn from_parts(frame: Frame, sub: Subspace) -> Result<Lattice> {
        if sub.ambient_dim() != frame.dim() {
            return Err(Error::InvalidParameter("subspace does not live in the frame".into()));
        }
        if !frame.is_submodule(&sub) {
            return Err(Error::InvalidParameter(
                "subspace is not stable under u, ϖ and the idempotents".into(),
            ));
        }
        Ok(Self::shrink(frame, sub))
    }

    fn shrink(mut frame: Frame, mut sub: Subspace) -> Lattice {
        loop {
            let (b, a) = (frame.b(), frame.a());
            if a == b {
                return Lattice { frame: Frame::new(frame.ring().clone(), frame.d(), a, a), sub: Subspace::zero(0) };
            }
            let field = frame.field().clone();
            let top_inside = (0..frame.dim())
                .filter(|&i| frame.decode(i).2 == a - 1)
                .all(|i| sub.contains(&field, &frame.unit_vector(i)));
            if top_inside {
                let nf = Frame::new(frame.ring().clone(), frame.d(), b, a - 1);
                sub = sub.map(&field, nf.dim(), |r| frame.reframe(r, &nf));
                frame = nf;
                continue;
            }
            let bottom_empty = sub
                .rows()
                .iter()
                .all(|r| r.iter().enumerate().all(|(i, &x)| x == 0 || frame.decode(i).2 != b));
            if bottom_empty {
                let nf = Frame::new(frame.ring().clone(), frame.d(), b + 1, a);
                sub = sub.map(&field, nf.dim(), |r| frame.reframe(r, &nf));
                frame = nf;
                continue;
            }
            return Lattice { frame, sub };
        }
    }

    pub fn ring(&self) -> &CoeffRing {
        self.frame.ring()
    }

    pub fn d(&self) -> usize {
        self.frame.d()
    }

    pub fn level(&self) -> usize {
        self.ring().n()
    }

    /// `(b, a)`: `u^a L_0 ⊆ 𝔑 ⊆ u^b L_0`, both tight.
    pub fn window(&self) -> (i64, i64) {
        (self.frame.b(), self.frame.a())
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn subspace(&self) -> &Subspace {
        &self.sub
    }

    /// l-dimension of `𝔑 / u^a L_0`.
    pub fn quotient_rank(&self) -> usize {
        self.sub.rank()
    }

    /// Generators over `B[[u]]`: representatives of the basis rows and `u^a e_c`.
    pub fn generators(&self) -> Vec<Vec<LaurentSeries>> {
        let mut g: Vec<Vec<LaurentSeries>> = self.sub.rows().iter().map(|r| self.frame.to_series(r)).collect();
        let a = self.frame.a();
        for c in 0..self.d() {
            let mut v = vec![LaurentSeries::zero(); self.d()];
            v[c] = LaurentSeries::u_pow(self.ring(), a);
            g.push(v);
        }
        g
    }

    /// The encoding in a wider window `(b', a')` with `b' <= b`, `a' >= a`.
    pub fn widen(&self, b: i64, a: i64) -> (Frame, Subspace) {
        let (b0, a0) = self.window();
        assert!(b <= b0 && a >= a0, "widen must contain the current window");
        let frame = Frame::new(self.ring().clone(), self.d(), b, a);
        let field = frame.field().clone();
        let mut sub = self.sub.map(&field, frame.dim(), |r| self.frame.reframe(r, &frame));
        for idx in 0..frame.dim() {
            if frame.decode(idx).2 >= a0 {
                sub.insert(&field, frame.unit_vector(idx));
            }
        }
        (frame, sub)
    }

    /// `u^k 𝔑`.
    pub fn shift(&self, k: i64) -> Lattice {
        let (b, a) = self.window();
        Lattice { frame: Frame::new(self.ring().clone(), self.d(), b + k, a + k), sub: self.sub.clone() }
    }

    fn check_ambient(&self, other: &Lattice) -> Result<()> {
        if self.ring() != other.ring() || self.d() != other.d() {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }

    /// Is `other ⊆ self`?
    pub fn contains(&self, other: &Lattice) -> Result<bool> {
        self.check_ambient(other)?;
        let (b1, a1) = self.window();
        let (b2, a2) = other.window();
        if b2 < b1 {
            return Ok(false);
        }
        let (b, a) = (b1.min(b2), a1.max(a2));
        let (_, s) = self.widen(b, a);
        let (_, t) = other.widen(b, a);
        Ok(s.contains_subspace(self.frame.field(), &t))
    }

    /// The image in `M_m = M / ϖ^{m+1} M`.
    pub fn reduce_level(&self, m: usize) -> Result<Lattice> {
        if m > self.level() {
            return Err(Error::InvalidParameter(format!("cannot reduce level {} to {m}", self.level())));
        }
        let (b, a) = self.window();
        let target = Frame::new(self.ring().at_level(m), self.d(), b, a);
        let src = &self.frame;
        let img = self.sub.map(target.field(), target.dim(), |r| {
            let mut out = target.zero();
            for (idx, &x) in r.iter().enumerate() {
                let (i, w, t, c) = src.decode(idx);
                if x != 0 && w <= m {
                    out[target.index(i, w, t, c)] = x;
                }
            }
            out
        });
        Ok(Self::shrink(target, img))
    }

    /// `P 𝔑` for an invertible matrix `P`.
    pub fn apply_linear(&self, p: &SeriesMatrix) -> Result<Lattice> {
        let r = self.ring();
        let gens: Vec<_> = self.generators().iter().map(|g| mat_vec(r, p, g)).collect();
        canonicalize(r, self.d(), &gens)
    }

    pub fn to_wire(&self) -> LatticeWire {
        let t = self.ring().tower();
        let field = self.frame.field();
        LatticeWire {
            p: t.p(),
            f: t.f() as u32,
            g: t.g() as u32,
            n: self.level() as u32,
            d: self.d() as u32,
            b: self.frame.b(),
            a: self.frame.a(),
            rows: self
                .sub
                .rows()
                .iter()
                .map(|r| r.iter().flat_map(|&x| field.digits(x)).collect())
                .collect(),
        }
    }

    pub fn from_wire(ring: &CoeffRing, wire: &LatticeWire) -> Result<Lattice> {
        let t = ring.tower();
        if (wire.p, wire.f as usize, wire.g as usize, wire.n as usize) != (t.p(), t.f(), t.g(), ring.n()) {
            return Err(Error::Format("lattice header does not match the ring".into()));
        }
        if wire.a < wire.b {
            return Err(Error::Format("inverted window".into()));
        }
        let frame = Frame::new(ring.clone(), wire.d as usize, wire.b, wire.a);
        let g = t.g();
        let field = frame.field().clone();
        let mut rows = Vec::new();
        for r in &wire.rows {
            if r.len() != frame.dim() * g {
                return Err(Error::Format("row has the wrong length".into()));
            }
            rows.push(r.chunks(g).map(|c| field.from_digits(c)).collect::<Result<Vec<Fq>>>()?);
        }
        let sub = Subspace::spanned(&field, frame.dim(), rows);
        let lat = Lattice::from_parts(frame, sub)?;
        if lat.to_wire() != *wire {
            return Err(Error::Format("encoding is not canonical".into()));
        }
        Ok(lat)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeWire {
    pub p: u32,
    pub f: u32,
    pub g: u32,
    pub n: u32,
    pub d: u32,
    pub b: i64,
    pub a: i64,
    /// Basis rows, each entry as `g` base-p digits.
    pub rows: Vec<Vec<u32>>,
}

/// Mod-ϖ reduction of factor `i` of generator columns, shifted by `u^{-b}`.
fn residue_matrix(ring: &CoeffRing, d: usize, gens: &[Vec<LaurentSeries>], i: usize, b: i64, prec: usize) -> PolyMatrix {
    let mut m = PolyMatrix::zeros(d, gens.len(), prec);
    let ix = ring.idx(i, 0);
    for (c, g) in gens.iter().enumerate() {
        for (r, s) in g.iter().enumerate() {
            for (t, e) in s.terms() {
                let k = t - b;
                if k >= 0 && (k as usize) < prec && e[ix] != 0 {
                    m.set_coeff(r, c, k as usize, e[ix]);
                }
            }
        }
    }
    m
}

/// The lattice generated by arbitrary vectors.
pub fn canonicalize(ring: &CoeffRing, d: usize, gens: &[Vec<LaurentSeries>]) -> Result<Lattice> {
    canonicalize_with_bound(ring, d, gens, None)
}

/// As [`canonicalize`], with an optional exponent `t` believed to satisfy
/// `u^t L_0 ⊆ 𝔑`; it is verified, never trusted.
pub fn canonicalize_with_bound(ring: &CoeffRing, d: usize, gens: &[Vec<LaurentSeries>], bound: Option<i64>) -> Result<Lattice> {
    if gens.iter().any(|g| g.len() != d) {
        return Err(Error::InvalidParameter("generator of the wrong length".into()));
    }
    let lb = gens.iter().flatten().map(LaurentSeries::lower_bound).min().unwrap_or(INF);
    if lb >= INF {
        return Err(Error::NotFull);
    }
    let b = gens.iter().flatten().filter_map(LaurentSeries::valuation).min().ok_or(Error::NotFull)?;
    let exact = gens.iter().flatten().all(LaurentSeries::is_exact);
    let known = gens.iter().flatten().map(LaurentSeries::known_until).min().unwrap_or(INF);
    let top = gens.iter().flatten().filter_map(LaurentSeries::degree).max().unwrap_or(b);
    // the determinant of any d x d minor has valuation at most d (top - b)
    let span = if exact { (d as i64) * (top - b) + 1 } else { known - b };
    if span <= 0 {
        return Err(Error::NeedsPrecision("generators carry no visible coefficients".into()));
    }
    let field = ring.l();
    let mut c_max = 0i64;
    for i in 0..ring.f() {
        let (vals, _) = smith_valuations(field, residue_matrix(ring, d, gens, i, b, span as usize));
        if vals.len() < d || vals.iter().any(Option::is_none) {
            return Err(if exact { Error::NotFull } else { Error::NeedsPrecision("rank undetermined".into()) });
        }
        c_max = c_max.max(vals.iter().map(|v| v.unwrap() as i64).max().unwrap_or(0));
    }
    // u^c L_0 ⊆ 𝔑 + ϖM with c = b + c_max; lifting through the ϖ-adic
    // filtration costs (c - b) per step and gives u^{c + (c-b)(n+1)} L_0 ⊆ 𝔑
    let c = b + c_max;
    let mut hi = c + (c - b) * ring.n() as i64 + c_max;
    if let Some(t) = bound {
        if t >= b && t < hi && contains_layer(ring, d, gens, b, t)? {
            hi = t;
        }
    }
    let mut lo = b;
    if !contains_layer(ring, d, gens, b, hi)? {
        return Err(Error::Violation(format!("u^{hi} L_0 not contained in generated lattice")));
    }
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if contains_layer(ring, d, gens, b, mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let frame = Frame::new(ring.clone(), d, b, hi);
    let proj = project_all(&frame, gens)?;
    let sub = frame.module_span(&proj);
    Ok(Lattice::shrink(frame, sub))
}

fn project_all(frame: &Frame, gens: &[Vec<LaurentSeries>]) -> Result<Vec<Vec<Fq>>> {
    gens.iter()
        .map(|g| {
            let p = frame.project(g)?;
            debug_assert!(!p.escaped);
            Ok(p.coords)
        })
        .collect()
}

/// Nakayama test: `u^t L_0 ⊆ 𝔑` iff `u^t L_0 ⊆ 𝔑 + u^{t+1} L_0`.
fn contains_layer(ring: &CoeffRing, d: usize, gens: &[Vec<LaurentSeries>], b: i64, t: i64) -> Result<bool> {
    let frame = Frame::new(ring.clone(), d, b, t + 1);
    let span = frame.module_span(&project_all(&frame, gens)?);
    let field = frame.field();
    Ok((0..frame.dim())
        .filter(|&i| frame.decode(i).2 == t)
        .all(|i| span.contains(field, &frame.unit_vector(i))))
}

/// `Φ(φ^* 𝔑)`: the `B[[u]]`-span of `C φ(g)` over generators `g`.
pub fn phi_image(m: &PhiModule, n: &Lattice) -> Result<Lattice> {
    if m.ring() != n.ring() || m.d() != n.d() {
        return Err(Error::AmbientMismatch);
    }
    let gens: Vec<_> = n.generators().iter().map(|g| m.phi(g)).collect();
    // 𝔑 ⊇ u^a L_0 gives Φ(φ^*𝔑) ⊇ u^{pa} C L_0 ⊇ u^{pa + β} L_0
    let bound = m.ring().p() as i64 * n.window().1 + m.beta();
    canonicalize_with_bound(m.ring(), m.d(), &gens, Some(bound))
}

/// `u^e 𝔑 ⊆ Φ(φ^* 𝔑) ⊆ 𝔑`.
pub fn height_condition(m: &PhiModule, n: &Lattice, e: u32) -> Result<bool> {
    let img = phi_image(m, n)?;
    Ok(n.contains(&img)? && img.contains(&n.shift(e as i64))?)
}

/// `u^k 𝔑 ⊆ Φ(φ^* 𝔑) ⊆ u^{-k} 𝔑`.
pub fn bounded_condition(m: &PhiModule, n: &Lattice, k: u32) -> Result<bool> {
    let img = phi_image(m, n)?;
    Ok(n.shift(-(k as i64)).contains(&img)? && img.contains(&n.shift(k as i64))?)
}

/// Per CRT factor: minimal generator count and freeness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Freeness {
    pub generators: Vec<usize>,
    pub free: Vec<bool>,
}

impl Freeness {
    /// Free of rank `d` over `B[[u]]`: free of rank `d` in every factor.
    pub fn is_free_of_rank(&self, d: usize) -> bool {
        self.free.iter().all(|&f| f) && self.generators.iter().all(|&g| g == d)
    }

    /// `(free, rank)` in the sense of a single `B[[u]]`-module.
    pub fn verdict(&self) -> (bool, Option<usize>) {
        let g = self.generators[0];
        let free = self.free.iter().all(|&f| f) && self.generators.iter().all(|&x| x == g);
        (free, free.then_some(g))
    }
}

fn factor_dim(frame: &Frame, s: &Subspace, sub: &Subspace, i: usize) -> usize {
    let field = frame.field();
    let ri = frame.factor_range(i);
    let count = |x: &Subspace| x.rows().iter().filter(|r| r[ri.clone()].iter().any(|&v| v != 0)).count();
    count(s) - count(&s.intersect(field, sub))
}

/// Minimal generator counts `dim 𝔑_i / (ϖ, u) 𝔑_i` per factor.
pub fn minimal_generators(n: &Lattice) -> Vec<usize> {
    let (b, a) = n.window();
    let (frame, s) = n.widen(b, a + 1);
    let field = frame.field();
    let mut rad = s.map(field, frame.dim(), |r| frame.mul_u(r));
    for r in s.rows() {
        rad.insert(field, frame.mul_varpi(r));
    }
    (0..n.ring().f()).map(|i| factor_dim(&frame, &s, &rad, i)).collect()
}

/// Length criterion: with `g` minimal generators, `𝔑_i` is free iff
/// `dim_l 𝔑_i / u^T 𝔑_i = g T (n+1)`, evaluated at `T = (a - b) + n + 2`.
pub fn is_free(n: &Lattice) -> Freeness {
    let generators = minimal_generators(n);
    let (b, a) = n.window();
    let t = (a - b) + n.level() as i64 + 2;
    let (frame, s) = n.widen(b, a + t);
    let field = frame.field();
    let ut = s.map(field, frame.dim(), |r| frame.u_pow(r, t as usize));
    let w = n.ring().width() as i64;
    let free = (0..n.ring().f())
        .map(|i| factor_dim(&frame, &s, &ut, i) as i64 == generators[i] as i64 * t * w)
        .collect();
    Freeness { generators, free }
}

/// Lifts of a basis of `𝔑_i / (ϖ, u) 𝔑_i`, as series vectors supported in factor `i`.
pub fn minimal_generating_set(n: &Lattice, i: usize) -> Vec<Vec<LaurentSeries>> {
    let (b, a) = n.window();
    let (frame, s) = n.widen(b, a + 1);
    let field = frame.field().clone();
    let mut rad = s.map(&field, frame.dim(), |r| frame.mul_u(r));
    for r in s.rows() {
        rad.insert(&field, frame.mul_varpi(r));
    }
    let mut chosen = rad.clone();
    let mut out = Vec::new();
    for r in s.rows() {
        let v = frame.project_factor(r, i);
        if chosen.insert(&field, v.clone()).is_some() {
            out.push(frame.to_series(&v));
        }
    }
    out
}

/// Direct freeness test: a minimal generating set of `d` elements spans a
/// free module iff its determinant is a unit in `B_i((u))`, i.e. has a
/// nonzero reduction modulo `ϖ`.
pub fn is_free_direct(n: &Lattice) -> Vec<bool> {
    let ring = n.ring();
    (0..ring.f())
        .map(|i| {
            let gens = minimal_generating_set(n, i);
            if gens.len() != n.d() {
                return false;
            }
            let cols: Vec<Vec<LaurentSeries>> = (0..n.d()).map(|r| gens.iter().map(|g| g[r].clone()).collect()).collect();
            let det = SeriesMatrix::from_rows(cols).det(ring);
            let ix = ring.idx(i, 0);
            let unit = det.terms().any(|(_, e)| e[ix] != 0);
            unit
        })
        .collect()
}

/// The `ϖ`-graded piece `(𝔑 ∩ ϖ^k M) / (𝔑 ∩ ϖ^{k+1} M)` as an `l[[u]]`-lattice
/// in `ϖ^k M / ϖ^{k+1} M ≅ M / ϖ M`.
pub fn graded_piece(n: &Lattice, k: usize) -> Result<Lattice> {
    if k > n.level() {
        return Err(Error::InvalidParameter(format!("graded piece {k} beyond level {}", n.level())));
    }
    let (b, a) = n.window();
    let src = &n.frame;
    let field = src.field();
    let nk = n.sub.intersect(field, &src.varpi_filtration(k));
    let target = Frame::new(n.ring().at_level(0), n.d(), b, a);
    let img = nk.map(field, target.dim(), |r| {
        let mut out = target.zero();
        for (idx, &x) in r.iter().enumerate() {
            let (i, w, t, c) = src.decode(idx);
            if x != 0 && w == k {
                out[target.index(i, 0, t, c)] = x;
            }
        }
        out
    });
    Ok(Lattice::shrink(target, img))
}

/// Relative elementary divisors of `b` with respect to `a`, per CRT factor
/// (sorted), for lattices over the residue level `n = 0`.
pub fn elementary_divisors(a: &Lattice, b: &Lattice) -> Result<Vec<Vec<i64>>> {
    a.check_ambient(b)?;
    if a.level() != 0 {
        return Err(Error::InvalidParameter("elementary divisors need level 0; take graded pieces first".into()));
    }
    let ring = a.ring();
    let field = ring.l();
    let d = a.d();
    let (ba, aa) = a.window();
    let (bb, ab) = b.window();
    // scale so that u^s b ⊆ u^{b_a} L_0 ... ⊆ a
    let s = (aa - bb).max(0);
    let prec = (2 * (aa - ba) + (ab - bb) + 2 * s + 8) as usize;
    let ga = a.generators();
    let gb: Vec<Vec<LaurentSeries>> = b.generators().iter().map(|g| g.iter().map(|x| x.shift(s)).collect()).collect();
    let mut out = Vec::with_capacity(ring.f());
    for i in 0..ring.f() {
        let ma = residue_matrix(ring, d, &ga, i, ba, prec);
        let mb = residue_matrix(ring, d, &gb, i, ba, prec);
        let (h, p1) = column_hermite(field, ma)?;
        let (x, p2) = solve_lower(field, &h, &mb, p1)?;
        let (vals, p3) = smith_valuations(field, x);
        let mut divs = Vec::with_capacity(d);
        for v in vals.iter().take(d) {
            match v {
                Some(v) if *v < p2.min(p3 + *v) => divs.push(*v as i64 - s),
                _ => return Err(Error::NeedsPrecision("elementary divisor beyond precision".into())),
            }
        }
        divs.sort();
        out.push(divs);
    }
    Ok(out)
}

/// The structure of `𝔑/ϖ𝔑` following the ϖ-adic filtration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorsionProfile {
    /// `G_i = dim (𝔑∩ϖ^iM) / (ϖ𝔑∩ϖ^iM + 𝔑∩ϖ^{i+1}M)` for `i = 1..=n`.
    pub graded: Vec<usize>,
    /// `X_i = dim (𝔑∩ϖ^iM) / (ϖ^i𝔑 + 𝔑∩ϖ^{i+1}M)` for `i = 1..=n`.
    pub combined: Vec<usize>,
    /// `sum_i G_i`.
    pub total: usize,
    /// `dim (𝔑∩ϖ^nM) / ϖ^n𝔑`.
    pub top: usize,
    /// `dim (𝔑/ϖ𝔑)^tors` counted directly from lengths of `𝔑/(ϖ𝔑 + u^T𝔑)`.
    pub direct: usize,
    /// Minimal `j` with `u^j (𝔑∩ϖ^nM) ⊆ ϖ^n𝔑`.
    pub j: u32,
    /// u-elementary divisors of the torsion, per CRT factor, sorted.
    pub classes: Vec<Vec<u32>>,
}

impl TorsionProfile {
    /// `X_i + G_{i+1} = X_{i+1}` for `1 <= i <= n-1` (and `X_1 = G_1`).
    pub fn recursion_holds(&self) -> bool {
        let n = self.graded.len();
        if n == 0 {
            return true;
        }
        self.combined[0] == self.graded[0]
            && (1..n).all(|i| self.combined[i - 1] + self.graded[i] == self.combined[i])
    }

    pub fn equality_holds(&self) -> bool {
        self.total == self.top && self.direct == self.total
    }

    pub fn bound_holds(&self, p: u32, f: usize, d: usize, e: u32) -> bool {
        (self.total as u64) * (p as u64 - 1) <= (f * d) as u64 * e as u64
    }

    /// `j <= floor(e/(p-1))` and `p j <= e + j`.
    pub fn j_claim_holds(&self, p: u32, e: u32) -> bool {
        self.j <= e / (p - 1) && p * self.j <= e + self.j
    }
}

/// Is `u^k (𝔑 ∩ ϖ^n M) ⊆ ϖ^n 𝔑`?
pub fn top_torsion_killed(n: &Lattice, k: usize) -> bool {
    let frame = &n.frame;
    let field = frame.field();
    let lvl = n.level();
    let top = n.sub.intersect(field, &frame.varpi_filtration(lvl));
    let vn = n.sub.map(field, frame.dim(), |r| frame.varpi_pow(r, lvl));
    top.rows().iter().all(|r| vn.contains(field, &frame.u_pow(r, k)))
}

pub fn torsion_profile(n: &Lattice) -> TorsionProfile {
    let frame = &n.frame;
    let field = frame.field().clone();
    let lvl = n.level();
    let s = &n.sub;
    let filt: Vec<Subspace> = (0..=lvl + 1)
        .map(|k| if k > lvl { Subspace::zero(frame.dim()) } else { s.intersect(&field, &frame.varpi_filtration(k)) })
        .collect();
    let vs = s.map(&field, frame.dim(), |r| frame.mul_varpi(r));
    let mut graded = Vec::with_capacity(lvl);
    let mut combined = Vec::with_capacity(lvl);
    for k in 1..=lvl {
        let vk = s.map(&field, frame.dim(), |r| frame.varpi_pow(r, k));
        let x_den = vk.sum(&field, &filt[k + 1]);
        combined.push(filt[k].rank() - x_den.rank());
        let g_den = vs.intersect(&field, &frame.varpi_filtration(k)).sum(&field, &filt[k + 1]);
        graded.push(filt[k].rank() - g_den.rank());
    }
    let total = graded.iter().sum();
    let top = if lvl == 0 {
        0
    } else {
        let vn = s.map(&field, frame.dim(), |r| frame.varpi_pow(r, lvl));
        filt[lvl].rank() - vn.rank()
    };
    let span = (frame.a() - frame.b()).max(0) as usize;
    let j = (0..=span).find(|&k| top_torsion_killed(n, k)).unwrap_or(span) as u32;
    let classes = torsion_classes(n);
    let direct = classes.iter().flatten().map(|&c| c as usize).sum();
    TorsionProfile { graded, combined, total, top, direct, j, classes }
}

/// `dim_i 𝔑/(ϖ𝔑 + u^T𝔑)` grows by `d + #{c > T}` from `T` to `T + 1`, where
/// `c` runs over the torsion exponents; read off the exponents.
fn torsion_classes(n: &Lattice) -> Vec<Vec<u32>> {
    let d = n.d();
    let f = n.ring().f();
    let (b, a) = n.window();
    let mut counts_above: Vec<Vec<usize>> = vec![Vec::new(); f];
    let mut prev = vec![0usize; f];
    let mut t = 1usize;
    loop {
        let (frame, s) = n.widen(b, a + t as i64);
        let field = frame.field();
        let mut den = s.map(field, frame.dim(), |r| frame.mul_varpi(r));
        for r in s.rows() {
            den.insert(field, frame.u_pow(r, t));
        }
        let mut done = true;
        for i in 0..f {
            let cur = factor_dim(&frame, &s, &den, i);
            let above = cur - prev[i] - d;
            counts_above[i].push(above);
            prev[i] = cur;
            done &= above == 0;
        }
        if done {
            break;
        }
        t += 1;
    }
    counts_above
        .iter()
        .map(|ca| {
            // ca[T] = #{c > T}
            let mut out = Vec::new();
            for (tt, &k) in ca.iter().enumerate() {
                let next = ca.get(tt + 1).copied().unwrap_or(0);
                out.extend(std::iter::repeat_n((tt + 1) as u32, k - next));
            }
            out
        })
        .collect()
}
