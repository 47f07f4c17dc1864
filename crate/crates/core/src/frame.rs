//! Coordinates on the finite quotient `u^b L_0 / u^a L_0`.
//!
//! `L_0 = B[[u]]^d` is the standard lattice. The quotient has l-basis
//! `ε_i ϖ^w u^t e_c` for CRT factor `i`, `0 <= w <= n`, `b <= t < a` and
//! coordinate `c`, ordered lexicographically in that order (factor most
//! significant, coordinate least).

use crate::coeff::CoeffRing;
use crate::error::{Error, Result};
use crate::field::{Field, Fq};
use crate::linalg::Subspace;
use crate::series::LaurentSeries;

/// A semilinear operator in quotient coordinates; `None` means the image escapes.
pub type CoordOp<'a> = dyn Fn(&[Fq]) -> Option<Vec<Fq>> + 'a;

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    ring: CoeffRing,
    d: usize,
    b: i64,
    a: i64,
}

/// A projection of a series vector: the quotient coordinates plus whether
/// anything fell below `u^b`.
pub struct Projected {
    pub coords: Vec<Fq>,
    pub escaped: bool,
}

impl Frame {
    pub fn new(ring: CoeffRing, d: usize, b: i64, a: i64) -> Self {
        assert!(a >= b, "window ({b}, {a}) is inverted");
        Frame { ring, d, b, a }
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn field(&self) -> &Field {
        self.ring.l()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> i64 {
        self.b
    }

    pub fn a(&self) -> i64 {
        self.a
    }

    pub fn span(&self) -> usize {
        (self.a - self.b) as usize
    }

    pub fn dim(&self) -> usize {
        self.ring.l_dim() * self.span() * self.d
    }

    #[inline]
    pub fn index(&self, factor: usize, w: usize, t: i64, c: usize) -> usize {
        debug_assert!(t >= self.b && t < self.a);
        ((factor * self.ring.width() + w) * self.span() + (t - self.b) as usize) * self.d + c
    }

    /// `(factor, w, t, c)` of a basis index.
    pub fn decode(&self, idx: usize) -> (usize, usize, i64, usize) {
        let c = idx % self.d;
        let rest = idx / self.d;
        let t = (rest % self.span()) as i64 + self.b;
        let rest = rest / self.span();
        let w = rest % self.ring.width();
        (rest / self.ring.width(), w, t, c)
    }

    pub fn factor_range(&self, i: usize) -> std::ops::Range<usize> {
        let block = self.ring.width() * self.span() * self.d;
        i * block..(i + 1) * block
    }

    pub fn zero(&self) -> Vec<Fq> {
        vec![0; self.dim()]
    }

    pub fn unit_vector(&self, idx: usize) -> Vec<Fq> {
        let mut v = self.zero();
        v[idx] = 1;
        v
    }

    /// Multiplication by `u` (the top exponent falls into `u^a L_0`).
    pub fn mul_u(&self, v: &[Fq]) -> Vec<Fq> {
        let mut out = self.zero();
        let d = self.d;
        let span = self.span();
        for (blk, chunk) in v.chunks(span * d).enumerate() {
            let base = blk * span * d;
            out[base + d..base + span * d].copy_from_slice(&chunk[..(span - 1) * d]);
        }
        out
    }

    pub fn mul_varpi(&self, v: &[Fq]) -> Vec<Fq> {
        let mut out = self.zero();
        let layer = self.span() * self.d;
        let w = self.ring.width();
        for i in 0..self.ring.f() {
            for k in 0..w - 1 {
                let src = (i * w + k) * layer;
                let dst = src + layer;
                out[dst..dst + layer].copy_from_slice(&v[src..src + layer]);
            }
        }
        out
    }

    pub fn varpi_pow(&self, v: &[Fq], k: usize) -> Vec<Fq> {
        (0..k).fold(v.to_vec(), |x, _| self.mul_varpi(&x))
    }

    pub fn u_pow(&self, v: &[Fq], k: usize) -> Vec<Fq> {
        (0..k).fold(v.to_vec(), |x, _| self.mul_u(&x))
    }

    /// Component in CRT factor `i`.
    pub fn project_factor(&self, v: &[Fq], i: usize) -> Vec<Fq> {
        let mut out = self.zero();
        let r = self.factor_range(i);
        out[r.clone()].copy_from_slice(&v[r]);
        out
    }

    /// The subspace of vectors with `ϖ`-power at least `k` (the image of `ϖ^k M`).
    pub fn varpi_filtration(&self, k: usize) -> Subspace {
        let mut rows = Vec::new();
        for idx in 0..self.dim() {
            if self.decode(idx).1 >= k {
                rows.push(self.unit_vector(idx));
            }
        }
        Subspace::spanned(self.field(), self.dim(), rows)
    }

    /// The representative series vector with exponents in `[b, a)`.
    pub fn to_series(&self, v: &[Fq]) -> Vec<LaurentSeries> {
        let mut terms: Vec<Vec<(i64, crate::coeff::Elem)>> = vec![Vec::new(); self.d];
        for (idx, &x) in v.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let (i, w, t, c) = self.decode(idx);
            let mut e = self.ring.zero();
            e[self.ring.idx(i, w)] = x;
            terms[c].push((t, e));
        }
        terms.iter().map(|t| LaurentSeries::from_terms(&self.ring, t, None)).collect()
    }

    /// Reduce a series vector modulo `u^a L_0`; fails if a needed
    /// coefficient below `u^a` is unknown.
    pub fn project(&self, x: &[LaurentSeries]) -> Result<Projected> {
        let mut coords = self.zero();
        let mut escaped = false;
        for (c, s) in x.iter().enumerate() {
            if s.known_until() < self.a {
                return Err(Error::NeedsPrecision(format!(
                    "series known below u^{} but the quotient needs u^{}",
                    s.known_until(),
                    self.a
                )));
            }
            for (t, e) in s.terms() {
                if t >= self.a {
                    break;
                }
                if t < self.b {
                    escaped = true;
                    continue;
                }
                for i in 0..self.ring.f() {
                    for w in 0..self.ring.width() {
                        let val = e[self.ring.idx(i, w)];
                        if val != 0 {
                            coords[self.index(i, w, t, c)] = val;
                        }
                    }
                }
            }
        }
        Ok(Projected { coords, escaped })
    }

    /// Re-express `v` in another frame over the same ring and rank,
    /// dropping coordinates outside it.
    pub fn reframe(&self, v: &[Fq], other: &Frame) -> Vec<Fq> {
        let mut out = other.zero();
        for (idx, &x) in v.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let (i, w, t, c) = self.decode(idx);
            if t >= other.b && t < other.a {
                out[other.index(i, w, t, c)] = x;
            }
        }
        out
    }

    /// The image of `u^t L_0` for `b <= t <= a`.
    pub fn standard(&self, t: i64) -> Subspace {
        let rows = (0..self.dim()).filter(|&idx| self.decode(idx).2 >= t).map(|idx| self.unit_vector(idx));
        Subspace::spanned(self.field(), self.dim(), rows)
    }

    /// Add the factor components of `v` to `s`; returns the new basis rows.
    fn insert_split(&self, s: &mut Subspace, v: &[Fq], out: &mut Vec<Vec<Fq>>) {
        let field = self.ring.l();
        for i in 0..self.ring.f() {
            let r = self.factor_range(i);
            if v[r.clone()].iter().any(|&x| x != 0) {
                if let Some(row) = s.insert(field, self.project_factor(v, i)) {
                    out.push(row);
                }
            }
        }
    }

    /// Smallest subspace containing `start` and `seeds` that is stable under
    /// `u`, `ϖ`, the CRT idempotents and every operator in `ops`. An operator
    /// returning `None` marks its input as leaving the admissible range; the
    /// closure is then `None`.
    pub fn close(&self, start: &Subspace, seeds: &[Vec<Fq>], ops: &[&CoordOp]) -> Option<Subspace> {
        let mut s = start.clone();
        let mut queue = Vec::new();
        for v in seeds {
            self.insert_split(&mut s, v, &mut queue);
        }
        while let Some(x) = queue.pop() {
            let u = self.mul_u(&x);
            self.insert_split(&mut s, &u, &mut queue);
            if self.ring.n() > 0 {
                let w = self.mul_varpi(&x);
                self.insert_split(&mut s, &w, &mut queue);
            }
            for op in ops {
                let y = op(&x)?;
                self.insert_split(&mut s, &y, &mut queue);
            }
        }
        Some(s)
    }

    /// The `B[u]`-submodule generated by `seeds`.
    pub fn module_span(&self, seeds: &[Vec<Fq>]) -> Subspace {
        self.close(&Subspace::zero(self.dim()), seeds, &[]).expect("no partial operators")
    }

    /// Is `s` stable under `u`, `ϖ` and the idempotents?
    pub fn is_submodule(&self, s: &Subspace) -> bool {
        let field = self.field();
        s.rows().iter().all(|r| {
            s.contains(field, &self.mul_u(r))
                && s.contains(field, &self.mul_varpi(r))
                && (0..self.ring.f()).all(|i| s.contains(field, &self.project_factor(r, i)))
        })
    }
}
