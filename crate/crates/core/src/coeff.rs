//! The coefficient ring `B_n = l[ϖ]/ϖ^{n+1} ⊗_{F_p} k`, stored in CRT
//! coordinates: `f` factors, each a truncated polynomial in `ϖ` over `l`.
//!
//! An element is a flat `Vec<Fq>` of length `f * (n + 1)`; entry
//! `i * (n + 1) + w` is the `ϖ^w` coefficient in factor `i`. Factor `i`
//! corresponds to the embedding `psi_i` of [`FieldTower`]. Frobenius acts as
//! `(φ x)_i = x_{(i + 1) mod f}`.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{Field, Fq};
use crate::tower::FieldTower;

pub type Elem = Vec<Fq>;

#[derive(Clone, Debug)]
pub struct CoeffRing {
    tower: Arc<FieldTower>,
    n: usize,
}

impl PartialEq for CoeffRing {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.tower.p() == other.tower.p()
            && self.tower.f() == other.tower.f()
            && self.tower.g() == other.tower.g()
    }
}

impl CoeffRing {
    pub fn new(tower: Arc<FieldTower>, n: usize) -> Self {
        CoeffRing { tower, n }
    }

    pub fn tower(&self) -> &Arc<FieldTower> {
        &self.tower
    }

    pub fn l(&self) -> &Field {
        self.tower.l()
    }

    pub fn p(&self) -> u32 {
        self.tower.p()
    }

    /// Number of CRT factors.
    pub fn f(&self) -> usize {
        self.tower.f()
    }

    /// ϖ-depth: `ϖ^{n+1} = 0`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `n + 1`, the l-dimension of one factor.
    pub fn width(&self) -> usize {
        self.n + 1
    }

    /// Total l-dimension `f (n + 1)`.
    pub fn l_dim(&self) -> usize {
        self.f() * self.width()
    }

    pub fn at_level(&self, m: usize) -> CoeffRing {
        CoeffRing { tower: self.tower.clone(), n: m }
    }

    #[inline]
    pub fn idx(&self, factor: usize, w: usize) -> usize {
        factor * (self.n + 1) + w
    }

    pub fn zero(&self) -> Elem {
        vec![0; self.l_dim()]
    }

    pub fn one(&self) -> Elem {
        self.from_l(1)
    }

    /// The image of `x ∈ l` (same value in every factor).
    pub fn from_l(&self, x: Fq) -> Elem {
        let mut e = self.zero();
        for i in 0..self.f() {
            e[self.idx(i, 0)] = x;
        }
        e
    }

    /// The image of `a ∈ k`: `psi_i(a)` in factor `i`.
    pub fn from_k(&self, a: Fq) -> Elem {
        let mut e = self.zero();
        for i in 0..self.f() {
            e[self.idx(i, 0)] = self.tower.embed(i, a);
        }
        e
    }

    pub fn varpi(&self) -> Elem {
        let mut e = self.zero();
        if self.n >= 1 {
            for i in 0..self.f() {
                e[self.idx(i, 1)] = 1;
            }
        }
        e
    }

    /// Idempotent of CRT factor `i`.
    pub fn idempotent(&self, i: usize) -> Elem {
        let mut e = self.zero();
        e[self.idx(i, 0)] = 1;
        e
    }

    pub fn is_zero(&self, a: &Elem) -> bool {
        a.iter().all(|&x| x == 0)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        let l = self.l();
        a.iter().zip(b).map(|(&x, &y)| l.add(x, y)).collect()
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        let l = self.l();
        a.iter().zip(b).map(|(&x, &y)| l.sub(x, y)).collect()
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        let l = self.l();
        a.iter().map(|&x| l.neg(x)).collect()
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let l = self.l();
        let w = self.width();
        let mut out = self.zero();
        for i in 0..self.f() {
            let base = i * w;
            for s in 0..w {
                let x = a[base + s];
                if x == 0 {
                    continue;
                }
                for t in 0..w - s {
                    let y = b[base + t];
                    if y != 0 {
                        let o = &mut out[base + s + t];
                        *o = l.add(*o, l.mul(x, y));
                    }
                }
            }
        }
        out
    }

    /// Multiply by the scalar `c ∈ l`.
    pub fn scale(&self, a: &Elem, c: Fq) -> Elem {
        let l = self.l();
        a.iter().map(|&x| l.mul(x, c)).collect()
    }

    /// Frobenius: identity on `l[ϖ]`, `x ↦ x^p` on `k`; cyclic shift of factors.
    pub fn phi(&self, a: &Elem) -> Elem {
        self.phi_pow(a, 1)
    }

    /// `φ^k` for any integer `k` (negative powers invert the shift).
    pub fn phi_pow(&self, a: &Elem, k: i64) -> Elem {
        let f = self.f() as i64;
        let w = self.width();
        let mut out = self.zero();
        for i in 0..f {
            let src = (i + k).rem_euclid(f) as usize;
            out[i as usize * w..(i as usize + 1) * w].copy_from_slice(&a[src * w..(src + 1) * w]);
        }
        out
    }

    /// A unit iff every factor has a nonzero constant term.
    pub fn is_unit(&self, a: &Elem) -> bool {
        (0..self.f()).all(|i| a[self.idx(i, 0)] != 0)
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem> {
        if !self.is_unit(a) {
            return Err(Error::NotInvertible);
        }
        let l = self.l();
        let w = self.width();
        let mut out = self.zero();
        for i in 0..self.f() {
            let base = i * w;
            let c0inv = l.inv(a[base]);
            // solve (sum a_s ϖ^s)(sum b_t ϖ^t) = 1 term by term
            out[base] = c0inv;
            for t in 1..w {
                let mut acc = 0;
                for s in 1..=t {
                    acc = l.add(acc, l.mul(a[base + s], out[base + t - s]));
                }
                out[base + t] = l.neg(l.mul(acc, c0inv));
            }
        }
        Ok(out)
    }

    /// Kill `ϖ^{m+1}`.
    pub fn reduce(&self, a: &Elem, m: usize) -> Elem {
        let target = self.at_level(m);
        let mut out = target.zero();
        for i in 0..self.f() {
            for w in 0..=m.min(self.n) {
                out[target.idx(i, w)] = a[self.idx(i, w)];
            }
        }
        out
    }

    /// The element of this ring with the given `ϖ`-digits of a lower-level element.
    pub fn lift_from(&self, a: &Elem, m: usize) -> Elem {
        let src = self.at_level(m);
        let mut out = self.zero();
        for i in 0..self.f() {
            for w in 0..=m.min(self.n) {
                out[self.idx(i, w)] = a[src.idx(i, w)];
            }
        }
        out
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        let q = self.l().order();
        (0..self.l_dim()).map(|_| rng.gen_range(0..q) as Fq).collect()
    }

    pub fn random_unit<R: Rng + ?Sized>(&self, rng: &mut R) -> Elem {
        let q = self.l().order();
        let mut e = self.random(rng);
        for i in 0..self.f() {
            e[self.idx(i, 0)] = rng.gen_range(1..q) as Fq;
        }
        e
    }

    /// Convert from the tensor basis `sum_j x_j ⊗ y^j`, `x_j ∈ l[ϖ]/ϖ^{n+1}`
    /// given as `tensor[j][w]`, to CRT coordinates.
    pub fn from_tensor(&self, tensor: &[Vec<Fq>]) -> Elem {
        let l = self.l();
        let roots = self.tower.roots();
        let mut out = self.zero();
        for (i, &r) in roots.iter().enumerate() {
            let mut rj = 1;
            for xj in tensor {
                for w in 0..self.width() {
                    let o = &mut out[self.idx(i, w)];
                    *o = l.add(*o, l.mul(xj[w], rj));
                }
                rj = l.mul(rj, r);
            }
        }
        out
    }

    pub fn to_tensor(&self, a: &Elem) -> Vec<Vec<Fq>> {
        let l = self.l();
        let vinv = self.tower.vandermonde_inv();
        let f = self.f();
        (0..f)
            .map(|j| {
                (0..self.width())
                    .map(|w| (0..f).fold(0, |acc, i| l.add(acc, l.mul(vinv[j][i], a[self.idx(i, w)]))))
                    .collect()
            })
            .collect()
    }

    /// Product in the tensor basis: polynomial product in `y` reduced modulo
    /// the defining polynomial of `k`, coefficients in `l[ϖ]/ϖ^{n+1}`.
    pub fn tensor_mul(&self, a: &[Vec<Fq>], b: &[Vec<Fq>]) -> Vec<Vec<Fq>> {
        let l = self.l();
        let f = self.f();
        let w = self.width();
        let trunc_mul = |x: &[Fq], y: &[Fq]| -> Vec<Fq> {
            let mut o = vec![0; w];
            for s in 0..w {
                for t in 0..w - s {
                    o[s + t] = l.add(o[s + t], l.mul(x[s], y[t]));
                }
            }
            o
        };
        let mut prod = vec![vec![0; w]; 2 * f];
        for (j, x) in a.iter().enumerate() {
            for (k, y) in b.iter().enumerate() {
                let t = trunc_mul(x, y);
                for s in 0..w {
                    prod[j + k][s] = l.add(prod[j + k][s], t[s]);
                }
            }
        }
        let kmod = self.tower.k().modulus();
        for deg in (f..2 * f).rev() {
            let lead = std::mem::replace(&mut prod[deg], vec![0; w]);
            for (i, &c) in kmod.iter().enumerate() {
                let c = l.from_prime(c);
                for s in 0..w {
                    let v = l.mul(lead[s], c);
                    prod[deg - f + i][s] = l.sub(prod[deg - f + i][s], v);
                }
            }
        }
        prod.truncate(f);
        prod
    }

    /// F_p digits in order (CRT factor, ϖ-power, l-basis index).
    pub fn to_digits(&self, a: &Elem) -> Vec<u32> {
        a.iter().flat_map(|&x| self.l().digits(x)).collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> Result<Elem> {
        let g = self.tower.g();
        if digits.len() != self.l_dim() * g {
            return Err(Error::Format(format!(
                "expected {} digits, got {}",
                self.l_dim() * g,
                digits.len()
            )));
        }
        digits.chunks(g).map(|c| self.l().from_digits(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::make_field_tower;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring(p: u32, f: u32, g: u32, n: usize) -> CoeffRing {
        CoeffRing::new(Arc::new(make_field_tower(p, f, g).unwrap()), n)
    }

    #[test]
    fn varpi_nilpotency() {
        let r = ring(3, 2, 2, 2);
        let v = r.varpi();
        let v2 = r.mul(&v, &v);
        assert!(!r.is_zero(&v2));
        assert!(r.is_zero(&r.mul(&v2, &v)));
        assert_eq!(r.l_dim(), 2 * 3);
    }

    #[test]
    fn phi_is_identity_for_prime_k() {
        let r = ring(5, 1, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = r.random(&mut rng);
            assert_eq!(r.phi(&a), a);
        }
    }

    #[test]
    fn phi_swaps_two_factors_and_matches_frobenius_on_k() {
        let r = ring(3, 2, 2, 1);
        let k = r.tower().k().clone();
        for a in k.elements() {
            // φ(1 ⊗ a) = 1 ⊗ a^p
            assert_eq!(r.phi(&r.from_k(a)), r.from_k(k.frobenius(a)));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = r.random(&mut rng);
        let fa = r.phi(&a);
        let w = r.width();
        assert_eq!(&fa[..w], &a[w..]);
        assert_eq!(&fa[w..], &a[..w]);
        assert_eq!(r.phi(&fa), a);
    }

    #[test]
    fn phi_is_multiplicative_on_random_pairs() {
        let r = ring(3, 2, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = r.random(&mut rng);
            let b = r.random(&mut rng);
            assert_eq!(r.phi(&r.mul(&a, &b)), r.mul(&r.phi(&a), &r.phi(&b)));
            assert_eq!(r.phi(&r.add(&a, &b)), r.add(&r.phi(&a), &r.phi(&b)));
        }
    }

    #[test]
    fn crt_is_ring_isomorphism_exhaustive_small() {
        // l = k = F_9, n = 0: 81 elements, all pairs
        let r = ring(3, 2, 2, 0);
        let l = r.l().clone();
        let all: Vec<Vec<Vec<Fq>>> = l
            .elements()
            .flat_map(|x| l.elements().map(move |y| vec![vec![x], vec![y]]))
            .collect();
        for t in &all {
            let c = r.from_tensor(t);
            assert_eq!(&r.to_tensor(&c), t);
        }
        for a in &all {
            for b in all.iter().step_by(7) {
                let lhs = r.from_tensor(&r.tensor_mul(a, b));
                let rhs = r.mul(&r.from_tensor(a), &r.from_tensor(b));
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn crt_round_trip_random_with_varpi() {
        let r = ring(3, 2, 4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a = r.random(&mut rng);
            assert_eq!(r.from_tensor(&r.to_tensor(&a)), a);
            let b = r.random(&mut rng);
            let prod = r.tensor_mul(&r.to_tensor(&a), &r.to_tensor(&b));
            assert_eq!(r.from_tensor(&prod), r.mul(&a, &b));
        }
    }

    #[test]
    fn unit_inverse() {
        let r = ring(5, 2, 2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let a = r.random_unit(&mut rng);
            assert_eq!(r.mul(&a, &r.inv(&a).unwrap()), r.one());
        }
        assert!(r.inv(&r.varpi()).is_err());
    }

    #[test]
    fn digits_round_trip() {
        let r = ring(3, 2, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = r.random(&mut rng);
        assert_eq!(r.from_digits(&r.to_digits(&a)).unwrap(), a);
    }
}
