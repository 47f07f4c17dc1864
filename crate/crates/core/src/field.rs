//! Small prime-power fields `F_q`, `q = p^g`, with table-driven arithmetic.
//!
//! An element is a `u16` index: the base-`p` digits of the index are the
//! coefficients `c_0, c_1, ..., c_{g-1}` of its representative polynomial in
//! the generator `x`, least significant first. The defining polynomial is the
//! lexicographically smallest monic irreducible of degree `g`, where monic
//! polynomials `x^g + c_{g-1} x^{g-1} + ... + c_0` are ordered by the integer
//! `sum c_i p^i` (so `c_{g-1}` is compared first).

use crate::error::{Error, Result};

pub type Fq = u16;

/// Largest field order supported by the `u16` element encoding.
pub const MAX_ORDER: u32 = 1024;

#[derive(Clone, Debug)]
pub struct Field {
    p: u32,
    degree: u32,
    q: u32,
    /// Non-leading coefficients of the monic modulus, `c_0` first.
    modulus: Vec<u32>,
    exp: Vec<Fq>,
    log: Vec<u32>,
    add: Vec<Fq>,
    neg: Vec<Fq>,
    inv: Vec<Fq>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    // b is monic of degree b.len() - 1
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bc) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * bc) % p) % p;
            }
        }
        r.pop();
    }
    while r.last() == Some(&0) {
        r.pop();
    }
    r
}

fn monic_from_index(idx: u32, p: u32, degree: u32) -> Vec<u32> {
    let mut c = Vec::with_capacity(degree as usize + 1);
    let mut t = idx;
    for _ in 0..degree {
        c.push(t % p);
        t /= p;
    }
    c.push(1);
    c
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly.len() as u32 - 1;
    for fd in 1..=deg / 2 {
        for idx in 0..p.pow(fd) {
            let factor = monic_from_index(idx, p, fd);
            if poly_rem(poly, &factor, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// The lexicographically smallest monic irreducible of the given degree.
pub fn smallest_irreducible(p: u32, degree: u32) -> Vec<u32> {
    (0..p.pow(degree))
        .map(|idx| monic_from_index(idx, p, degree))
        .find(|poly| is_irreducible(poly, p))
        .expect("irreducible polynomials exist in every degree")
}

impl Field {
    pub fn new(p: u32, degree: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        if degree == 0 {
            return Err(Error::InvalidParameter("field degree must be >= 1".into()));
        }
        let q = p
            .checked_pow(degree)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or_else(|| Error::InvalidParameter(format!("field {p}^{degree} too large")))?;
        let full = smallest_irreducible(p, degree);
        let modulus = full[..degree as usize].to_vec();

        let digits = |x: u32| -> Vec<u32> {
            let mut t = x;
            (0..degree)
                .map(|_| {
                    let d = t % p;
                    t /= p;
                    d
                })
                .collect()
        };
        let undigits = |c: &[u32]| -> u32 { c.iter().rev().fold(0, |acc, &d| acc * p + d) };

        let mut add = vec![0 as Fq; (q * q) as usize];
        let mut neg = vec![0 as Fq; q as usize];
        for a in 0..q {
            let da = digits(a);
            neg[a as usize] = undigits(&da.iter().map(|&d| (p - d) % p).collect::<Vec<_>>()) as Fq;
            for b in 0..q {
                let db = digits(b);
                let s: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[(a * q + b) as usize] = undigits(&s) as Fq;
            }
        }

        // schoolbook product reduced modulo the defining polynomial
        let slow_mul = |a: u32, b: u32| -> u32 {
            let da = digits(a);
            let db = digits(b);
            let mut prod = vec![0u32; 2 * degree as usize];
            for (i, x) in da.iter().enumerate() {
                for (j, y) in db.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            let mut r = poly_rem(&prod, &full, p);
            r.resize(degree as usize, 0);
            undigits(&r)
        };

        // find a primitive element and build log/exp tables
        let order = q - 1;
        let mut exp = Vec::with_capacity(order as usize);
        for cand in 1..q {
            exp.clear();
            let mut x = 1u32;
            loop {
                exp.push(x as Fq);
                x = slow_mul(x, cand);
                if x == 1 {
                    break;
                }
            }
            if exp.len() as u32 == order {
                break;
            }
        }
        let mut log = vec![u32::MAX; q as usize];
        for (k, &x) in exp.iter().enumerate() {
            log[x as usize] = k as u32;
        }
        let mut inv = vec![0 as Fq; q as usize];
        for a in 1..q {
            let la = log[a as usize];
            inv[a as usize] = exp[((order - la) % order) as usize];
        }
        Ok(Field { p, degree, q, modulus, exp, log, add, neg, inv })
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    /// Non-leading coefficients `c_0..c_{g-1}` of the defining polynomial.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        if a == 0 || b == 0 {
            return 0;
        }
        let s = self.log[a as usize] + self.log[b as usize];
        let order = self.q - 1;
        self.exp[(if s >= order { s - order } else { s }) as usize]
    }

    /// Multiplicative inverse; panics on zero.
    #[inline]
    pub fn inv(&self, a: Fq) -> Fq {
        assert!(a != 0, "inverse of zero");
        self.inv[a as usize]
    }

    pub fn pow(&self, a: Fq, e: u64) -> Fq {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.q - 1) as u64;
        let l = self.log[a as usize] as u64;
        self.exp[((l * (e % order)) % order) as usize]
    }

    pub fn frobenius(&self, a: Fq) -> Fq {
        self.pow(a, self.p as u64)
    }

    /// Image of the prime-field element `c mod p`.
    pub fn from_prime(&self, c: u32) -> Fq {
        (c % self.p) as Fq
    }

    /// The class of the polynomial variable `x` (equal to a prime-field
    /// element when `g = 1`).
    pub fn generator(&self) -> Fq {
        if self.degree == 1 {
            (self.p - self.modulus[0]) as Fq % self.p as Fq
        } else {
            self.p as Fq
        }
    }

    /// Base-`p` digits `c_0..c_{g-1}`.
    pub fn digits(&self, a: Fq) -> Vec<u32> {
        let mut t = a as u32;
        (0..self.degree)
            .map(|_| {
                let d = t % self.p;
                t /= self.p;
                d
            })
            .collect()
    }

    pub fn from_digits(&self, digits: &[u32]) -> Result<Fq> {
        if digits.len() != self.degree as usize || digits.iter().any(|&d| d >= self.p) {
            return Err(Error::Format(format!("bad field digits {digits:?}")));
        }
        Ok(digits.iter().rev().fold(0u32, |acc, &d| acc * self.p + d) as Fq)
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> {
        0..self.q as Fq
    }

    /// Evaluate a polynomial with prime-field coefficients (`c_0` first).
    pub fn eval_prime_poly(&self, coeffs: &[u32], x: Fq) -> Fq {
        coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| self.add(self.mul(acc, x), self.from_prime(c)))
    }

    pub fn same_as(&self, other: &Field) -> bool {
        self.p == other.p && self.degree == other.degree
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defining_polynomials_are_smallest() {
        // x^2 + 1 is the first irreducible quadratic over F_3.
        assert_eq!(smallest_irreducible(3, 2), vec![1, 0, 1]);
        // over F_5, x^2 + 2 (x^2+1 = (x-2)(x+2)).
        assert_eq!(smallest_irreducible(5, 2), vec![2, 0, 1]);
        assert_eq!(smallest_irreducible(3, 1), vec![0, 1]);
        // x^3 + 2x + 1 over F_3
        assert_eq!(smallest_irreducible(3, 3), vec![1, 2, 0, 1]);
    }

    #[test]
    fn field_axioms_exhaustive_f9() {
        let f = Field::new(3, 2).unwrap();
        for a in f.elements() {
            assert_eq!(f.add(a, f.neg(a)), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a)), 1);
            }
            for b in f.elements() {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                for c in f.elements() {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }

    #[test]
    fn frobenius_has_order_degree() {
        for (p, g) in [(3, 1), (3, 2), (5, 2), (3, 3), (7, 2)] {
            let f = Field::new(p, g).unwrap();
            for a in f.elements() {
                let mut x = a;
                for _ in 0..g {
                    x = f.frobenius(x);
                }
                assert_eq!(x, a);
            }
            if g > 1 {
                let x = f.generator();
                assert_ne!(f.frobenius(x), x);
            }
        }
    }

    #[test]
    fn generator_is_root_of_modulus() {
        for (p, g) in [(3, 1), (3, 2), (5, 3)] {
            let f = Field::new(p, g).unwrap();
            let mut m = f.modulus().to_vec();
            m.push(1);
            assert_eq!(f.eval_prime_poly(&m, f.generator()), 0);
        }
    }

    #[test]
    fn rejects_non_prime() {
        assert!(Field::new(9, 1).is_err());
        assert!(Field::new(3, 0).is_err());
    }
}
