//! Étale φ-modules `(M, Φ)` of rank `d` over `B_n((u))`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::CoeffRing;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::rng::{instance_rng, InstanceRng};
use crate::series::{LaurentSeries, SeriesMatrix, SeriesWire, INF};

/// Absolute exponent up to which inverses of non-polynomial matrices are
/// computed.
pub const INVERSE_PRECISION: i64 = 64;

/// `Φ(x) = C φ(x)` on coordinate vectors. The inverse matrix is cached.
#[derive(Clone, Debug)]
pub struct PhiModule {
    ring: CoeffRing,
    d: usize,
    c: SeriesMatrix,
    c_inv: SeriesMatrix,
    prec: i64,
}

pub fn make_phi_module(ring: &CoeffRing, d: usize, c: SeriesMatrix) -> Result<PhiModule> {
    PhiModule::new(ring.clone(), d, c)
}

impl PhiModule {
    pub fn new(ring: CoeffRing, d: usize, c: SeriesMatrix) -> Result<Self> {
        Self::with_precision(ring, d, c, INVERSE_PRECISION)
    }

    /// As [`PhiModule::new`], computing `C^{-1}` to absolute exponent `prec`
    /// when it is not a Laurent polynomial.
    pub fn with_precision(ring: CoeffRing, d: usize, c: SeriesMatrix, prec: i64) -> Result<Self> {
        if d == 0 || c.rows() != d || c.cols() != d {
            return Err(Error::InvalidParameter(format!(
                "expected a {d}x{d} matrix, got {}x{}",
                c.rows(),
                c.cols()
            )));
        }
        let det = c.det(&ring);
        if !det.is_unit(&ring)? {
            return Err(Error::NotEtale);
        }
        let c_inv = c.inverse(&ring, prec)?;
        Ok(PhiModule { ring, d, c, c_inv, prec })
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> usize {
        self.ring.n()
    }

    pub fn matrix(&self) -> &SeriesMatrix {
        &self.c
    }

    pub fn precision(&self) -> i64 {
        self.prec
    }

    pub fn inverse_matrix(&self) -> &SeriesMatrix {
        &self.c_inv
    }

    /// Smallest u-exponent occurring in `C`.
    pub fn alpha(&self) -> i64 {
        self.c.min_exponent()
    }

    /// Minus the smallest u-exponent occurring in `C^{-1}`.
    pub fn beta(&self) -> i64 {
        -self.c_inv.min_exponent()
    }

    /// `Φ(x) = C φ(x)`.
    pub fn phi(&self, x: &[LaurentSeries]) -> Vec<LaurentSeries> {
        let r = &self.ring;
        let fx: Vec<LaurentSeries> = x.iter().map(|s| s.phi(r)).collect();
        mat_vec(r, &self.c, &fx)
    }

    /// `Ψ_r(x) = ψ_r(u^e C^{-1} x)`, where `ψ_r(sum_j c_j u^j) = sum_k φ^{-1}(c_{pk+r}) u^k`.
    /// Semilinear for `φ^{-1}`; `B[[u]] φ(N) ⊇ u^e C^{-1} N` iff every `Ψ_r` maps `N` into `N`.
    pub fn psi(&self, r: usize, e: u32, x: &[LaurentSeries]) -> Vec<LaurentSeries> {
        let ring = &self.ring;
        let shifted: Vec<LaurentSeries> = x.iter().map(|s| s.shift(e as i64)).collect();
        mat_vec(ring, &self.c_inv, &shifted)
            .iter()
            .map(|y| psi_series(ring, r, y))
            .collect()
    }

    /// Kill `ϖ^{m+1}` in every entry.
    pub fn reduce_level(&self, m: usize) -> Result<PhiModule> {
        if m > self.level() {
            return Err(Error::InvalidParameter(format!(
                "cannot reduce level {} to level {m}",
                self.level()
            )));
        }
        if m == self.level() {
            return Ok(self.clone());
        }
        let target = self.ring.at_level(m);
        PhiModule::with_precision(target, self.d, self.c.reduce(&self.ring, m), self.prec)
    }

    /// The module in the basis `P`: matrix `P^{-1} C φ(P)`. Returns the new
    /// module and `P^{-1}`, which maps lattices of `self` to lattices of the
    /// result.
    pub fn apply_basechange(&self, p: &SeriesMatrix) -> Result<(PhiModule, SeriesMatrix)> {
        let r = &self.ring;
        if p.rows() != self.d || p.cols() != self.d {
            return Err(Error::InvalidParameter("base change has the wrong size".into()));
        }
        let p_inv = p.inverse(r, self.prec)?;
        let c = p_inv.mul(r, &self.c).mul(r, &p.phi(r));
        Ok((PhiModule::with_precision(r.clone(), self.d, c, self.prec)?, p_inv))
    }

    pub fn to_wire(&self, e: u32) -> PhiModuleWire {
        let t = self.ring.tower();
        PhiModuleWire {
            p: t.p(),
            f: t.f() as u32,
            g: t.g() as u32,
            n: self.level() as u32,
            d: self.d as u32,
            e,
            entries: self.c.entries().iter().map(|s| s.to_wire(&self.ring)).collect(),
        }
    }

    pub fn from_wire(ring: &CoeffRing, wire: &PhiModuleWire) -> Result<PhiModule> {
        let t = ring.tower();
        if (wire.p, wire.f as usize, wire.g as usize, wire.n as usize) != (t.p(), t.f(), t.g(), ring.n()) {
            return Err(Error::Format("header does not match the coefficient ring".into()));
        }
        let d = wire.d as usize;
        if wire.entries.len() != d * d {
            return Err(Error::Format(format!("expected {} entries", d * d)));
        }
        let entries = wire
            .entries
            .iter()
            .map(|w| LaurentSeries::from_wire(ring, w))
            .collect::<Result<Vec<_>>>()?;
        let rows = entries.chunks(d).map(|c| c.to_vec()).collect();
        PhiModule::new(ring.clone(), d, SeriesMatrix::from_rows(rows))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhiModuleWire {
    pub p: u32,
    pub f: u32,
    pub g: u32,
    pub n: u32,
    pub d: u32,
    pub e: u32,
    pub entries: Vec<SeriesWire>,
}

pub fn mat_vec(ring: &CoeffRing, m: &SeriesMatrix, x: &[LaurentSeries]) -> Vec<LaurentSeries> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols()).fold(LaurentSeries::zero(), |acc, j| {
                let e = m.get(i, j);
                if e.is_zero() || x[j].is_zero() {
                    acc
                } else {
                    acc.add(ring, &e.mul(ring, &x[j]))
                }
            })
        })
        .collect()
}

/// The `r`-th component of `y = sum_r u^r φ(ψ_r(y))`.
pub fn psi_series(ring: &CoeffRing, r: usize, y: &LaurentSeries) -> LaurentSeries {
    let p = ring.p() as i64;
    let r = r as i64;
    let terms: Vec<_> = y
        .terms()
        .filter(|(j, _)| (j - r).rem_euclid(p) == 0)
        .map(|(j, c)| ((j - r).div_euclid(p), ring.phi_pow(c, -1)))
        .collect();
    // coefficients pk + r are known for pk + r < T, i.e. k < ceil((T - r) / p)
    let prec = y.prec().map(|t| {
        let num = t - r;
        num.div_euclid(p) + i64::from(num.rem_euclid(p) != 0)
    });
    LaurentSeries::from_terms(ring, &terms, prec.map(|x| x.min(INF)))
}

/// Random polynomial in `u` of degree at most `deg` with coefficients in `B`.
fn random_poly<R: Rng + ?Sized>(ring: &CoeffRing, deg: i64, rng: &mut R) -> LaurentSeries {
    let terms: Vec<_> = (0..=deg).map(|k| (k, ring.random(rng))).collect();
    LaurentSeries::from_terms(ring, &terms, None)
}

/// A random triangular factor: constant unit diagonal, polynomial entries
/// of u-degree at most 2 strictly below (`lower`) or above the diagonal.
pub fn random_triangular<R: Rng + ?Sized>(ring: &CoeffRing, d: usize, lower: bool, rng: &mut R) -> SeriesMatrix {
    let mut m = SeriesMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = if i == j {
                LaurentSeries::constant(ring.random_unit(rng))
            } else if (i > j) == lower {
                random_poly(ring, 2, rng)
            } else {
                LaurentSeries::zero()
            };
            m.set(i, j, v);
        }
    }
    m
}

/// `(unit-diagonal + strictly lower)(unit-diagonal + strictly upper)`:
/// invertible over `B[u]` with polynomial inverse.
pub fn random_invertible<R: Rng + ?Sized>(ring: &CoeffRing, d: usize, rng: &mut R) -> SeriesMatrix {
    let l = random_triangular(ring, d, true, rng);
    let u = random_triangular(ring, d, false, rng);
    l.mul(ring, &u)
}

/// Planting data: the module and the exponents of its diagonal factor.
#[derive(Clone, Debug)]
pub struct Planted {
    pub module: PhiModule,
    pub lattice: Lattice,
    pub exponents: Vec<u32>,
}

/// `C = A diag(u^{a_1}, ..., u^{a_d}) B` with random `A, B ∈ GL_d(B[u])` and
/// `a_i` uniform in `0..=e`; `L_0` has height at most `e` by construction.
pub fn plant_model(ring: &CoeffRing, d: usize, e: u32, seed: u64) -> (PhiModule, Lattice) {
    let mut rng = instance_rng(seed, 0);
    let p = plant_with_rng(ring, d, e, &mut rng);
    (p.module, p.lattice)
}

pub fn plant_with_rng(ring: &CoeffRing, d: usize, e: u32, rng: &mut InstanceRng) -> Planted {
    let exponents: Vec<u32> = (0..d).map(|_| rng.gen_range(0..=e)).collect();
    plant_model_with(ring, &exponents, rng)
}

pub fn plant_model_with<R: Rng + ?Sized>(ring: &CoeffRing, exponents: &[u32], rng: &mut R) -> Planted {
    let d = exponents.len();
    let a = random_invertible(ring, d, rng);
    let b = random_invertible(ring, d, rng);
    let diag = SeriesMatrix::diagonal(exponents.iter().map(|&k| LaurentSeries::u_pow(ring, k as i64)).collect());
    let c = a.mul(ring, &diag).mul(ring, &b);
    let module = PhiModule::new(ring.clone(), d, c).expect("planted matrices are étale");
    Planted { lattice: Lattice::standard(ring, d), module, exponents: exponents.to_vec() }
}

/// A free-form module: entries random polynomials in `u` of degree at most
/// `deg`, redrawn until the determinant is a unit.
pub fn random_module<R: Rng + ?Sized>(ring: &CoeffRing, d: usize, deg: i64, prec: i64, rng: &mut R) -> PhiModule {
    loop {
        let rows = (0..d).map(|_| (0..d).map(|_| random_poly(ring, deg, rng)).collect()).collect();
        match PhiModule::with_precision(ring.clone(), d, SeriesMatrix::from_rows(rows), prec) {
            Ok(m) => return m,
            Err(_) => continue,
        }
    }
}

/// Rank-1 module with `C = (u^a)`.
pub fn monomial_module(ring: &CoeffRing, a: i64) -> PhiModule {
    let c = SeriesMatrix::from_rows(vec![vec![LaurentSeries::u_pow(ring, a)]]);
    PhiModule::new(ring.clone(), 1, c).expect("monomials are units")
}
