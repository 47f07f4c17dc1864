//! Truncated Laurent series over [`CoeffRing`] with explicit precision.
//!
//! A series is known exactly on the exponent window `[start, prec)`; all
//! coefficients below `start` are zero. `prec == None` means the series is an
//! exact Laurent polynomial. Operations track how the window propagates and
//! never invent coefficients outside it.

use crate::coeff::{CoeffRing, Elem};
use crate::error::{Error, Result};
use crate::field::Fq;

/// Stand-in for `+∞` in exponent bounds.
pub const INF: i64 = i64::MAX / 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LaurentSeries {
    start: i64,
    coeffs: Vec<Elem>,
    prec: Option<i64>,
}

impl LaurentSeries {
    pub fn zero() -> Self {
        LaurentSeries { start: 0, coeffs: Vec::new(), prec: None }
    }

    /// `O(u^prec)`.
    pub fn zero_mod(prec: i64) -> Self {
        LaurentSeries { start: prec, coeffs: Vec::new(), prec: Some(prec) }
    }

    pub fn constant(c: Elem) -> Self {
        Self::monomial(c, 0)
    }

    pub fn monomial(c: Elem, exp: i64) -> Self {
        LaurentSeries { start: exp, coeffs: vec![c], prec: None }.normalized()
    }

    pub fn one(ring: &CoeffRing) -> Self {
        Self::constant(ring.one())
    }

    /// `u^k`.
    pub fn u_pow(ring: &CoeffRing, k: i64) -> Self {
        Self::monomial(ring.one(), k)
    }

    /// Build from `(exponent, coefficient)` terms; repeated exponents add.
    pub fn from_terms(ring: &CoeffRing, terms: &[(i64, Elem)], prec: Option<i64>) -> Self {
        if terms.is_empty() {
            return prec.map_or_else(Self::zero, Self::zero_mod);
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coeffs = vec![ring.zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            let slot = &mut coeffs[(e - lo) as usize];
            *slot = ring.add(slot, c);
        }
        let mut s = LaurentSeries { start: lo, coeffs, prec };
        s.truncate_to_prec();
        s.normalized()
    }

    fn truncate_to_prec(&mut self) {
        if let Some(p) = self.prec {
            let keep = (p - self.start).max(0) as usize;
            self.coeffs.truncate(keep);
        }
    }

    fn normalized(mut self) -> Self {
        let lead = self.coeffs.iter().take_while(|c| c.iter().all(|&x| x == 0)).count();
        if lead == self.coeffs.len() {
            self.coeffs.clear();
            self.start = self.prec.unwrap_or(0);
            return self;
        }
        self.coeffs.drain(..lead);
        self.start += lead as i64;
        while self.coeffs.last().is_some_and(|c| c.iter().all(|&x| x == 0)) {
            self.coeffs.pop();
        }
        self
    }

    pub fn prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// Exponent up to which coefficients are known (`INF` when exact).
    pub fn known_until(&self) -> i64 {
        self.prec.unwrap_or(INF)
    }

    /// Lowest exponent with a nonzero visible coefficient.
    pub fn valuation(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then_some(self.start)
    }

    /// A lower bound for the exponents of all nonzero coefficients: the
    /// valuation, or the precision for a series that is zero on its window,
    /// or `INF` for the exact zero series.
    pub fn lower_bound(&self) -> i64 {
        self.valuation().unwrap_or(self.known_until())
    }

    /// Highest exponent with a nonzero visible coefficient.
    pub fn degree(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.start + self.coeffs.len() as i64 - 1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.prec.is_none()
    }

    /// Coefficient at `exp`; fails if `exp` lies beyond the known window.
    pub fn coeff(&self, ring: &CoeffRing, exp: i64) -> Result<Elem> {
        if exp >= self.known_until() {
            return Err(Error::NeedsPrecision(format!(
                "coefficient of u^{exp} requested, series known below u^{}",
                self.known_until()
            )));
        }
        Ok(self.coeff_unchecked(exp).cloned().unwrap_or_else(|| ring.zero()))
    }

    fn coeff_unchecked(&self, exp: i64) -> Option<&Elem> {
        if exp < self.start {
            return None;
        }
        self.coeffs.get((exp - self.start) as usize)
    }

    /// Nonzero visible terms in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Elem)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&x| x != 0))
            .map(move |(k, c)| (self.start + k as i64, c))
    }

    pub fn add(&self, ring: &CoeffRing, other: &Self) -> Self {
        let prec = min_prec(self.prec, other.prec);
        let mut terms: Vec<(i64, Elem)> = self.terms().map(|(e, c)| (e, c.clone())).collect();
        terms.extend(other.terms().map(|(e, c)| (e, c.clone())));
        Self::from_terms(ring, &terms, prec)
    }

    pub fn neg(&self, ring: &CoeffRing) -> Self {
        LaurentSeries {
            start: self.start,
            coeffs: self.coeffs.iter().map(|c| ring.neg(c)).collect(),
            prec: self.prec,
        }
    }

    pub fn sub(&self, ring: &CoeffRing, other: &Self) -> Self {
        self.add(ring, &other.neg(ring))
    }

    pub fn mul(&self, ring: &CoeffRing, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let prec = match (self.prec, other.prec) {
            (None, None) => None,
            (Some(pa), None) => Some(pa.saturating_add(other.lower_bound())),
            (None, Some(pb)) => Some(pb.saturating_add(self.lower_bound())),
            (Some(pa), Some(pb)) => {
                Some((pa.saturating_add(other.lower_bound())).min(pb.saturating_add(self.lower_bound())))
            }
        };
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::zero_mod(prec.expect("truncated zero factor"));
        }
        let mut coeffs = vec![ring.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if ring.is_zero(a) {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if ring.is_zero(b) {
                    continue;
                }
                let t = ring.mul(a, b);
                coeffs[i + j] = ring.add(&coeffs[i + j], &t);
            }
        }
        let mut s = LaurentSeries { start: self.start + other.start, coeffs, prec };
        s.truncate_to_prec();
        s.normalized()
    }

    pub fn scale(&self, ring: &CoeffRing, c: &Elem) -> Self {
        self.mul(ring, &Self::constant(c.clone()))
    }

    /// Multiply by `u^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            start: self.start + k,
            coeffs: self.coeffs.clone(),
            prec: self.prec.map(|p| p + k),
        }
    }

    /// `φ`: coefficients by `phi_coeff`, `u ↦ u^p`. A window `[v, T)` maps
    /// to `[p v, p (T - 1) + 1)`.
    pub fn phi(&self, ring: &CoeffRing) -> Self {
        let p = ring.p() as i64;
        let terms: Vec<(i64, Elem)> = self.terms().map(|(e, c)| (p * e, ring.phi(c))).collect();
        let prec = self.prec.map(|t| p * (t - 1) + 1);
        Self::from_terms(ring, &terms, prec)
    }

    /// Coefficient-wise reduction to level `m`.
    pub fn reduce(&self, ring: &CoeffRing, m: usize) -> Self {
        let target = ring.at_level(m);
        let terms: Vec<(i64, Elem)> = self.terms().map(|(e, c)| (e, ring.reduce(c, m))).collect();
        Self::from_terms(&target, &terms, self.prec)
    }

    /// The `ϖ^0` part of factor `i`, as visible `(exponent, value)` pairs.
    fn residue_terms(&self, ring: &CoeffRing, factor: usize) -> Vec<(i64, Fq)> {
        let ix = ring.idx(factor, 0);
        self.terms().filter(|(_, c)| c[ix] != 0).map(|(e, c)| (e, c[ix])).collect()
    }

    /// Invertible in `B((u))`: in every CRT factor the reduction mod `ϖ` is
    /// nonzero. A truncated series whose reduction vanishes on the visible
    /// window is indeterminate.
    pub fn is_unit(&self, ring: &CoeffRing) -> Result<bool> {
        for i in 0..ring.f() {
            if self.residue_terms(ring, i).is_empty() {
                return match self.prec {
                    None => Ok(false),
                    Some(p) => Err(Error::NeedsPrecision(format!(
                        "reduction of factor {i} vanishes below u^{p}"
                    ))),
                };
            }
        }
        Ok(true)
    }

    /// Inverse of a unit, known at least up to absolute exponent `target`
    /// (exact when the result is a Laurent polynomial that can be certified).
    pub fn inverse(&self, ring: &CoeffRing, target: i64) -> Result<Self> {
        if !self.is_unit(ring)? {
            return Err(Error::NotInvertible);
        }
        let l = ring.l();
        // invert the reduction mod ϖ factor by factor in l((u))
        let mut t0_terms: Vec<(i64, Elem)> = Vec::new();
        let mut t0_prec: Option<i64> = None;
        for i in 0..ring.f() {
            let res = self.residue_terms(ring, i);
            let v = res[0].0;
            let a: Vec<(i64, Fq)> = res.iter().map(|&(e, x)| (e - v, x)).collect();
            let b0 = l.inv(a[0].1);
            let ix = ring.idx(i, 0);
            let monomial = a.len() == 1;
            if monomial && self.prec.is_none() {
                let mut c = ring.zero();
                c[ix] = b0;
                t0_terms.push((-v, c));
                continue;
            }
            let rel = match self.prec {
                Some(p) => (p - v).min(target + v),
                None => target + v,
            }
            .max(1);
            let mut b = vec![0 as Fq; rel as usize];
            b[0] = b0;
            for k in 1..rel as usize {
                let mut acc = 0;
                for &(j, aj) in a.iter().skip(1) {
                    let j = j as usize;
                    if j > k {
                        break;
                    }
                    acc = l.add(acc, l.mul(aj, b[k - j]));
                }
                b[k] = l.neg(l.mul(acc, b0));
            }
            for (k, &bk) in b.iter().enumerate() {
                if bk != 0 {
                    let mut c = ring.zero();
                    c[ix] = bk;
                    t0_terms.push((k as i64 - v, c));
                }
            }
            t0_prec = min_prec(t0_prec, Some(rel - v));
        }
        let t0 = Self::from_terms(ring, &t0_terms, t0_prec);
        // s t0 = 1 + w with w ≡ 0 mod ϖ; (1 + w)^{-1} = sum_{k<=n} (-w)^k
        let w = self.mul(ring, &t0).sub(ring, &Self::one(ring));
        let minus_w = w.neg(ring);
        let mut acc = Self::one(ring);
        let mut power = Self::one(ring);
        for _ in 0..ring.n() {
            power = power.mul(ring, &minus_w);
            acc = acc.add(ring, &power);
        }
        Ok(t0.mul(ring, &acc))
    }

    /// Serialization: sorted `(exponent, F_p digits)` pairs plus the window.
    pub fn to_wire(&self, ring: &CoeffRing) -> SeriesWire {
        SeriesWire {
            start: self.lower_bound().min(INF),
            prec: self.prec,
            terms: self.terms().map(|(e, c)| (e, ring.to_digits(c))).collect(),
        }
    }

    pub fn from_wire(ring: &CoeffRing, wire: &SeriesWire) -> Result<Self> {
        let terms = wire
            .terms
            .iter()
            .map(|(e, d)| Ok((*e, ring.from_digits(d)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_terms(ring, &terms, wire.prec))
    }
}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SeriesWire {
    pub start: i64,
    pub prec: Option<i64>,
    pub terms: Vec<(i64, Vec<u32>)>,
}

/// Square or rectangular matrix of Laurent series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentSeries>,
}

impl SeriesMatrix {
    pub fn from_rows(rows: Vec<Vec<LaurentSeries>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged matrix");
        SeriesMatrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SeriesMatrix { rows, cols, entries: vec![LaurentSeries::zero(); rows * cols] }
    }

    pub fn identity(ring: &CoeffRing, d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m.set(i, i, LaurentSeries::one(ring));
        }
        m
    }

    pub fn diagonal(entries: Vec<LaurentSeries>) -> Self {
        let d = entries.len();
        let mut m = Self::zeros(d, d);
        for (i, e) in entries.into_iter().enumerate() {
            m.set(i, i, e);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &LaurentSeries {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: LaurentSeries) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[LaurentSeries] {
        &self.entries
    }

    pub fn map(&self, f: impl Fn(&LaurentSeries) -> LaurentSeries) -> Self {
        SeriesMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn mul(&self, ring: &CoeffRing, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = LaurentSeries::zero();
                for k in 0..self.cols {
                    acc = acc.add(ring, &self.get(i, k).mul(ring, other.get(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, ring: &CoeffRing, other: &Self) -> Self {
        SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(ring, b)).collect(),
        }
    }

    pub fn phi(&self, ring: &CoeffRing) -> Self {
        self.map(|s| s.phi(ring))
    }

    pub fn reduce(&self, ring: &CoeffRing, m: usize) -> Self {
        self.map(|s| s.reduce(ring, m))
    }

    pub fn is_exact(&self) -> bool {
        self.entries.iter().all(LaurentSeries::is_exact)
    }

    /// Smallest exponent bound over all entries (`INF` for the zero matrix).
    pub fn min_exponent(&self) -> i64 {
        self.entries.iter().map(LaurentSeries::lower_bound).min().unwrap_or(INF)
    }

    /// Exponent below which every entry is known.
    pub fn known_until(&self) -> i64 {
        self.entries.iter().map(LaurentSeries::known_until).min().unwrap_or(INF)
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> Self {
        let mut rows = Vec::with_capacity(self.rows - 1);
        for r in (0..self.rows).filter(|&r| r != skip_row) {
            rows.push(
                (0..self.cols)
                    .filter(|&c| c != skip_col)
                    .map(|c| self.get(r, c).clone())
                    .collect(),
            );
        }
        Self::from_rows(rows)
    }

    /// Determinant by cofactor expansion (the ranks used here are small).
    pub fn det(&self, ring: &CoeffRing) -> LaurentSeries {
        assert_eq!(self.rows, self.cols);
        match self.rows {
            0 => LaurentSeries::one(ring),
            1 => self.get(0, 0).clone(),
            n => {
                let mut acc = LaurentSeries::zero();
                for c in 0..n {
                    let e = self.get(0, c);
                    if e.is_zero() {
                        continue;
                    }
                    let term = e.mul(ring, &self.minor(0, c).det(ring));
                    acc = if c % 2 == 0 { acc.add(ring, &term) } else { acc.sub(ring, &term) };
                }
                acc
            }
        }
    }

    pub fn adjugate(&self, ring: &CoeffRing) -> Self {
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        if n == 1 {
            out.set(0, 0, LaurentSeries::one(ring));
            return out;
        }
        for i in 0..n {
            for j in 0..n {
                let m = self.minor(j, i).det(ring);
                out.set(i, j, if (i + j) % 2 == 0 { m } else { m.neg(ring) });
            }
        }
        out
    }

    /// `adj(C) / det(C)`, entries known at least up to `target`.
    pub fn inverse(&self, ring: &CoeffRing, target: i64) -> Result<Self> {
        let det = self.det(ring);
        if !det.is_unit(ring)? {
            return Err(Error::NotInvertible);
        }
        let adj = self.adjugate(ring);
        let extra = (target - adj.min_exponent().min(target)).max(0);
        let dinv = det.inverse(ring, target + extra)?;
        Ok(adj.map(|a| a.mul(ring, &dinv)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::make_field_tower;
    use std::sync::Arc;

    fn ring(p: u32, f: u32, g: u32, n: usize) -> CoeffRing {
        CoeffRing::new(Arc::new(make_field_tower(p, f, g).unwrap()), n)
    }

    #[test]
    fn phi_of_u_is_u_to_the_p() {
        let r = ring(3, 1, 1, 1);
        assert_eq!(LaurentSeries::u_pow(&r, 1).phi(&r), LaurentSeries::u_pow(&r, 3));
        assert_eq!(LaurentSeries::u_pow(&r, -1).phi(&r), LaurentSeries::u_pow(&r, -3));
        let r = ring(5, 2, 2, 0);
        let c = r.from_k(r.tower().k().generator());
        assert_eq!(LaurentSeries::constant(c.clone()).phi(&r), LaurentSeries::constant(r.phi(&c)));
    }

    #[test]
    fn phi_window_propagation() {
        let r = ring(3, 1, 1, 0);
        let s = LaurentSeries::from_terms(&r, &[(2, r.one())], Some(5));
        let t = s.phi(&r);
        assert_eq!(t.valuation(), Some(6));
        assert_eq!(t.prec(), Some(13));
    }

    #[test]
    fn monomials_are_units() {
        let r = ring(3, 2, 2, 2);
        for e in 0..=6 {
            assert!(LaurentSeries::u_pow(&r, e).is_unit(&r).unwrap());
        }
        assert!(!LaurentSeries::constant(r.varpi()).is_unit(&r).unwrap());
        let trunc = LaurentSeries::from_terms(&r, &[(0, r.varpi())], Some(3));
        assert!(trunc.is_unit(&r).is_err());
    }

    #[test]
    fn one_plus_varpi_u_inverse_is_finite_geometric_series() {
        let r = ring(3, 1, 1, 3);
        let s = LaurentSeries::from_terms(&r, &[(0, r.one()), (1, r.varpi())], None);
        let inv = s.inverse(&r, 10).unwrap();
        // 1 - ϖu + ϖ²u² - ϖ³u³, exactly
        let v = r.varpi();
        let v2 = r.mul(&v, &v);
        let v3 = r.mul(&v2, &v);
        let expect = LaurentSeries::from_terms(
            &r,
            &[(0, r.one()), (1, r.neg(&v)), (2, v2), (3, r.neg(&v3))],
            None,
        );
        assert_eq!(inv.mul(&r, &s), LaurentSeries::one(&r));
        assert_eq!(inv.terms().count(), 4);
        assert_eq!(inv.sub(&r, &expect).terms().count(), 0);
    }

    #[test]
    fn inverse_of_non_monomial_is_truncated() {
        let r = ring(5, 1, 1, 1);
        let s = LaurentSeries::from_terms(&r, &[(0, r.one()), (1, r.one())], None);
        let inv = s.inverse(&r, 8).unwrap();
        assert!(inv.prec().unwrap() >= 8);
        let prod = inv.mul(&r, &s);
        for e in 0..8 {
            let expect = if e == 0 { r.one() } else { r.zero() };
            assert_eq!(prod.coeff(&r, e).unwrap(), expect);
        }
        assert!(prod.coeff(&r, 1000).is_err());
    }

    #[test]
    fn u_plus_varpi_inverse() {
        let r = ring(3, 1, 1, 2);
        let s = LaurentSeries::from_terms(&r, &[(0, r.varpi()), (1, r.one())], None);
        let inv = s.inverse(&r, 5).unwrap();
        assert!(inv.is_exact());
        assert_eq!(inv.mul(&r, &s), LaurentSeries::one(&r));
        assert_eq!(inv.valuation(), Some(-3));
    }

    #[test]
    fn det_of_antidiagonal() {
        let r = ring(3, 1, 1, 0);
        let m = SeriesMatrix::from_rows(vec![
            vec![LaurentSeries::zero(), LaurentSeries::u_pow(&r, 1)],
            vec![LaurentSeries::one(&r), LaurentSeries::zero()],
        ]);
        let d = m.det(&r);
        assert_eq!(d, LaurentSeries::u_pow(&r, 1).neg(&r));
        let inv = m.inverse(&r, 10).unwrap();
        assert_eq!(m.mul(&r, &inv), SeriesMatrix::identity(&r, 2));
    }
}
