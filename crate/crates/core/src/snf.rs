//! Normal forms over the truncated discrete valuation ring `l[u]/u^P`.
//!
//! Matrices hold polynomials known modulo a common `u^prec`; dividing by an
//! entry of valuation `v` lowers the precision by `v`, and every valuation
//! at or beyond the final precision is reported as unknown.

use crate::error::{Error, Result};
use crate::field::{Field, Fq};

#[derive(Clone, Debug)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    prec: usize,
    /// entry (r, c) coefficient u^k at `[(r * cols + c) * prec + k]`
    data: Vec<Fq>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: usize) -> Self {
        PolyMatrix { rows, cols, prec, data: vec![0; rows * cols * prec] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    fn at(&self, r: usize, c: usize) -> &[Fq] {
        let o = (r * self.cols + c) * self.prec;
        &self.data[o..o + self.prec]
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut [Fq] {
        let o = (r * self.cols + c) * self.prec;
        &mut self.data[o..o + self.prec]
    }

    /// Set the coefficient of `u^k` (ignored beyond the precision).
    pub fn set_coeff(&mut self, r: usize, c: usize, k: usize, x: Fq) {
        if k < self.prec {
            self.at_mut(r, c)[k] = x;
        }
    }

    pub fn coeff(&self, r: usize, c: usize, k: usize) -> Fq {
        self.at(r, c)[k]
    }

    /// Valuation within the known precision.
    pub fn valuation(&self, r: usize, c: usize, prec: usize) -> Option<usize> {
        self.at(r, c)[..prec].iter().position(|&x| x != 0)
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            for k in 0..self.prec {
                let (ia, ib) = ((r * self.cols + a) * self.prec + k, (r * self.cols + b) * self.prec + k);
                self.data.swap(ia, ib);
            }
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            for k in 0..self.prec {
                let (ia, ib) = ((a * self.cols + c) * self.prec + k, (b * self.cols + c) * self.prec + k);
                self.data.swap(ia, ib);
            }
        }
    }

    /// `col_dst -= q * col_src`.
    fn col_axpy(&mut self, field: &Field, dst: usize, src: usize, q: &[Fq]) {
        for r in 0..self.rows {
            let s = self.at(r, src).to_vec();
            let prod = mul_trunc(field, &s, q, self.prec);
            let d = self.at_mut(r, dst);
            for (x, y) in d.iter_mut().zip(prod) {
                *x = field.sub(*x, y);
            }
        }
    }

    /// `row_dst -= q * row_src`.
    fn row_axpy(&mut self, field: &Field, dst: usize, src: usize, q: &[Fq]) {
        for c in 0..self.cols {
            let s = self.at(src, c).to_vec();
            let prod = mul_trunc(field, &s, q, self.prec);
            let d = self.at_mut(dst, c);
            for (x, y) in d.iter_mut().zip(prod) {
                *x = field.sub(*x, y);
            }
        }
    }
}

pub fn mul_trunc(field: &Field, a: &[Fq], b: &[Fq], prec: usize) -> Vec<Fq> {
    let mut out = vec![0; prec];
    for (i, &x) in a.iter().enumerate().take(prec) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(prec - i) {
            if y != 0 {
                out[i + j] = field.add(out[i + j], field.mul(x, y));
            }
        }
    }
    out
}

/// `a / b` where `val(a) >= val(b) = v`; the quotient is known modulo `u^{prec - v}`.
pub fn div_trunc(field: &Field, a: &[Fq], b: &[Fq], prec: usize) -> Vec<Fq> {
    let v = b.iter().position(|&x| x != 0).expect("division by zero");
    let n = prec - v;
    let bs = &b[v..];
    let a_s = &a[v..];
    let inv0 = field.inv(bs[0]);
    let mut q = vec![0 as Fq; prec];
    for k in 0..n {
        let mut acc = a_s[k];
        for j in 1..=k.min(bs.len() - 1) {
            acc = field.sub(acc, field.mul(bs[j], q[k - j]));
        }
        q[k] = field.mul(acc, inv0);
    }
    q
}

/// Diagonal valuations of the Smith form, `rank` entries, each `None` when
/// the entry is zero modulo the final precision. The matrix is consumed.
pub fn smith_valuations(field: &Field, mut m: PolyMatrix) -> (Vec<Option<usize>>, usize) {
    let mut prec = m.prec;
    let k = m.rows.min(m.cols);
    let mut out = Vec::with_capacity(k);
    for s in 0..k {
        // pivot: entry of minimal valuation in the remaining block
        let mut best: Option<(usize, usize, usize)> = None;
        for r in s..m.rows {
            for c in s..m.cols {
                if let Some(v) = m.valuation(r, c, prec) {
                    if best.is_none_or(|b| v < b.0) {
                        best = Some((v, r, c));
                    }
                }
            }
        }
        let Some((v, r, c)) = best else {
            out.extend((s..k).map(|_| None));
            break;
        };
        m.swap_rows(s, r);
        m.swap_cols(s, c);
        let pivot = m.at(s, s).to_vec();
        for r in s + 1..m.rows {
            if m.valuation(r, s, prec).is_some() {
                let q = div_trunc(field, m.at(r, s), &pivot, prec);
                m.row_axpy(field, r, s, &q);
            }
        }
        for c in s + 1..m.cols {
            if m.valuation(s, c, prec).is_some() {
                let q = div_trunc(field, m.at(s, c), &pivot, prec);
                m.col_axpy(field, c, s, &q);
            }
        }
        prec -= v;
        out.push(Some(v));
    }
    (out, prec)
}

/// Lower-triangular column Hermite form: column operations over `l[[u]]`
/// bringing the `d x k` matrix to `[H | 0]`. Returns `H` and the remaining
/// precision. Fails if the rows are dependent modulo the precision.
pub fn column_hermite(field: &Field, mut m: PolyMatrix) -> Result<(PolyMatrix, usize)> {
    let d = m.rows;
    let mut prec = m.prec;
    for r in 0..d {
        let mut best: Option<(usize, usize)> = None;
        for c in r..m.cols {
            if let Some(v) = m.valuation(r, c, prec) {
                if best.is_none_or(|b| v < b.0) {
                    best = Some((v, c));
                }
            }
        }
        let (v, c) = best.ok_or_else(|| Error::NeedsPrecision("rank deficient modulo precision".into()))?;
        m.swap_cols(r, c);
        let pivot = m.at(r, r).to_vec();
        for c in r + 1..m.cols {
            if m.valuation(r, c, prec).is_some() {
                let q = div_trunc(field, m.at(r, c), &pivot, prec);
                m.col_axpy(field, c, r, &q);
            }
        }
        prec -= v;
    }
    let mut h = PolyMatrix::zeros(d, d, m.prec);
    for r in 0..d {
        for c in 0..d {
            h.at_mut(r, c).copy_from_slice(m.at(r, c));
        }
    }
    Ok((h, prec))
}

/// Solve `H X = G` for lower-triangular `H` by forward substitution; every
/// entry of `X` must be integral (checked up to precision).
pub fn solve_lower(field: &Field, h: &PolyMatrix, g: &PolyMatrix, prec: usize) -> Result<(PolyMatrix, usize)> {
    let d = h.rows;
    let k = g.cols;
    let mut x = PolyMatrix::zeros(d, k, g.prec.max(h.prec));
    let mut prec = prec;
    for r in 0..d {
        let v = h.valuation(r, r, prec).ok_or_else(|| Error::NeedsPrecision("singular diagonal".into()))?;
        for c in 0..k {
            let mut acc = g.at(r, c).to_vec();
            acc.resize(x.prec, 0);
            for s in 0..r {
                let prod = mul_trunc(field, h.at(r, s), x.at(s, c), x.prec);
                for (a, b) in acc.iter_mut().zip(prod) {
                    *a = field.sub(*a, b);
                }
            }
            if acc[..v.min(prec)].iter().any(|&y| y != 0) {
                return Err(Error::Violation("right-hand side is not contained in the lattice".into()));
            }
            let q = div_trunc(field, &acc, h.at(r, r), x.prec);
            x.at_mut(r, c).copy_from_slice(&q);
        }
        prec = prec.saturating_sub(v);
    }
    Ok((x, prec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(field: &Field, entries: &[&[&[Fq]]], prec: usize) -> PolyMatrix {
        let rows = entries.len();
        let cols = entries[0].len();
        let mut m = PolyMatrix::zeros(rows, cols, prec);
        for (r, row) in entries.iter().enumerate() {
            for (c, poly) in row.iter().enumerate() {
                for (k, &x) in poly.iter().enumerate() {
                    m.set_coeff(r, c, k, field.from_prime(x as u32));
                }
            }
        }
        m
    }

    #[test]
    fn diagonal_and_scalar() {
        let f = Field::new(3, 1).unwrap();
        let m = mat(&f, &[&[&[0, 1], &[]], &[&[], &[0, 1]]], 8);
        assert_eq!(smith_valuations(&f, m).0, vec![Some(1), Some(1)]);
        let m = mat(&f, &[&[&[0, 0, 0, 1], &[]], &[&[], &[1]]], 8);
        let mut v = smith_valuations(&f, m).0;
        v.sort();
        assert_eq!(v, vec![Some(0), Some(3)]);
    }

    #[test]
    fn non_diagonal_gcd() {
        // [[u, u^2], [u^2, u]] has divisors u and u (det = u^2 - u^4 = u^2 * unit)
        let f = Field::new(5, 1).unwrap();
        let m = mat(&f, &[&[&[0, 1], &[0, 0, 1]], &[&[0, 0, 1], &[0, 1]]], 10);
        assert_eq!(smith_valuations(&f, m).0, vec![Some(1), Some(1)]);
        // [[u, u], [u, u]] has rank 1
        let m = mat(&f, &[&[&[0, 1], &[0, 1]], &[&[0, 1], &[0, 1]]], 10);
        assert_eq!(smith_valuations(&f, m).0, vec![Some(1), None]);
    }

    #[test]
    fn hermite_then_solve() {
        let f = Field::new(3, 1).unwrap();
        // generators of diag(1, u^2) plus a redundant column
        let g = mat(&f, &[&[&[1], &[], &[1, 1]], &[&[], &[0, 0, 1], &[0, 0, 1]]], 10);
        let (h, prec) = column_hermite(&f, g.clone()).unwrap();
        assert_eq!(h.valuation(0, 0, prec), Some(0));
        assert_eq!(h.valuation(1, 1, prec), Some(2));
        let (x, _) = solve_lower(&f, &h, &g, prec).unwrap();
        let (v, _) = smith_valuations(&f, x);
        assert_eq!(v, vec![Some(0), Some(0)]);
    }
}
