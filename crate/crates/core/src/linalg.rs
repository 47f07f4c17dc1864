//! Subspaces of `l^D` kept in fully reduced row echelon form.

use crate::field::{Field, Fq};

/// An l-subspace of `l^dim`. Rows are sorted by pivot, each pivot entry is 1
/// and pivot columns are zero in every other row, so two equal subspaces
/// have identical rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    dim: usize,
    pivots: Vec<usize>,
    rows: Vec<Vec<Fq>>,
}

impl Subspace {
    pub fn zero(dim: usize) -> Self {
        Subspace { dim, pivots: Vec::new(), rows: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| {
                let mut r = vec![0; dim];
                r[i] = 1;
                r
            })
            .collect();
        Subspace { dim, pivots: (0..dim).collect(), rows }
    }

    pub fn spanned(field: &Field, dim: usize, vectors: impl IntoIterator<Item = Vec<Fq>>) -> Self {
        let mut s = Self::zero(dim);
        for v in vectors {
            s.insert(field, v);
        }
        s
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Fq>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Residue of `v` modulo the subspace; zero iff `v` is contained. The
    /// residue vanishes on every pivot column, so this is a linear
    /// projection onto a fixed complement.
    pub fn reduce(&self, field: &Field, v: &[Fq]) -> Vec<Fq> {
        let mut r = v.to_vec();
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            let c = r[piv];
            if c != 0 {
                axpy(field, &mut r, field.neg(c), row);
            }
        }
        r
    }

    pub fn contains(&self, field: &Field, v: &[Fq]) -> bool {
        self.reduce(field, v).iter().all(|&x| x == 0)
    }

    pub fn contains_subspace(&self, field: &Field, other: &Subspace) -> bool {
        other.rows.iter().all(|r| self.contains(field, r))
    }

    /// Add `v`; returns the new (normalized) basis row if the rank grew.
    pub fn insert(&mut self, field: &Field, v: Vec<Fq>) -> Option<Vec<Fq>> {
        debug_assert_eq!(v.len(), self.dim);
        let mut r = self.reduce(field, &v);
        let piv = r.iter().position(|&x| x != 0)?;
        let inv = field.inv(r[piv]);
        for x in r.iter_mut() {
            *x = field.mul(*x, inv);
        }
        for row in self.rows.iter_mut() {
            let c = row[piv];
            if c != 0 {
                axpy(field, row, field.neg(c), &r);
            }
        }
        let at = self.pivots.partition_point(|&p| p < piv);
        self.pivots.insert(at, piv);
        self.rows.insert(at, r.clone());
        Some(r)
    }

    pub fn sum(&self, field: &Field, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for r in &other.rows {
            s.insert(field, r.clone());
        }
        s
    }

    /// Intersection via the kernel of `self ⊕ other -> l^D`.
    pub fn intersect(&self, field: &Field, other: &Subspace) -> Subspace {
        // Zassenhaus: rows (a | a) for a in self, (b | 0) for b in other;
        // rows of the echelon form with zero left half give the intersection.
        let d = self.dim;
        let mut z = Subspace::zero(2 * d);
        for a in &self.rows {
            let mut v = a.clone();
            v.extend_from_slice(a);
            z.insert(field, v);
        }
        for b in &other.rows {
            let mut v = b.clone();
            v.extend(std::iter::repeat_n(0, d));
            z.insert(field, v);
        }
        let mut out = Subspace::zero(d);
        for (row, &piv) in z.rows.iter().zip(&z.pivots) {
            if piv >= d {
                out.insert(field, row[d..].to_vec());
            }
        }
        out
    }

    /// Image under a linear map given by its action on vectors.
    pub fn map(&self, field: &Field, target_dim: usize, f: impl Fn(&[Fq]) -> Vec<Fq>) -> Subspace {
        Subspace::spanned(field, target_dim, self.rows.iter().map(|r| f(r)))
    }

    /// `dim self - dim (self ∩ sub)`.
    pub fn quotient_dim(&self, field: &Field, sub: &Subspace) -> usize {
        self.rank() - self.intersect(field, sub).rank()
    }

    /// Flattened rows, used as a canonical key.
    pub fn key(&self) -> Vec<Fq> {
        self.rows.iter().flatten().copied().collect()
    }
}

pub fn axpy(field: &Field, y: &mut [Fq], c: Fq, x: &[Fq]) {
    if c == 0 {
        return;
    }
    for (a, &b) in y.iter_mut().zip(x) {
        if b != 0 {
            *a = field.add(*a, field.mul(c, b));
        }
    }
}

/// Kernel of the linear map `x ↦ sum_i x_i images[i]`, as a subspace of `l^{images.len()}`.
pub fn kernel(field: &Field, images: &[Vec<Fq>]) -> Subspace {
    let k = images.len();
    let w = images.first().map_or(0, |v| v.len());
    // echelonize rows (image_i | e_i); rows whose left part vanishes span the kernel
    let mut z = Subspace::zero(w + k);
    for (i, img) in images.iter().enumerate() {
        let mut v = img.clone();
        v.extend((0..k).map(|j| if j == i { 1 } else { 0 }));
        z.insert(field, v);
    }
    let mut out = Subspace::zero(k);
    for (row, &piv) in z.rows.iter().zip(&z.pivots) {
        if piv >= w {
            out.insert(field, row[w..].to_vec());
        }
    }
    out
}

/// Iterate the projective points of the span of `basis`: every nonzero
/// combination whose first nonzero coefficient is 1.
pub fn projective_points(field: &Field, basis: &[Vec<Fq>]) -> Vec<Vec<Fq>> {
    let k = basis.len();
    if k == 0 {
        return Vec::new();
    }
    let q = field.order() as usize;
    let dim = basis[0].len();
    let mut out = Vec::new();
    for lead in 0..k {
        let free = k - lead - 1;
        let count = q.pow(free as u32);
        for idx in 0..count {
            let mut v = basis[lead].clone();
            let mut t = idx;
            for j in lead + 1..k {
                let c = (t % q) as Fq;
                t /= q;
                axpy(field, &mut v, c, &basis[j]);
            }
            debug_assert_eq!(v.len(), dim);
            out.push(v);
        }
    }
    out
}
