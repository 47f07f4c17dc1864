//! The residue field tower `F_p ⊆ k ⊆ l` and the embeddings of `k` into `l`.

use crate::error::{Error, Result};
use crate::field::{is_prime, Field, Fq};

/// `k = F_{p^f}` inside `l = F_{p^g}`.
///
/// The embeddings `k -> l` are `psi_i = psi_0 ∘ Frob^i`, `i = 0..f`, where
/// `psi_0` sends the generator of `k` to the smallest root (by element index)
/// of the defining polynomial of `k` in `l`. The CRT factors of
/// `l ⊗_{F_p} k` are indexed by these embeddings in this order.
#[derive(Clone, Debug)]
pub struct FieldTower {
    k: Field,
    l: Field,
    /// `roots[i] = psi_i(y)` where `y` generates `k`.
    roots: Vec<Fq>,
    /// Inverse of the Vandermonde matrix `V[i][j] = roots[i]^j`.
    vandermonde_inv: Vec<Vec<Fq>>,
}

pub fn make_field_tower(p: u32, f: u32, g: u32) -> Result<FieldTower> {
    FieldTower::new(p, f, g)
}

impl FieldTower {
    pub fn new(p: u32, f: u32, g: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("p = {p} is not prime")));
        }
        if p == 2 {
            return Err(Error::InvalidParameter("p must be odd".into()));
        }
        if f == 0 || g == 0 || !g.is_multiple_of(f) {
            return Err(Error::InvalidParameter(format!("need f >= 1 and f | g, got f = {f}, g = {g}")));
        }
        let k = Field::new(p, f)?;
        let l = Field::new(p, g)?;
        let mut kmod = k.modulus().to_vec();
        kmod.push(1);
        let r0 = l
            .elements()
            .find(|&x| l.eval_prime_poly(&kmod, x) == 0)
            .ok_or_else(|| Error::InvalidParameter("k does not embed into l".into()))?;
        let mut roots = Vec::with_capacity(f as usize);
        let mut r = r0;
        for _ in 0..f {
            roots.push(r);
            r = l.frobenius(r);
        }
        debug_assert_eq!(r, r0);
        let vandermonde_inv = invert_vandermonde(&l, &roots)?;
        Ok(FieldTower { k, l, roots, vandermonde_inv })
    }

    pub fn p(&self) -> u32 {
        self.l.characteristic()
    }

    pub fn f(&self) -> usize {
        self.k.degree() as usize
    }

    pub fn g(&self) -> usize {
        self.l.degree() as usize
    }

    pub fn k(&self) -> &Field {
        &self.k
    }

    pub fn l(&self) -> &Field {
        &self.l
    }

    pub fn roots(&self) -> &[Fq] {
        &self.roots
    }

    /// `psi_i(a)` for `a ∈ k`.
    pub fn embed(&self, i: usize, a: Fq) -> Fq {
        let digits = self.k.digits(a);
        self.l.eval_prime_poly(&digits, self.roots[i])
    }

    pub(crate) fn vandermonde_inv(&self) -> &[Vec<Fq>] {
        &self.vandermonde_inv
    }
}

fn invert_vandermonde(l: &Field, roots: &[Fq]) -> Result<Vec<Vec<Fq>>> {
    let f = roots.len();
    let mut m: Vec<Vec<Fq>> = roots
        .iter()
        .map(|&r| {
            let mut row: Vec<Fq> = (0..f).map(|j| l.pow(r, j as u64)).collect();
            row.extend((0..f).map(|_| 0));
            row
        })
        .collect();
    for (i, row) in m.iter_mut().enumerate() {
        row[f + i] = 1;
    }
    for col in 0..f {
        let piv = (col..f).find(|&r| m[r][col] != 0).ok_or(Error::NotInvertible)?;
        m.swap(col, piv);
        let inv = l.inv(m[col][col]);
        for x in m[col].iter_mut() {
            *x = l.mul(*x, inv);
        }
        for r in 0..f {
            if r != col && m[r][col] != 0 {
                let c = m[r][col];
                for j in 0..2 * f {
                    let t = l.mul(c, m[col][j]);
                    m[r][j] = l.sub(m[r][j], t);
                }
            }
        }
    }
    Ok(m.into_iter().map(|row| row[f..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_tower() {
        let t = make_field_tower(3, 1, 1).unwrap();
        assert_eq!(t.k().order(), 3);
        assert_eq!(t.l().order(), 3);
        for a in t.k().elements() {
            assert_eq!(t.embed(0, a), a);
        }
    }

    #[test]
    fn prime_subfield_inclusion() {
        let t = make_field_tower(3, 1, 2).unwrap();
        assert_eq!(t.l().order(), 9);
        for a in 0..3u16 {
            assert_eq!(t.embed(0, a), a);
        }
    }

    #[test]
    fn f9_frobenius_order_two_by_exhaustion() {
        let t = make_field_tower(3, 2, 2).unwrap();
        let k = t.k();
        let mut moved = false;
        for a in k.elements() {
            let fa = k.frobenius(a);
            assert_eq!(k.frobenius(fa), a);
            moved |= fa != a;
        }
        assert!(moved);
        assert_eq!(t.roots().len(), 2);
        assert_ne!(t.roots()[0], t.roots()[1]);
    }

    #[test]
    fn embeddings_are_homomorphisms() {
        let t = make_field_tower(3, 2, 4).unwrap();
        let (k, l) = (t.k(), t.l());
        for i in 0..2 {
            for a in k.elements() {
                for b in k.elements() {
                    assert_eq!(t.embed(i, k.mul(a, b)), l.mul(t.embed(i, a), t.embed(i, b)));
                    assert_eq!(t.embed(i, k.add(a, b)), l.add(t.embed(i, a), t.embed(i, b)));
                }
                // psi_{i+1} = psi_i ∘ Frob
                assert_eq!(t.embed((i + 1) % 2, a), t.embed(i, k.frobenius(a)));
            }
        }
    }

    #[test]
    fn parameter_errors() {
        assert!(make_field_tower(4, 1, 1).is_err());
        assert!(make_field_tower(2, 1, 1).is_err());
        assert!(make_field_tower(3, 2, 3).is_err());
    }
}
