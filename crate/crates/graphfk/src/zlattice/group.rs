//! Finitely generated abelian groups as presentations `ℤ^n / rowspan(R)`.

use super::matrix::{hermite_of, in_lattice, reduce_mod_hnf, IntMatrix};
use super::smith::smith_normal_form;
use num_bigint::BigInt;
use num_traits::{One, Zero};

/// A finitely generated abelian group presented as `ℤ^ngens` modulo the row
/// span of `relations`, together with its cached canonical form.
///
/// Elements are row vectors of length `ngens`. Two presentations are the
/// *same group* (not merely isomorphic) when they have equal generator count
/// and equal relation lattice; abstract isomorphism is equality of
/// `(invariant_factors, free_rank)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FgAbGroup {
    ngens: usize,
    relations: IntMatrix,
    rel_hnf: IntMatrix,
    invariant_factors: Vec<BigInt>,
    free_rank: usize,
    /// Unimodular coordinate change diagonalizing the relation lattice;
    /// `ngens × ngens`, columns reordered so relations become diagonal.
    canon_transform: IntMatrix,
    /// Diagonal entry per transformed coordinate (zero = free coordinate).
    canon_diag: Vec<BigInt>,
}

impl FgAbGroup {
    pub fn from_relations(ngens: usize, relations: IntMatrix) -> Self {
        assert_eq!(relations.cols(), ngens, "relation width must match ngens");
        let rel_hnf = hermite_of(&relations);
        let snf = smith_normal_form(&relations);
        let invariant_factors = snf.invariant_factors();
        let rank = snf.rank();
        let free_rank = ngens - rank;
        // In coordinates y = x · right, the relation lattice is spanned by
        // d_i · e_i for the nonzero diagonal entries.
        let mut canon_diag = vec![BigInt::zero(); ngens];
        let bound = relations.rows().min(ngens);
        for i in 0..bound {
            canon_diag[i] = snf.diag[(i, i)].clone();
        }
        FgAbGroup {
            ngens,
            relations,
            rel_hnf,
            invariant_factors,
            free_rank,
            canon_transform: snf.right,
            canon_diag,
        }
    }

    /// The free group `ℤ^n`.
    pub fn free(n: usize) -> Self {
        FgAbGroup::from_relations(n, IntMatrix::zero(0, n))
    }

    pub fn trivial() -> Self {
        FgAbGroup::free(0)
    }

    /// Canonical presentation `⊕ ℤ/dᵢ ⊕ ℤ^rank` with one generator per
    /// summand and a diagonal relation matrix.
    pub fn canonical(factors: &[BigInt], rank: usize) -> Self {
        let n = factors.len() + rank;
        let mut rel = IntMatrix::zero(factors.len(), n);
        for (i, d) in factors.iter().enumerate() {
            rel[(i, i)] = d.clone();
        }
        FgAbGroup::from_relations(n, rel)
    }

    pub fn ngens(&self) -> usize {
        self.ngens
    }

    pub fn relations(&self) -> &IntMatrix {
        &self.relations
    }

    pub fn relation_hnf(&self) -> &IntMatrix {
        &self.rel_hnf
    }

    pub fn invariant_factors(&self) -> &[BigInt] {
        &self.invariant_factors
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn is_trivial(&self) -> bool {
        self.free_rank == 0 && self.invariant_factors.is_empty()
    }

    pub fn is_free(&self) -> bool {
        self.invariant_factors.is_empty()
    }

    /// Order of the group, `None` when infinite.
    pub fn order(&self) -> Option<BigInt> {
        if self.free_rank > 0 {
            return None;
        }
        let mut n = BigInt::one();
        for d in &self.invariant_factors {
            n *= d;
        }
        Some(n)
    }

    /// Same underlying presented group: equal generators and equal relation
    /// lattice.
    pub fn same_presentation(&self, other: &FgAbGroup) -> bool {
        self.ngens == other.ngens && self.rel_hnf == other.rel_hnf
    }

    /// Abstract isomorphism test via canonical invariants.
    pub fn isomorphic(&self, other: &FgAbGroup) -> bool {
        self.free_rank == other.free_rank && self.invariant_factors == other.invariant_factors
    }

    /// Deterministic representative of an element's coset.
    pub fn reduce(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.ngens);
        reduce_mod_hnf(v, &self.rel_hnf)
    }

    pub fn is_zero_element(&self, v: &[BigInt]) -> bool {
        in_lattice(v, &self.rel_hnf)
    }

    pub fn elements_equal(&self, a: &[BigInt], b: &[BigInt]) -> bool {
        let diff: Vec<BigInt> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.is_zero_element(&diff)
    }

    /// Number of canonical generators (torsion factors plus free rank).
    pub fn canon_ngens(&self) -> usize {
        self.invariant_factors.len() + self.free_rank
    }

    /// Matrix of the canonical map `self → canonical form` (ngens ×
    /// canon_ngens). Composing with [`FgAbGroup::from_canon_matrix`] is the
    /// identity modulo relations.
    pub fn to_canon_matrix(&self) -> IntMatrix {
        let kept = self.kept_coordinates();
        let mut out = IntMatrix::zero(self.ngens, kept.len());
        for i in 0..self.ngens {
            for (cj, &j) in kept.iter().enumerate() {
                out[(i, cj)] = self.canon_transform[(i, j)].clone();
            }
        }
        out
    }

    /// Matrix of the canonical section `canonical form → self`.
    pub fn from_canon_matrix(&self) -> IntMatrix {
        let kept = self.kept_coordinates();
        let inv = unimodular_inverse(&self.canon_transform);
        let mut out = IntMatrix::zero(kept.len(), self.ngens);
        for (ci, &i) in kept.iter().enumerate() {
            for j in 0..self.ngens {
                out[(ci, j)] = inv[(i, j)].clone();
            }
        }
        out
    }

    /// The canonical group this presentation is isomorphic to.
    pub fn canon_group(&self) -> FgAbGroup {
        FgAbGroup::canonical(&self.invariant_factors, self.free_rank)
    }

    /// Transformed coordinates that survive in the canonical form: torsion
    /// coordinates with d > 1 first, then free coordinates, matching
    /// [`FgAbGroup::canonical`]'s generator order.
    fn kept_coordinates(&self) -> Vec<usize> {
        let one = BigInt::one();
        let mut torsion = Vec::new();
        let mut free = Vec::new();
        for (j, d) in self.canon_diag.iter().enumerate() {
            if d.is_zero() {
                free.push(j);
            } else if *d > one {
                torsion.push(j);
            }
        }
        torsion.extend(free);
        torsion
    }

    /// Enumerate all elements of a finite group as reduced representatives.
    /// Panics if the group is infinite or larger than `cap`.
    pub fn enumerate_elements(&self, cap: usize) -> Vec<Vec<BigInt>> {
        let order = self
            .order()
            .expect("cannot enumerate an infinite group");
        assert!(
            order <= BigInt::from(cap),
            "group too large to enumerate ({order} elements)"
        );
        // iterate over canonical coordinates and map back
        let from = self.from_canon_matrix();
        let k = self.canon_ngens();
        let mut coords = vec![BigInt::zero(); k];
        let mut out = Vec::new();
        loop {
            let mut v = vec![BigInt::zero(); self.ngens];
            for (i, c) in coords.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for j in 0..self.ngens {
                    v[j] += c * &from[(i, j)];
                }
            }
            out.push(self.reduce(&v));
            // increment mixed-radix counter over the invariant factors
            let mut i = 0;
            loop {
                if i == k {
                    out.sort();
                    out.dedup();
                    return out;
                }
                coords[i] += 1;
                if coords[i] < self.invariant_factors[i] {
                    break;
                }
                coords[i] = BigInt::zero();
                i += 1;
            }
        }
    }
}

/// Direct sum of presented groups: generators concatenated, relations block
/// diagonal. Returns the sum and the generator offset of each summand.
pub fn direct_sum(groups: &[&FgAbGroup]) -> (FgAbGroup, Vec<usize>) {
    let total: usize = groups.iter().map(|g| g.ngens()).sum();
    let mut offsets = Vec::with_capacity(groups.len());
    let mut at = 0usize;
    let mut rows: Vec<Vec<BigInt>> = Vec::new();
    for g in groups {
        offsets.push(at);
        let rel = g.relations();
        for i in 0..rel.rows() {
            let mut row = vec![BigInt::zero(); total];
            for j in 0..rel.cols() {
                row[at + j] = rel[(i, j)].clone();
            }
            rows.push(row);
        }
        at += g.ngens();
    }
    let rel = IntMatrix::from_big_rows(rows, total);
    (FgAbGroup::from_relations(total, rel), offsets)
}

/// Inverse of a unimodular matrix. With `L·m·R = I` from the Smith form,
/// `m⁻¹ = R·L`.
fn unimodular_inverse(m: &IntMatrix) -> IntMatrix {
    assert!(m.is_square());
    let snf = smith_normal_form(m);
    assert_eq!(
        snf.diag,
        IntMatrix::identity(m.rows()),
        "matrix is not unimodular"
    );
    snf.right.mul(&snf.left)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_invariants() {
        let g = FgAbGroup::from_relations(2, IntMatrix::from_rows(vec![vec![2, 0], vec![1, 3]]));
        assert_eq!(g.invariant_factors(), &[BigInt::from(6)]);
        assert_eq!(g.free_rank(), 0);
        assert_eq!(g.order(), Some(BigInt::from(6)));

        let h = FgAbGroup::from_relations(2, IntMatrix::from_rows(vec![vec![1, 1], vec![1, 1]]));
        assert_eq!(h.invariant_factors(), &[] as &[BigInt]);
        assert_eq!(h.free_rank(), 1);
        assert!(h.order().is_none());
    }

    #[test]
    fn trivial_iff_no_invariants() {
        assert!(FgAbGroup::trivial().is_trivial());
        let g = FgAbGroup::from_relations(1, IntMatrix::from_rows(vec![vec![1]]));
        assert!(g.is_trivial());
        assert!(!FgAbGroup::free(1).is_trivial());
    }

    #[test]
    fn canon_roundtrip() {
        let g = FgAbGroup::from_relations(2, IntMatrix::from_rows(vec![vec![2, 0], vec![1, 3]]));
        let to = g.to_canon_matrix();
        let from = g.from_canon_matrix();
        // to ∘ from == id on the canonical side, modulo canonical relations
        let canon = g.canon_group();
        let round = from.mul(&to);
        for i in 0..canon.ngens() {
            let mut v = round.row_vec(i);
            v[i] -= 1;
            assert!(canon.is_zero_element(&v));
        }
        // from ∘ to == id on the presentation side, modulo relations
        let round2 = to.mul(&from);
        for i in 0..g.ngens() {
            let mut v = round2.row_vec(i);
            v[i] -= 1;
            assert!(g.is_zero_element(&v));
        }
    }

    #[test]
    fn enumerate_small() {
        let g = FgAbGroup::from_relations(2, IntMatrix::from_rows(vec![vec![2, 0], vec![0, 3]]));
        let elems = g.enumerate_elements(64);
        assert_eq!(elems.len(), 6);
    }

    #[test]
    fn unimodular_inverse_works() {
        let m = IntMatrix::from_rows(vec![vec![1, 2], vec![1, 3]]);
        let inv = unimodular_inverse(&m);
        assert_eq!(m.mul(&inv), IntMatrix::identity(2));
        assert_eq!(inv.mul(&m), IntMatrix::identity(2));
    }
}
