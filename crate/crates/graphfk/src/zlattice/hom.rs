//! Homomorphisms between presented groups, with exact kernel, cokernel,
//! image, and exactness computations.

use super::group::FgAbGroup;
use super::matrix::{hermite_of, lattice_union, IntMatrix};
use super::smith::smith_normal_form;
use super::solve::{kernel_basis, preimage_lattice, solve_mod};
use super::LatticeError;
use num_bigint::BigInt;
use num_traits::Zero;

/// A homomorphism of presented groups. Row vectors act from the right:
/// `x ↦ x · matrix`, so `matrix` is `source.ngens × target.ngens` and the
/// matrix of a composite `fg` is the product `F·G`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupHom {
    source: FgAbGroup,
    target: FgAbGroup,
    matrix: IntMatrix,
}

impl GroupHom {
    /// Build a homomorphism, checking well-definedness: every relation of
    /// the source must land in the relation lattice of the target.
    pub fn new(
        source: FgAbGroup,
        target: FgAbGroup,
        matrix: IntMatrix,
    ) -> Result<Self, LatticeError> {
        if matrix.rows() != source.ngens() || matrix.cols() != target.ngens() {
            return Err(LatticeError::ShapeMismatch(format!(
                "hom matrix is {}x{}, expected {}x{}",
                matrix.rows(),
                matrix.cols(),
                source.ngens(),
                target.ngens()
            )));
        }
        let rels = source.relations();
        for i in 0..rels.rows() {
            let image: Vec<BigInt> = (0..matrix.cols())
                .map(|j| {
                    (0..matrix.rows())
                        .map(|k| &rels[(i, k)] * &matrix[(k, j)])
                        .sum()
                })
                .collect();
            if !target.is_zero_element(&image) {
                return Err(LatticeError::IllDefinedHom { row: i });
            }
        }
        Ok(GroupHom {
            source,
            target,
            matrix,
        })
    }

    pub fn identity(g: &FgAbGroup) -> Self {
        GroupHom {
            source: g.clone(),
            target: g.clone(),
            matrix: IntMatrix::identity(g.ngens()),
        }
    }

    pub fn zero(source: &FgAbGroup, target: &FgAbGroup) -> Self {
        GroupHom {
            source: source.clone(),
            target: target.clone(),
            matrix: IntMatrix::zero(source.ngens(), target.ngens()),
        }
    }

    pub fn source(&self) -> &FgAbGroup {
        &self.source
    }

    pub fn target(&self) -> &FgAbGroup {
        &self.target
    }

    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }

    /// Image of an element (as generator coordinates of the target).
    pub fn apply(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.source.ngens());
        (0..self.matrix.cols())
            .map(|j| {
                (0..self.matrix.rows())
                    .map(|k| &v[k] * &self.matrix[(k, j)])
                    .sum()
            })
            .collect()
    }

    /// Composite `self` then `g`. Errors when the middle groups differ as
    /// presentations.
    pub fn compose(&self, g: &GroupHom) -> Result<GroupHom, LatticeError> {
        if !self.target.same_presentation(&g.source) {
            return Err(LatticeError::MiddleMismatch(format!(
                "target has {} generators, next source has {}",
                self.target.ngens(),
                g.source.ngens()
            )));
        }
        Ok(GroupHom {
            source: self.source.clone(),
            target: g.target.clone(),
            matrix: self.matrix.mul(&g.matrix),
        })
    }

    /// Equality as maps: matrices agree modulo the target relations.
    pub fn same_map(&self, other: &GroupHom) -> bool {
        if !self.source.same_presentation(&other.source)
            || !self.target.same_presentation(&other.target)
        {
            return false;
        }
        for i in 0..self.matrix.rows() {
            let diff: Vec<BigInt> = (0..self.matrix.cols())
                .map(|j| &self.matrix[(i, j)] - &other.matrix[(i, j)])
                .collect();
            if !self.target.is_zero_element(&diff) {
                return false;
            }
        }
        true
    }

    pub fn is_zero_map(&self) -> bool {
        (0..self.matrix.rows()).all(|i| self.target.is_zero_element(self.matrix.row(i)))
    }

    pub fn is_surjective(&self) -> bool {
        let span = lattice_union(&self.matrix, self.target.relations());
        span == hermite_of(&IntMatrix::identity(self.target.ngens()))
    }

    pub fn is_injective(&self) -> bool {
        // preimage of the target relations must be exactly the source relations
        let pre = preimage_lattice(&self.matrix, self.target.relation_hnf());
        pre == *self.source.relation_hnf()
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_surjective() && self.is_injective()
    }

    /// Inverse of an isomorphism: solves `x · M ≡ eᵢ (mod target relations)`
    /// for every target generator.
    pub fn invert(&self) -> Option<GroupHom> {
        let n = self.target.ngens();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![BigInt::zero(); n];
            e[i] = BigInt::from(1);
            let sol = solve_mod(&self.matrix, self.target.relations(), &e)?;
            rows.push(sol);
        }
        let inv = GroupHom::new(
            self.target.clone(),
            self.source.clone(),
            IntMatrix::from_big_rows(rows, self.source.ngens()),
        )
        .ok()?;
        Some(inv)
    }

    /// The cokernel `target / image(self)` together with the projection.
    pub fn cokernel(&self) -> (FgAbGroup, GroupHom) {
        let rels = self.matrix.vstack(self.target.relations());
        let coker = FgAbGroup::from_relations(self.target.ngens(), rels);
        let proj = GroupHom {
            source: self.target.clone(),
            target: coker.clone(),
            matrix: IntMatrix::identity(self.target.ngens()),
        };
        (coker, proj)
    }
}

/// Cokernel of a matrix: `ℤ^cols / rowspan(m)` with the canonical projection
/// from the free group on the columns.
pub fn cokernel(m: &IntMatrix) -> (FgAbGroup, GroupHom) {
    let group = FgAbGroup::from_relations(m.cols(), m.clone());
    let free = FgAbGroup::free(m.cols());
    let proj = GroupHom::new(free, group.clone(), IntMatrix::identity(m.cols()))
        .expect("projection is always well defined");
    (group, proj)
}

/// Cokernel of a homomorphism, exposed at module level for convenience.
pub fn cokernel_of_hom(h: &GroupHom) -> (FgAbGroup, GroupHom) {
    h.cokernel()
}

/// Kernel of the right action of `m`: a free group with a Hermite-reduced
/// basis of row vectors `v` with `v·m = 0`, and its inclusion into `ℤ^rows`.
pub fn kernel(m: &IntMatrix) -> (FgAbGroup, GroupHom) {
    let basis = kernel_basis(m);
    let group = FgAbGroup::free(basis.rows());
    let ambient = FgAbGroup::free(m.rows());
    let incl =
        GroupHom::new(group.clone(), ambient, basis).expect("inclusion of a free group");
    (group, incl)
}

/// Is `image(f) = kernel(g)` inside the middle group?
///
/// The kernel of `g` is materialized as the preimage lattice of the target
/// relations; the image of `f` as the lattice spanned by the rows of its
/// matrix together with the middle relations. The subquotient
/// `ker(g)/im(f)` is then presented explicitly and tested for triviality by
/// its Smith form, after an inclusion check in the other direction.
pub fn is_exact_at(f: &GroupHom, g: &GroupHom) -> Result<bool, LatticeError> {
    if !f.target.same_presentation(&g.source) {
        return Err(LatticeError::MiddleMismatch(
            "exactness check requires f.target = g.source".into(),
        ));
    }
    let ker = preimage_lattice(&g.matrix, g.target.relation_hnf());
    let im = lattice_union(&f.matrix, f.target.relations());
    // image must sit inside the kernel (g∘f = 0)
    if lattice_union(&ker, &im) != ker {
        return Ok(false);
    }
    // present ker/im on the kernel basis and test triviality
    let mut rel_rows = Vec::with_capacity(im.rows());
    for i in 0..im.rows() {
        // every im-row is an integer combination of the kernel basis
        let coords = super::solve::solve_left(&ker, im.row(i))
            .expect("inclusion verified above");
        rel_rows.push(coords);
    }
    let rels = IntMatrix::from_big_rows(rel_rows, ker.rows());
    let snf = smith_normal_form(&rels);
    let quotient_trivial =
        snf.rank() == ker.rows() && snf.invariant_factors().is_empty();
    Ok(quotient_trivial)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> FgAbGroup {
        FgAbGroup::free(1)
    }

    fn z_mod(n: i64) -> FgAbGroup {
        FgAbGroup::from_relations(1, IntMatrix::from_rows(vec![vec![n]]))
    }

    #[test]
    fn cokernel_examples() {
        let (g, proj) = cokernel(&IntMatrix::from_rows(vec![vec![5]]));
        assert_eq!(g.invariant_factors(), &[BigInt::from(5)]);
        assert!(proj.is_surjective());

        let (g, _) = cokernel(&IntMatrix::from_rows(vec![vec![2, 0], vec![1, 3]]));
        assert_eq!(g.invariant_factors(), &[BigInt::from(6)]);

        let (g, _) = cokernel(&IntMatrix::from_rows(vec![vec![1, 1], vec![1, 1]]));
        assert_eq!(g.free_rank(), 1);
        assert!(g.invariant_factors().is_empty());
    }

    #[test]
    fn kernel_examples() {
        let (g, _) = kernel(&IntMatrix::from_rows(vec![vec![4]]));
        assert!(g.is_trivial());

        let (g, incl) = kernel(&IntMatrix::from_rows(vec![vec![1, 1], vec![1, 1]]));
        assert_eq!(g.free_rank(), 1);
        assert_eq!(incl.matrix(), &IntMatrix::from_rows(vec![vec![1, -1]]));

        let (g, incl) = kernel(&IntMatrix::from_rows(vec![vec![0]]));
        assert_eq!(g.free_rank(), 1);
        assert_eq!(incl.matrix(), &IntMatrix::from_rows(vec![vec![1]]));
    }

    #[test]
    fn compose_rules() {
        let double = GroupHom::new(z(), z(), IntMatrix::from_rows(vec![vec![2]])).unwrap();
        let proj = GroupHom::new(z(), z_mod(6), IntMatrix::identity(1)).unwrap();
        let comp = double.compose(&proj).unwrap();
        assert_eq!(comp.matrix(), &IntMatrix::from_rows(vec![vec![2]]));

        let id = GroupHom::identity(&z());
        assert!(id.compose(&double).unwrap().same_map(&double));
        let zero = GroupHom::zero(&z(), &z_mod(6));
        assert!(double.compose(&zero).unwrap().is_zero_map());

        // mismatched middle
        let from_z2 = GroupHom::zero(&z_mod(2), &z());
        assert!(double.compose(&from_z2).is_err());
    }

    #[test]
    fn well_definedness() {
        // Z/2 -> Z by identity matrix is ill-defined
        assert!(GroupHom::new(z_mod(2), z(), IntMatrix::identity(1)).is_err());
        // Z/2 -> Z/4 by x -> 2x is fine
        assert!(GroupHom::new(z_mod(2), z_mod(4), IntMatrix::from_rows(vec![vec![2]])).is_ok());
    }

    #[test]
    fn exactness_examples() {
        // 0 -> G -> G exact at the first G
        let g = z_mod(6);
        let incl = GroupHom::zero(&FgAbGroup::trivial(), &g);
        let id = GroupHom::identity(&g);
        assert!(is_exact_at(&incl, &id).unwrap());

        // Z --x2--> Z --proj--> Z/2 exact in the middle
        let double = GroupHom::new(z(), z(), IntMatrix::from_rows(vec![vec![2]])).unwrap();
        let proj = GroupHom::new(z(), z_mod(2), IntMatrix::identity(1)).unwrap();
        assert!(is_exact_at(&double, &proj).unwrap());

        // Z --x4--> Z --proj--> Z/2 not exact (im = 4Z ⊊ ker = 2Z)
        let quad = GroupHom::new(z(), z(), IntMatrix::from_rows(vec![vec![4]])).unwrap();
        assert!(!is_exact_at(&quad, &proj).unwrap());
    }

    #[test]
    fn iso_and_inverse() {
        let m = GroupHom::new(z_mod(5), z_mod(5), IntMatrix::from_rows(vec![vec![2]])).unwrap();
        assert!(m.is_isomorphism());
        let inv = m.invert().unwrap();
        assert!(m.compose(&inv).unwrap().same_map(&GroupHom::identity(&z_mod(5))));

        let triple = GroupHom::new(z(), z(), IntMatrix::from_rows(vec![vec![3]])).unwrap();
        assert!(triple.is_injective());
        assert!(!triple.is_surjective());
        assert!(triple.invert().is_none());
    }

    /// Brute-force subgroup comparison on finite middle groups, used as an
    /// independent oracle for `is_exact_at`.
    pub fn exactness_by_enumeration(f: &GroupHom, g: &GroupHom) -> bool {
        let middle = f.target();
        let elems = middle.enumerate_elements(64);
        let sources = f.source().enumerate_elements(64);
        let mut image: Vec<Vec<BigInt>> = sources
            .iter()
            .map(|v| middle.reduce(&f.apply(v)))
            .collect();
        image.sort();
        image.dedup();
        let mut ker: Vec<Vec<BigInt>> = elems
            .into_iter()
            .filter(|v| g.target().is_zero_element(&g.apply(v)))
            .collect();
        ker.sort();
        ker.dedup();
        image == ker
    }

    #[test]
    fn exactness_matches_enumeration() {
        // Z/4 --x2--> Z/4 --x2--> Z/4 is exact in the middle
        let g4 = z_mod(4);
        let dbl = GroupHom::new(g4.clone(), g4.clone(), IntMatrix::from_rows(vec![vec![2]]))
            .unwrap();
        assert!(is_exact_at(&dbl, &dbl).unwrap());
        assert!(exactness_by_enumeration(&dbl, &dbl));

        // Z/8 --x2--> Z/8 --x2--> Z/8 is not exact (im=2Z/8, ker=4Z/8)
        let g8 = z_mod(8);
        let dbl8 = GroupHom::new(g8.clone(), g8.clone(), IntMatrix::from_rows(vec![vec![2]]))
            .unwrap();
        let quad8 = GroupHom::new(g8.clone(), g8, IntMatrix::from_rows(vec![vec![4]])).unwrap();
        assert_eq!(
            is_exact_at(&dbl8, &quad8).unwrap(),
            exactness_by_enumeration(&dbl8, &quad8)
        );
        assert_eq!(
            is_exact_at(&dbl8, &dbl8).unwrap(),
            exactness_by_enumeration(&dbl8, &dbl8)
        );
    }
}
