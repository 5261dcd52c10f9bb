//! Smith normal form over ℤ with tracked unimodular transforms.

use super::matrix::IntMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

/// A Smith decomposition `left · source · right = diag` with `left`, `right`
/// unimodular and the diagonal entries nonnegative, each dividing the next.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub left: IntMatrix,
    pub diag: IntMatrix,
    pub right: IntMatrix,
    pub source: IntMatrix,
}

impl SmithDecomposition {
    /// Nonzero diagonal entries `d₁ | d₂ | …`.
    pub fn diagonal_entries(&self) -> Vec<BigInt> {
        let n = self.diag.rows().min(self.diag.cols());
        (0..n)
            .map(|i| self.diag[(i, i)].clone())
            .filter(|d| !d.is_zero())
            .collect()
    }

    /// Diagonal entries strictly greater than one — the invariant factors of
    /// the cokernel's torsion part.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diagonal_entries()
            .into_iter()
            .filter(|d| *d > BigInt::from(1))
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal_entries().len()
    }

    /// `left · source · right == diag`, checked exactly.
    pub fn verify(&self) -> bool {
        let prod = self.left.mul(&self.source).mul(&self.right);
        if prod != self.diag {
            return false;
        }
        if self.left.determinant().abs() != BigInt::from(1) {
            return false;
        }
        if self.right.determinant().abs() != BigInt::from(1) {
            return false;
        }
        let n = self.diag.rows().min(self.diag.cols());
        for i in 0..self.diag.rows() {
            for j in 0..self.diag.cols() {
                if i != j && !self.diag[(i, j)].is_zero() {
                    return false;
                }
            }
        }
        for i in 0..n.saturating_sub(1) {
            let (a, b) = (&self.diag[(i, i)], &self.diag[(i + 1, i + 1)]);
            if a.is_zero() && !b.is_zero() {
                return false;
            }
            if !a.is_zero() && !b.mod_floor(a).is_zero() {
                return false;
            }
        }
        true
    }
}

/// Smith normal form by elementary row and column operations.
///
/// Pivot selection: the nonzero entry of minimal absolute value in the
/// working submatrix, ties broken by lowest (row, col) in row-major order.
/// The output is therefore deterministic for a given input.
pub fn smith_normal_form(m: &IntMatrix) -> SmithDecomposition {
    let mut a = m.clone();
    let mut left = IntMatrix::identity(m.rows());
    let mut right = IntMatrix::identity(m.cols());
    let bound = m.rows().min(m.cols());
    let mut k = 0;

    while k < bound {
        let Some((pi, pj)) = min_abs_pivot(&a, k) else {
            break;
        };
        if pi != k {
            a.swap_rows(k, pi);
            left.swap_rows(k, pi);
        }
        if pj != k {
            a.swap_cols(k, pj);
            right.swap_cols(k, pj);
        }

        let mut dirty = false;
        for i in k + 1..a.rows() {
            if a[(i, k)].is_zero() {
                continue;
            }
            let q = a[(i, k)].div_floor(&a[(k, k)]);
            a.add_multiple_of_row(i, k, &-q.clone());
            left.add_multiple_of_row(i, k, &-q);
            if !a[(i, k)].is_zero() {
                dirty = true;
            }
        }
        for j in k + 1..a.cols() {
            if a[(k, j)].is_zero() {
                continue;
            }
            let q = a[(k, j)].div_floor(&a[(k, k)]);
            a.add_multiple_of_col(j, k, &-q.clone());
            right.add_multiple_of_col(j, k, &-q);
            if !a[(k, j)].is_zero() {
                dirty = true;
            }
        }
        if dirty {
            // remainders are strictly smaller than the pivot; reselect
            continue;
        }

        // pivot row and column are clear; enforce divisibility over the rest
        if let Some(i) = find_nondivisible_row(&a, k) {
            a.add_multiple_of_row(k, i, &BigInt::from(1));
            left.add_multiple_of_row(k, i, &BigInt::from(1));
            continue;
        }

        if a[(k, k)].is_negative() {
            a.negate_row(k);
            left.negate_row(k);
        }
        k += 1;
    }

    SmithDecomposition {
        left,
        diag: a,
        right,
        source: m.clone(),
    }
}

fn min_abs_pivot(a: &IntMatrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in k..a.rows() {
        for j in k..a.cols() {
            if a[(i, j)].is_zero() {
                continue;
            }
            match best {
                None => best = Some((i, j)),
                Some(b) => {
                    if a[(i, j)].abs() < a[b].abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

fn find_nondivisible_row(a: &IntMatrix, k: usize) -> Option<usize> {
    let p = &a[(k, k)];
    for i in k + 1..a.rows() {
        for j in k + 1..a.cols() {
            if !a[(i, j)].mod_floor(p).is_zero() {
                return Some(i);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_fixed_point() {
        let snf = smith_normal_form(&IntMatrix::from_rows(vec![vec![0]]));
        assert_eq!(snf.diag, IntMatrix::from_rows(vec![vec![0]]));
        assert_eq!(snf.left, IntMatrix::identity(1));
        assert_eq!(snf.right, IntMatrix::identity(1));
        assert!(snf.verify());
    }

    #[test]
    fn one_by_one() {
        for n in 0..7i64 {
            let snf = smith_normal_form(&IntMatrix::from_rows(vec![vec![n]]));
            assert_eq!(snf.diag[(0, 0)], BigInt::from(n));
            assert!(snf.verify());
        }
    }

    #[test]
    fn coker_z6_example() {
        // det = 6, gcd of entries = 1, so the cokernel is Z/6
        let snf = smith_normal_form(&IntMatrix::from_rows(vec![vec![2, 0], vec![1, 3]]));
        assert!(snf.verify());
        assert_eq!(snf.invariant_factors(), vec![BigInt::from(6)]);
        assert_eq!(
            snf.diagonal_entries(),
            vec![BigInt::from(1), BigInt::from(6)]
        );
    }

    #[test]
    fn rank_deficient() {
        let snf = smith_normal_form(&IntMatrix::from_rows(vec![vec![1, 1], vec![1, 1]]));
        assert!(snf.verify());
        assert_eq!(snf.rank(), 1);
        assert_eq!(snf.invariant_factors(), Vec::<BigInt>::new());
    }

    #[test]
    fn divisibility_fixup() {
        // diag(6, 4) must become diag(2, 12)
        let snf = smith_normal_form(&IntMatrix::from_rows(vec![vec![6, 0], vec![0, 4]]));
        assert!(snf.verify());
        assert_eq!(
            snf.diagonal_entries(),
            vec![BigInt::from(2), BigInt::from(12)]
        );
    }

    #[test]
    fn deterministic() {
        let m = IntMatrix::from_rows(vec![vec![4, -6, 2], vec![8, 0, -3], vec![5, 5, 5]]);
        let a = smith_normal_form(&m);
        let b = smith_normal_form(&m);
        assert!(a.verify());
        assert_eq!(a.left, b.left);
        assert_eq!(a.right, b.right);
        assert_eq!(a.diag, b.diag);
    }
}
