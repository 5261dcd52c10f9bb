//! Integer linear solvers built on the Smith machinery: kernels of the right
//! action, affine solves `x·M = b`, congruence systems for unknown matrices,
//! and lattice-point searches in boxes.

use super::matrix::{row_hermite, IntMatrix};
use super::smith::smith_normal_form;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

/// Hermite-reduced basis of `{ v ∈ ℤ^rows : v · m = 0 }`, one basis vector
/// per row.
pub fn kernel_basis(m: &IntMatrix) -> IntMatrix {
    let snf = smith_normal_form(m);
    // v·m = 0  ⟺  (v·L⁻¹)·D = 0, so the kernel is spanned by the rows of L
    // at the zero rows of D.
    let bound = m.rows().min(m.cols());
    let mut rows = Vec::new();
    for i in 0..m.rows() {
        let zero_row = i >= bound || snf.diag[(i, i)].is_zero();
        if zero_row {
            rows.push(snf.left.row_vec(i));
        }
    }
    row_hermite(rows, m.rows())
}

/// One solution of `x · m = rhs`, if any.
pub fn solve_left(m: &IntMatrix, rhs: &[BigInt]) -> Option<Vec<BigInt>> {
    assert_eq!(rhs.len(), m.cols());
    let snf = smith_normal_form(m);
    // x·m = rhs ⟺ w·D = rhs·R with w = x·L⁻¹, i.e. x = w·L
    let target: Vec<BigInt> = (0..m.cols())
        .map(|j| {
            (0..m.cols())
                .map(|t| &rhs[t] * &snf.right[(t, j)])
                .sum::<BigInt>()
        })
        .collect();
    let bound = m.rows().min(m.cols());
    let mut w = vec![BigInt::zero(); m.rows()];
    for j in 0..m.cols() {
        let d = if j < bound {
            snf.diag[(j, j)].clone()
        } else {
            BigInt::zero()
        };
        if d.is_zero() {
            if !target[j].is_zero() {
                return None;
            }
        } else {
            let (q, r) = target[j].div_rem(&d);
            if !r.is_zero() {
                return None;
            }
            w[j] = q;
        }
    }
    let mut x = vec![BigInt::zero(); m.rows()];
    for i in 0..m.rows() {
        if w[i].is_zero() {
            continue;
        }
        for j in 0..m.rows() {
            x[j] += &w[i] * &snf.left[(i, j)];
        }
    }
    Some(x)
}

/// Solve `X · m = rhs` row by row.
pub fn solve_left_matrix(m: &IntMatrix, rhs: &IntMatrix) -> Option<IntMatrix> {
    assert_eq!(m.cols(), rhs.cols());
    let mut rows = Vec::with_capacity(rhs.rows());
    for i in 0..rhs.rows() {
        rows.push(solve_left(m, rhs.row(i))?);
    }
    Some(IntMatrix::from_big_rows(rows, m.rows()))
}

/// One solution of `x · m ≡ rhs (mod rowspan(lat))`, if any. Returns only
/// the `x` part.
pub fn solve_mod(m: &IntMatrix, lat: &IntMatrix, rhs: &[BigInt]) -> Option<Vec<BigInt>> {
    if lat.rows() == 0 {
        return solve_left(m, rhs);
    }
    assert_eq!(m.cols(), lat.cols());
    let stacked = m.vstack(lat);
    let sol = solve_left(&stacked, rhs)?;
    Some(sol[..m.rows()].to_vec())
}

/// Hermite basis of `{ x ∈ ℤ^rows(m) : x · m ∈ rowspan(lat) }`.
pub fn preimage_lattice(m: &IntMatrix, lat: &IntMatrix) -> IntMatrix {
    let g = m.rows();
    let stacked = if lat.rows() == 0 {
        m.clone()
    } else {
        assert_eq!(m.cols(), lat.cols());
        m.vstack(lat)
    };
    let ker = kernel_basis(&stacked);
    let rows: Vec<Vec<BigInt>> = (0..ker.rows())
        .map(|i| ker.row(i)[..g].to_vec())
        .collect();
    row_hermite(rows, g)
}

/// One constraint `left · X · right ≡ rhs (mod rowspan(modulus))` on an
/// unknown integer matrix `X`.
///
/// `left: m×g`, `X: g×n`, `right: n×q`, `rhs: m×q`, `modulus`: lattice rows
/// in `ℤ^q` (possibly none).
pub struct Sandwich<'a> {
    pub left: &'a IntMatrix,
    pub right: &'a IntMatrix,
    pub rhs: &'a IntMatrix,
    pub modulus: &'a IntMatrix,
}

/// Solve a simultaneous system of [`Sandwich`] constraints for the unknown
/// `g×n` matrix. Returns a particular solution together with a Hermite basis
/// of the homogeneous solution lattice (each basis element a `g×n` matrix).
pub fn solve_sandwich_system(
    g: usize,
    n: usize,
    systems: &[Sandwich<'_>],
) -> Option<(IntMatrix, Vec<IntMatrix>)> {
    // Unknown vector u = vec(X) followed by one multiplier per (system,
    // row, modulus generator). Equations are indexed by (system, row i,
    // column t of rhs):
    //   Σ_{k,j} left[i,k]·X[k,j]·right[j,t] − Σ_r T[i,r]·modulus[r,t] = rhs[i,t]
    let nx = g * n;
    let mut naux = 0usize;
    let mut aux_offsets = Vec::with_capacity(systems.len());
    let mut neq = 0usize;
    for s in systems {
        assert_eq!(s.left.cols(), g, "sandwich left width");
        assert_eq!(s.right.rows(), n, "sandwich right height");
        assert_eq!(s.rhs.rows(), s.left.rows(), "sandwich rhs rows");
        assert_eq!(s.rhs.cols(), s.right.cols(), "sandwich rhs cols");
        if s.modulus.rows() > 0 {
            assert_eq!(s.modulus.cols(), s.right.cols(), "sandwich modulus width");
        }
        aux_offsets.push(nx + naux);
        naux += s.left.rows() * s.modulus.rows();
        neq += s.rhs.rows() * s.rhs.cols();
    }
    let nu = nx + naux;

    let mut coeff = IntMatrix::zero(nu, neq);
    let mut target = vec![BigInt::zero(); neq];
    let mut eq = 0usize;
    for (si, s) in systems.iter().enumerate() {
        let q = s.rhs.cols();
        for i in 0..s.rhs.rows() {
            for t in 0..q {
                for k in 0..g {
                    let lk = &s.left[(i, k)];
                    if lk.is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        let c = lk * &s.right[(j, t)];
                        if !c.is_zero() {
                            coeff[(k * n + j, eq)] += c;
                        }
                    }
                }
                for r in 0..s.modulus.rows() {
                    let idx = aux_offsets[si] + i * s.modulus.rows() + r;
                    coeff[(idx, eq)] = -s.modulus[(r, t)].clone();
                }
                target[eq] = s.rhs[(i, t)].clone();
                eq += 1;
            }
        }
    }

    let particular_u = solve_left(&coeff, &target)?;
    let hom = kernel_basis(&coeff);

    let mut particular = IntMatrix::zero(g, n);
    for k in 0..g {
        for j in 0..n {
            particular[(k, j)] = particular_u[k * n + j].clone();
        }
    }
    // project homogeneous basis onto the X block and re-reduce
    let proj_rows: Vec<Vec<BigInt>> = (0..hom.rows())
        .map(|i| hom.row(i)[..nx].to_vec())
        .collect();
    let proj = row_hermite(proj_rows, nx);
    let mut basis = Vec::with_capacity(proj.rows());
    for i in 0..proj.rows() {
        let mut mat = IntMatrix::zero(g, n);
        for k in 0..g {
            for j in 0..n {
                mat[(k, j)] = proj[(i, k * n + j)].clone();
            }
        }
        basis.push(mat);
    }
    Some((particular, basis))
}

/// First point (coefficients enumerated in ascending order, rows in Hermite
/// pivot order) of the coset `offset + rowspan(lat)` lying inside the box
/// `lo ≤ x ≤ hi`, or `None` within the node budget.
///
/// `lat` must be in Hermite form. Coordinates left of a row's pivot are
/// final once earlier rows are fixed, which is what makes the pruning sound.
pub fn first_coset_point_in_box(
    offset: &[BigInt],
    lat: &IntMatrix,
    lo: &[BigInt],
    hi: &[BigInt],
    node_cap: &mut usize,
) -> Option<Vec<BigInt>> {
    let width = offset.len();
    assert_eq!(lo.len(), width);
    assert_eq!(hi.len(), width);
    let pivots: Vec<usize> = (0..lat.rows())
        .map(|i| {
            lat.row(i)
                .iter()
                .position(|x| !x.is_zero())
                .expect("zero row in hermite basis")
        })
        .collect();
    fn rec(
        level: usize,
        acc: &mut Vec<BigInt>,
        lat: &IntMatrix,
        pivots: &[usize],
        lo: &[BigInt],
        hi: &[BigInt],
        node_cap: &mut usize,
    ) -> bool {
        if *node_cap == 0 {
            return false;
        }
        *node_cap -= 1;
        // columns that no later row can change must already satisfy the box
        let frozen_end = if level < pivots.len() {
            pivots[level]
        } else {
            acc.len()
        };
        for j in 0..frozen_end {
            if acc[j] < lo[j] || acc[j] > hi[j] {
                return false;
            }
        }
        if level == pivots.len() {
            for j in frozen_end..acc.len() {
                if acc[j] < lo[j] || acc[j] > hi[j] {
                    return false;
                }
            }
            return true;
        }
        let p = pivots[level];
        let step = &lat[(level, p)];
        // choose c with lo[p] ≤ acc[p] + c·step ≤ hi[p]
        let cmin: BigInt = (&lo[p] - &acc[p] + step - BigInt::from(1)).div_floor(step);
        let cmax: BigInt = (&hi[p] - &acc[p]).div_floor(step);
        let mut c = cmin;
        while c <= cmax {
            if *node_cap == 0 {
                return false;
            }
            let mut next = acc.clone();
            for j in 0..next.len() {
                let v = &c * &lat[(level, j)];
                next[j] += v;
            }
            if rec(level + 1, &mut next, lat, pivots, lo, hi, node_cap) {
                *acc = next;
                return true;
            }
            c += 1;
        }
        false
    }
    let mut acc = offset.to_vec();
    if rec(0, &mut acc, lat, &pivots, lo, hi, node_cap) {
        Some(acc)
    } else {
        None
    }
}

/// All coset points in a box (used for small scans); ordering follows the
/// coefficient enumeration of [`first_coset_point_in_box`].
pub fn coset_points_in_box(
    offset: &[BigInt],
    lat: &IntMatrix,
    lo: &[BigInt],
    hi: &[BigInt],
    cap: usize,
) -> Vec<Vec<BigInt>> {
    let mut out = Vec::new();
    let pivots: Vec<usize> = (0..lat.rows())
        .map(|i| lat.row(i).iter().position(|x| !x.is_zero()).unwrap())
        .collect();
    fn rec(
        level: usize,
        acc: Vec<BigInt>,
        lat: &IntMatrix,
        pivots: &[usize],
        lo: &[BigInt],
        hi: &[BigInt],
        out: &mut Vec<Vec<BigInt>>,
        cap: usize,
    ) {
        if out.len() >= cap {
            return;
        }
        let frozen_end = if level < pivots.len() {
            pivots[level]
        } else {
            acc.len()
        };
        for j in 0..frozen_end {
            if acc[j] < lo[j] || acc[j] > hi[j] {
                return;
            }
        }
        if level == pivots.len() {
            for j in frozen_end..acc.len() {
                if acc[j] < lo[j] || acc[j] > hi[j] {
                    return;
                }
            }
            out.push(acc);
            return;
        }
        let p = pivots[level];
        let step = &lat[(level, p)];
        let cmin: BigInt = (&lo[p] - &acc[p] + step - BigInt::from(1)).div_floor(step);
        let cmax: BigInt = (&hi[p] - &acc[p]).div_floor(step);
        let mut c = cmin;
        while c <= cmax && out.len() < cap {
            let mut next = acc.clone();
            for j in 0..next.len() {
                let v = &c * &lat[(level, j)];
                next[j] += v;
            }
            rec(level + 1, next, lat, pivots, lo, hi, out, cap);
            c += 1;
        }
    }
    rec(0, offset.to_vec(), lat, &pivots, lo, hi, &mut out, cap);
    out
}
