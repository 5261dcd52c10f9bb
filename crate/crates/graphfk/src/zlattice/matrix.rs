//! Dense integer matrices with unbounded entries, plus the row-lattice
//! calculus (Hermite form, membership, reduction) used everywhere else.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Index, IndexMut};

/// A rectangular integer matrix, row-major, entries of unbounded magnitude.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::from(1);
        }
        m
    }

    /// Build from machine-integer rows. Panics on ragged input; intended for
    /// literals in tests and builders.
    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in &rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row.iter().map(|&x| BigInt::from(x)));
        }
        IntMatrix { rows: r, cols: c, data }
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>, cols: usize) -> Self {
        let r = rows.len();
        let mut data = Vec::with_capacity(r * cols);
        for row in rows {
            assert_eq!(row.len(), cols, "ragged rows");
            data.extend(row);
        }
        IntMatrix { rows: r, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_vec(&self, i: usize) -> Vec<BigInt> {
        self.row(i).to_vec()
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[BigInt]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Self {
        let mut t = IntMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in mul");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (x, y) in out.data.iter_mut().zip(&other.data) {
            *x -= y;
        }
        out
    }

    pub fn neg(&self) -> IntMatrix {
        let mut out = self.clone();
        for x in out.data.iter_mut() {
            *x = -std::mem::take(x);
        }
        out
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "hstack row mismatch");
        let mut out = IntMatrix::zero(self.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
            for j in 0..other.cols {
                out[(i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Vertical concatenation, `self` on top.
    pub fn vstack(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.cols, "vstack col mismatch");
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        IntMatrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> IntMatrix {
        let mut out = IntMatrix::zero(rows.len(), cols.len());
        for (ri, &r) in rows.iter().enumerate() {
            for (ci, &c) in cols.iter().enumerate() {
                out[(ri, ci)] = self[(r, c)].clone();
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[target] += c · row[source]`.
    pub fn add_multiple_of_row(&mut self, target: usize, source: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = &self.data[source * self.cols + j] * c;
            self.data[target * self.cols + j] += v;
        }
    }

    /// `col[target] += c · col[source]`.
    pub fn add_multiple_of_col(&mut self, target: usize, source: usize, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + source] * c;
            self.data[i * self.cols + target] += v;
        }
    }

    pub fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = -v;
        }
    }

    pub fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = -v;
        }
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> BigInt {
        assert!(self.is_square(), "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::from(1);
        }
        let mut a = self.clone();
        let mut sign = 1i64;
        let mut prev = BigInt::from(1);
        for k in 0..n - 1 {
            if a[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                    a[(i, j)] = &num / &prev;
                }
                a[(i, k)] = BigInt::zero();
            }
            prev = a[(k, k)].clone();
        }
        let det = a[(n - 1, n - 1)].clone();
        if sign < 0 {
            -det
        } else {
            det
        }
    }

    /// Rank over ℚ (= number of nonzero Smith diagonal entries, but cheaper).
    pub fn rank(&self) -> usize {
        // fraction-free row echelon
        let mut a = self.clone();
        let mut rank = 0;
        let mut row = 0;
        for col in 0..a.cols {
            let pivot = (row..a.rows).find(|&i| !a[(i, col)].is_zero());
            let Some(p) = pivot else { continue };
            a.swap_rows(row, p);
            for i in row + 1..a.rows {
                if a[(i, col)].is_zero() {
                    continue;
                }
                let g = a[(row, col)].gcd(&a[(i, col)]);
                let cr = &a[(i, col)] / &g;
                let ci = &a[(row, col)] / &g;
                for j in col..a.cols {
                    let v = &a[(i, j)] * &ci - &a[(row, j)] * &cr;
                    a[(i, j)] = v;
                }
            }
            row += 1;
            rank += 1;
            if row == a.rows {
                break;
            }
        }
        rank
    }

    pub fn max_abs(&self) -> BigInt {
        self.data
            .iter()
            .map(Signed::abs)
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// Lossy view for serialization; `None` if any entry overflows `i64`.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(ToPrimitive::to_i64).collect())
            .collect()
    }
}

impl Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  [")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Row-style Hermite normal form of a spanning set: the canonical basis of
/// the row lattice. Pivots are positive, entries above a pivot are reduced
/// into `[0, pivot)`, pivot columns strictly increase, zero rows are dropped.
pub fn row_hermite(rows: Vec<Vec<BigInt>>, width: usize) -> IntMatrix {
    let mut work: Vec<Vec<BigInt>> = rows;
    for r in &work {
        assert_eq!(r.len(), width, "ragged rows in row_hermite");
    }
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    let mut next = 0usize; // index into basis where the next pivot row goes
    for col in 0..width {
        // reduce all non-basis rows against current column via gcd steps
        loop {
            let mut best: Option<usize> = None;
            for (i, r) in work.iter().enumerate() {
                if !r[col].is_zero() {
                    let better = match best {
                        None => true,
                        Some(b) => r[col].abs() < work[b][col].abs(),
                    };
                    if better {
                        best = Some(i);
                    }
                }
            }
            let Some(p) = best else { break };
            // eliminate the column entry of every other work row
            let pivot_row = work[p].clone();
            let mut any_left = false;
            for (i, r) in work.iter_mut().enumerate() {
                if i == p || r[col].is_zero() {
                    continue;
                }
                let q = r[col].div_floor(&pivot_row[col]);
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
                if !r[col].is_zero() {
                    any_left = true;
                }
            }
            if !any_left {
                // move pivot row into the basis
                let mut pr = work.remove(p);
                if pr[col].is_negative() {
                    for x in pr.iter_mut() {
                        *x = -std::mem::take(x);
                    }
                }
                basis.insert(next, pr);
                next += 1;
                break;
            }
        }
    }
    // drop zero rows that never produced a pivot
    // (all remaining work rows are zero by construction)
    debug_assert!(work.iter().all(|r| r.iter().all(Zero::is_zero)));
    // reduce entries above each pivot
    let pivots: Vec<usize> = basis
        .iter()
        .map(|r| r.iter().position(|x| !x.is_zero()).unwrap())
        .collect();
    for k in 0..basis.len() {
        for i in 0..k {
            let col = pivots[k];
            let q = basis[i][col].div_floor(&basis[k][col]);
            if q.is_zero() {
                continue;
            }
            let lower = basis[k].clone();
            for (x, y) in basis[i].iter_mut().zip(&lower) {
                *x -= &q * y;
            }
        }
    }
    IntMatrix::from_big_rows(basis, width)
}

/// Hermite form of a matrix's row lattice.
pub fn hermite_of(m: &IntMatrix) -> IntMatrix {
    row_hermite(
        (0..m.rows()).map(|i| m.row_vec(i)).collect(),
        m.cols(),
    )
}

/// Hermite basis of the sum of two row lattices.
pub fn lattice_union(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    assert_eq!(a.cols(), b.cols(), "lattice width mismatch");
    let mut rows: Vec<Vec<BigInt>> = (0..a.rows()).map(|i| a.row_vec(i)).collect();
    rows.extend((0..b.rows()).map(|i| b.row_vec(i)));
    row_hermite(rows, a.cols())
}

/// Equality of row lattices.
pub fn lattice_eq(a: &IntMatrix, b: &IntMatrix) -> bool {
    hermite_of(a) == hermite_of(b)
}

/// Is `rowspan(sub) ⊆ rowspan(sup)`?
pub fn lattice_contains(sup: &IntMatrix, sub: &IntMatrix) -> bool {
    let sup_h = hermite_of(sup);
    lattice_union(&sup_h, sub) == sup_h
}

/// Reduce a vector modulo a Hermite-form lattice basis: for each pivot
/// column, the result entry lies in `[0, pivot)`. The representative is
/// deterministic and equal vectors mod the lattice reduce identically.
pub fn reduce_mod_hnf(v: &[BigInt], hnf: &IntMatrix) -> Vec<BigInt> {
    let mut out = v.to_vec();
    for i in 0..hnf.rows() {
        let row = hnf.row(i);
        let col = row.iter().position(|x| !x.is_zero()).unwrap();
        let q = out[col].div_floor(&row[col]);
        if q.is_zero() {
            continue;
        }
        for (x, y) in out.iter_mut().zip(row) {
            *x -= &q * y;
        }
    }
    out
}

/// Membership of a vector in a Hermite-form row lattice.
pub fn in_lattice(v: &[BigInt], hnf: &IntMatrix) -> bool {
    reduce_mod_hnf(v, hnf).iter().all(Zero::is_zero)
}
