//! Compressed sparse row storage and the kernels built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

pub type DenseVector = Vec<f64>;

/// Matrix in CSR form with sorted, duplicate free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, sorting each row and summing duplicates.
    pub fn from_csr(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 {
            return Err(Error::DimensionMismatch { expected: rows + 1, found: row_ptr.len() });
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::DimensionMismatch { expected: col_idx.len(), found: values.len() });
        }
        let mut trip = Vec::with_capacity(values.len());
        for i in 0..rows {
            if row_ptr[i] > row_ptr[i + 1] {
                return Err(Error::Invalid("row_ptr not monotone".into()));
            }
            for k in row_ptr[i]..row_ptr[i + 1] {
                trip.push((i, col_idx[k], values[k]));
            }
        }
        Self::from_triplets(rows, cols, &trip)
    }

    /// Builds a matrix from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; rows + 1];
        for &(i, j, _) in entries {
            if i >= rows {
                return Err(Error::DimensionMismatch { expected: rows, found: i + 1 });
            }
            if j >= cols {
                return Err(Error::DimensionMismatch { expected: cols, found: j + 1 });
            }
            counts[i + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols_tmp = vec![0usize; entries.len()];
        let mut vals_tmp = vec![0.0; entries.len()];
        for &(i, j, v) in entries {
            cols_tmp[next[i]] = j;
            vals_tmp[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..rows {
            order.clear();
            order.extend(counts[i]..counts[i + 1]);
            order.sort_by_key(|&k| (cols_tmp[k], k));
            let mut last = usize::MAX;
            for &k in &order {
                if cols_tmp[k] == last {
                    *values.last_mut().unwrap() += vals_tmp[k];
                } else {
                    col_idx.push(cols_tmp[k]);
                    values.push(vals_tmp[k]);
                    last = cols_tmp[k];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.values.copy_from_slice(d);
        m
    }

    pub fn from_dense(d: &DenseMatrix) -> Self {
        let mut trip = Vec::new();
        for i in 0..d.rows() {
            for j in 0..d.cols() {
                let v = d.get(i, j);
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
        Self::from_triplets(d.rows(), d.cols(), &trip).expect("indices in range")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dimension of a square matrix.
    pub fn n(&self) -> usize {
        self.rows
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        match c.binary_search(&j) {
            Ok(k) => v[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x with a fixed left-to-right summation order per row.
    pub fn spmv(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        let mut y = vec![0.0; self.rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// y = A x without dimension checks beyond debug assertions.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for i in 0..self.rows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    /// y = Aᵀ x.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch { expected: self.rows, found: x.len() });
        }
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                y[self.col_idx[k]] += self.values[k] * x[i];
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.cols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.cols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.rows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                col_idx[next[j]] = i;
                values[next[j]] = self.values[k];
                next[j] += 1;
            }
        }
        SparseMatrix { rows: self.cols, cols: self.rows, row_ptr: counts, col_idx, values }
    }

    /// Sparse product self · other.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut row_ptr = Vec::with_capacity(self.rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        let mut acc = vec![0.0; other.cols];
        let mut mark = vec![usize::MAX; other.cols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.rows {
            touched.clear();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let a = self.values[k];
                let r = self.col_idx[k];
                for kk in other.row_ptr[r]..other.row_ptr[r + 1] {
                    let j = other.col_idx[kk];
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * other.values[kk];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseMatrix { rows: self.rows, cols: other.cols, row_ptr, col_idx, values })
    }

    /// Linear combination alpha·self + beta·other on the union pattern.
    pub fn add(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: other.rows });
        }
        let mut trip = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, alpha * x)));
            let (c, v) = other.row(i);
            trip.extend(c.iter().zip(v).map(|(&j, &x)| (i, j, beta * x)));
        }
        Self::from_triplets(self.rows, self.cols, &trip)
    }

    /// Copy with `shift` added to every diagonal entry of a square matrix.
    pub fn shifted(&self, shift: &[f64]) -> Result<SparseMatrix> {
        if shift.len() != self.rows || self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: shift.len() });
        }
        self.add(1.0, &SparseMatrix::from_diagonal(shift), 1.0)
    }

    /// Returns P A Pᵀ for the permutation `perm`, where row `perm[i]` of A becomes row `i`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Result<SparseMatrix> {
        if perm.len() != self.rows || self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: perm.len() });
        }
        let mut inv = vec![usize::MAX; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            if p >= perm.len() || inv[p] != usize::MAX {
                return Err(Error::Invalid("not a permutation".into()));
            }
            inv[p] = i;
        }
        let mut trip = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                trip.push((inv[i], inv[j], x));
            }
        }
        Self::from_triplets(self.rows, self.cols, &trip)
    }

    /// Principal submatrix on the given index list, in that order.
    pub fn submatrix_dense(&self, idx: &[usize]) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                d.set(a, b, self.get(i, j));
            }
        }
        d
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d.set(i, j, x);
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum, an upper bound on the 2-norm of symmetric matrices.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                let (c, _) = self.row(i);
                c.iter().all(|&j| self.row(j).0.binary_search(&i).is_ok())
            })
    }

    /// Largest |a_ij − a_ji| over the stored pattern.
    pub fn symmetry_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..self.rows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                e = e.max((x - self.get(j, i)).abs());
            }
        }
        e
    }

    /// Off-diagonal couplings of row `i`.
    pub fn off_diagonal(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (c, v) = self.row(i);
        c.iter().zip(v).filter(move |(&j, _)| j != i).map(|(&j, &x)| (j, x))
    }
}

/// Galerkin product Pᵀ A P.
pub fn galerkin_product(p: &SparseMatrix, a: &SparseMatrix) -> Result<SparseMatrix> {
    if p.rows() != a.cols() || a.rows() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.cols(), found: p.rows() });
    }
    let ap = a.matmul(p)?;
    let mut c = p.transpose().matmul(&ap)?;
    symmetrize_in_place(&mut c);
    Ok(c)
}

/// Replaces the values of a structurally symmetric matrix by (C + Cᵀ)/2.
fn symmetrize_in_place(c: &mut SparseMatrix) {
    let t = c.transpose();
    if t.row_ptr == c.row_ptr && t.col_idx == c.col_idx {
        for (x, y) in c.values.iter_mut().zip(&t.values) {
            *x = 0.5 * (*x + *y);
        }
    }
}

/// Diagonal matrix with strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMatrix {
    entries: Vec<f64>,
}

impl DiagonalMatrix {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NonPositiveDiagonal { index: i });
        }
        Ok(DiagonalMatrix { entries })
    }

    /// D = diag(A).
    pub fn of(a: &SparseMatrix) -> Result<Self> {
        Self::new(a.diagonal())
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> DenseVector {
        x.iter().zip(&self.entries).map(|(a, d)| a * d).collect()
    }

    pub fn solve(&self, x: &[f64]) -> DenseVector {
        x.iter().zip(&self.entries).map(|(a, d)| a / d).collect()
    }
}

/// The ℓ1-Jacobi diagonal m_i = a_ii + Σ_{j≠i} |a_ij|.
pub fn l1_jacobi_diagonal(a: &SparseMatrix) -> Result<DiagonalMatrix> {
    let mut m = Vec::with_capacity(a.rows());
    for i in 0..a.rows() {
        let d = a.get(i, i);
        if !(d > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i });
        }
        m.push(d + a.off_diagonal(i).map(|(_, v)| v.abs()).sum::<f64>());
    }
    DiagonalMatrix::new(m)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    libm::sqrt(dot(x, x))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// xᵀ A x.
pub fn energy(a: &SparseMatrix, x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.rows() {
        let (c, v) = a.row(i);
        let mut r = 0.0;
        for (&j, &y) in c.iter().zip(v) {
            r += y * x[j];
        }
        s += x[i] * r;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_spmv() {
        let y = SparseMatrix::identity(3).spmv(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn tridiagonal_row_sums() {
        let y = tridiag(3).spmv(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn spmv_dimension_error() {
        assert!(matches!(tridiag(3).spmv(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn galerkin_single_pair() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)])
            .unwrap();
        let s = 1.0 / libm::sqrt(2.0);
        let p = SparseMatrix::from_triplets(2, 1, &[(0, 0, s), (1, 0, s)]).unwrap();
        let c = galerkin_product(&p, &a).unwrap();
        assert_eq!(c.rows(), 1);
        assert!((c.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn galerkin_identity() {
        let a = tridiag(5);
        assert_eq!(galerkin_product(&SparseMatrix::identity(5), &a).unwrap(), a);
    }

    #[test]
    fn l1_diagonal_values() {
        let m = l1_jacobi_diagonal(&tridiag(5)).unwrap();
        assert_eq!(m.entries()[2], 4.0);
        assert_eq!(m.entries()[0], 3.0);
        let d = SparseMatrix::from_diagonal(&[2.0, 5.0]);
        assert_eq!(l1_jacobi_diagonal(&d).unwrap().entries(), &[2.0, 5.0]);
    }

    #[test]
    fn l1_rejects_nonpositive_diagonal() {
        let d = SparseMatrix::from_diagonal(&[2.0, 0.0]);
        assert_eq!(l1_jacobi_diagonal(&d), Err(Error::NonPositiveDiagonal { index: 1 }));
    }

    #[test]
    fn transpose_roundtrip() {
        let a = SparseMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (1, 0, 2.0), (1, 2, 3.0)]).unwrap();
        let t = a.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.get(2, 1), 3.0);
        assert_eq!(t.transpose(), a);
    }

    #[test]
    fn permutation_roundtrip() {
        let a = tridiag(4);
        let p = [2, 0, 3, 1];
        let b = a.permute_symmetric(&p).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(b.get(i, j), a.get(p[i], p[j]));
            }
        }
    }
}
