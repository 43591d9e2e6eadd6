//! Small dense kernels: Cholesky and symmetric (generalized) eigensolvers.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: x.len() });
        }
        Ok((0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut c = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    c.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(c)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<f64>) -> Self {
        let mut d = DenseMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                d.set(i, j, m[(i, j)]);
            }
        }
        d
    }

    /// Lower Cholesky factor; fails on a nonpositive pivot.
    pub fn cholesky(&self) -> Result<Cholesky> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let n = self.rows;
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotSpd { index: j });
            }
            let djj = libm::sqrt(d);
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Cholesky { n, l })
    }

    /// All eigenpairs of a symmetric matrix, eigenvalues ascending.
    pub fn symmetric_eig(&self) -> Result<EigenPairs> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch { expected: self.rows, found: self.cols });
        }
        let mut m = self.to_nalgebra();
        m = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DenseMatrix::zeros(self.rows, self.rows);
        for (c, &k) in order.iter().enumerate() {
            for i in 0..self.rows {
                vectors.set(i, c, eig.eigenvectors[(i, k)]);
            }
        }
        Ok(EigenPairs { values, vectors })
    }
}

/// Dense lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves L y = b in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    /// Solves Lᵀ x = y in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: b.len() });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn l(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }
}

/// Solves M x = b for SPD M.
pub fn dense_cholesky_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    m.cholesky()?.solve(b)
}

/// Eigenvalues ascending with eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// All eigenpairs of A x = σ B x with B SPD; vectors are B-orthonormal.
pub fn generalized_symmetric_eig(a: &DenseMatrix, b: &DenseMatrix) -> Result<EigenPairs> {
    if a.rows != a.cols || b.rows != b.cols || a.rows != b.rows {
        return Err(Error::DimensionMismatch { expected: a.rows, found: b.rows });
    }
    let n = a.rows;
    let chol = b.cholesky()?;
    // C = L⁻¹ A L⁻ᵀ, built column by column.
    let mut w = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col = a.column(j);
        chol.forward(&mut col);
        for i in 0..n {
            w.set(i, j, col[i]);
        }
    }
    let mut c = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).map(|j| w.get(i, j)).collect();
        chol.forward(&mut row);
        for j in 0..n {
            c.set(i, j, row[j]);
        }
    }
    let eig = c.symmetric_eig()?;
    let mut vectors = DenseMatrix::zeros(n, n);
    for k in 0..n {
        let mut y = eig.vectors.column(k);
        chol.backward(&mut y);
        for i in 0..n {
            vectors.set(i, k, y[i]);
        }
    }
    Ok(EigenPairs { values: eig.values, vectors })
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        DenseMatrix::from_nalgebra(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut r = Stream::new(seed);
        let g = DenseMatrix::from_rows(n, n, r.vector(n * n, -1.0, 1.0)).unwrap();
        let mut m = g.transpose().matmul(&g).unwrap();
        for i in 0..n {
            m.set(i, i, m.get(i, i) + n as f64);
        }
        m
    }

    #[test]
    fn identity_solve() {
        let x = dense_cholesky_solve(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn hand_solve() {
        let m = DenseMatrix::from_rows(2, 2, vec![4.0, 1.0, 1.0, 3.0]).unwrap();
        let x = dense_cholesky_solve(&m, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-15);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_residual() {
        let m = random_spd(10, 3);
        let b: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let x = dense_cholesky_solve(&m, &b).unwrap();
        let r = m.matvec(&x).unwrap();
        let err: f64 = r.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err < 1e-10 * nb);
    }

    #[test]
    fn not_spd_reports_pivot() {
        let m = DenseMatrix::from_rows(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert_eq!(m.cholesky().unwrap_err(), Error::NotSpd { index: 1 });
    }

    #[test]
    fn generalized_zero_stiffness() {
        let e = generalized_symmetric_eig(&DenseMatrix::zeros(3, 3), &DenseMatrix::identity(3)).unwrap();
        assert!(e.values.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn generalized_diagonal() {
        let e = generalized_symmetric_eig(&DenseMatrix::from_diagonal(&[2.0, 1.0]), &DenseMatrix::identity(2))
            .unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_pair_block() {
        let a = DenseMatrix::from_rows(2, 2, vec![3.0, -1.0, -1.0, 3.0]).unwrap();
        let b = DenseMatrix::from_diagonal(&[4.0, 4.0]);
        let e = generalized_symmetric_eig(&a, &b).unwrap();
        assert!((e.values[0] - 0.5).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_residual_and_orthonormality() {
        let a = random_spd(12, 7);
        let b = random_spd(12, 8);
        let e = generalized_symmetric_eig(&a, &b).unwrap();
        let na = a.max_abs();
        for k in 0..12 {
            let x = e.vectors.column(k);
            let ax = a.matvec(&x).unwrap();
            let bx = b.matvec(&x).unwrap();
            let r: f64 = ax.iter().zip(&bx).map(|(p, q)| (p - e.values[k] * q).abs()).fold(0.0, f64::max);
            assert!(r <= 1e-8 * na);
            for l in 0..12 {
                let y = e.vectors.column(l);
                let g: f64 = y.iter().zip(&bx).map(|(p, q)| p * q).sum();
                let expect = if k == l { 1.0 } else { 0.0 };
                assert!((g - expect).abs() < 1e-8);
            }
        }
    }
}
