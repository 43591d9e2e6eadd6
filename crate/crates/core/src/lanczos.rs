//! Symmetric Lanczos iteration with full reorthogonalization.
//!
//! The operator `T` must be self-adjoint in the inner product induced by an
//! SPD operator `B` (the Euclidean one when `B` is omitted). Generalized
//! problems `S x = σ A x` are handled as `T = A⁻¹ S` with `B = A`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::factor::EnvelopeCholesky;
use crate::rng::Stream;
use crate::sparse::{dot, SparseMatrix};

/// Square linear map applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y)
    }
}

/// Operator wrapping a closure.
pub struct FnOperator<F: Fn(&[f64], &mut [f64])> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Relative residual tolerance on the requested Ritz pairs.
    pub tol: f64,
    /// Ritz values whose change between checks stays below this relative amount also count as converged.
    pub value_tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { tol: 1e-8, value_tol: 1e-11, max_iter: 800, seed: 42 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
    Both,
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub largest: RitzPair,
    pub smallest: RitzPair,
    pub iterations: usize,
}

/// Extreme eigenpairs of `op`, self-adjoint with respect to `inner`.
pub fn lanczos(
    op: &dyn LinearOperator,
    inner: Option<&dyn LinearOperator>,
    which: Which,
    opts: &LanczosOptions,
) -> Result<LanczosResult> {
    let n = op.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let bapply = |x: &[f64], y: &mut [f64]| match inner {
        Some(b) => b.apply(x, y),
        None => y.copy_from_slice(x),
    };
    let max_iter = opts.max_iter.min(n).max(1);
    let mut v: Vec<Vec<f64>> = Vec::new();
    let mut bv: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let mut x = Stream::new(opts.seed).vector(n, -1.0, 1.0);
    let mut bx = vec![0.0; n];
    bapply(&x, &mut bx);
    let nrm = libm::sqrt(dot(&x, &bx).max(0.0));
    if !(nrm > 0.0) {
        return Err(Error::Breakdown("start vector has zero norm"));
    }
    x.iter_mut().for_each(|t| *t /= nrm);
    bx.iter_mut().for_each(|t| *t /= nrm);
    v.push(x);
    bv.push(bx);

    let mut w = vec![0.0; n];
    let mut bw = vec![0.0; n];
    let mut exhausted = false;
    let mut next_check = 8.min(max_iter);
    let mut prev = (f64::NAN, f64::NAN);
    loop {
        let j = v.len() - 1;
        op.apply(&v[j], &mut w);
        let a = dot(&bv[j], &w);
        alpha.push(a);
        for t in 0..n {
            w[t] -= a * v[j][t];
        }
        if j > 0 {
            let b = beta[j - 1];
            for t in 0..n {
                w[t] -= b * v[j - 1][t];
            }
        }
        for _ in 0..2 {
            for i in 0..=j {
                let c = dot(&bv[i], &w);
                if c != 0.0 {
                    for t in 0..n {
                        w[t] -= c * v[i][t];
                    }
                }
            }
        }
        bapply(&w, &mut bw);
        let b = libm::sqrt(dot(&w, &bw).max(0.0));
        let k = alpha.len();
        let scale = alpha.iter().chain(beta.iter()).fold(0.0f64, |m, t| m.max(t.abs()));
        if !(b > 1e-13 * scale.max(f64::MIN_POSITIVE)) || k >= n {
            exhausted = true;
        }
        if exhausted || k >= next_check || k >= max_iter {
            let (theta, y) = tridiagonal_eig(&alpha, &beta);
            let imax = k - 1;
            let res = |c: usize| if exhausted { 0.0 } else { (b * y[(k - 1, c)]).abs() };
            let top = theta[imax].abs().max(theta[0].abs()).max(f64::MIN_POSITIVE);
            let stalled = |c: usize, p: f64| {
                (theta[c] - p).abs() <= opts.value_tol * theta[c].abs().max(1e-6 * top)
                    && res(c) <= 1e-3 * theta[c].abs().max(1e-6 * top)
            };
            let ok = |c: usize| {
                res(c) <= opts.tol * theta[c].abs().max(1e-6 * top) + 1e-300
                    || stalled(c, if c == 0 { prev.0 } else { prev.1 })
            };
            let done = match which {
                Which::Largest => ok(imax),
                Which::Smallest => ok(0),
                Which::Both => ok(imax) && ok(0),
            };
            if done || exhausted || k >= max_iter {
                if !done && !exhausted {
                    return Err(Error::NoConvergence { what: "lanczos", iterations: k });
                }
                let build = |c: usize| {
                    let mut vec_out = vec![0.0; n];
                    for (i, vi) in v.iter().enumerate() {
                        let yi = y[(i, c)];
                        for t in 0..n {
                            vec_out[t] += yi * vi[t];
                        }
                    }
                    RitzPair { value: theta[c], vector: vec_out, residual: res(c) }
                };
                let largest = build(imax);
                let smallest = if which == Which::Largest {
                    RitzPair { value: theta[0], vector: Vec::new(), residual: res(0) }
                } else {
                    build(0)
                };
                return Ok(LanczosResult { largest, smallest, iterations: k });
            }
            prev = (theta[0], theta[imax]);
            next_check = (k + 4 + k / 8).min(max_iter);
        }
        beta.push(b);
        let nv: Vec<f64> = w.iter().map(|t| t / b).collect();
        let nbv: Vec<f64> = bw.iter().map(|t| t / b).collect();
        v.push(nv);
        bv.push(nbv);
    }
}

/// Eigenvalues ascending and eigenvectors of the symmetric tridiagonal matrix.
fn tridiagonal_eig(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let theta = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut y = DMatrix::<f64>::zeros(k, k);
    for (c, &o) in order.iter().enumerate() {
        for i in 0..k {
            y[(i, c)] = eig.eigenvectors[(i, o)];
        }
    }
    (theta, y)
}

/// Largest σ of S x = σ A x for symmetric PSD `s` and SPD `a`.
pub fn largest_generalized_eig_sparse(
    s: &dyn LinearOperator,
    a: &SparseMatrix,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<f64>)> {
    if s.dim() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: s.dim() });
    }
    let chol = EnvelopeCholesky::new(a)?;
    largest_generalized_with_factor(s, a, &chol, opts)
}

/// As [`largest_generalized_eig_sparse`] with a precomputed factor of `a`.
pub fn largest_generalized_with_factor(
    s: &dyn LinearOperator,
    a: &SparseMatrix,
    chol: &EnvelopeCholesky,
    opts: &LanczosOptions,
) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let mut sx = vec![0.0; n];
        s.apply(x, &mut sx);
        chol.solve_into(&sx, y);
    });
    let r = lanczos(&op, Some(a), Which::Largest, opts)?;
    Ok((r.largest.value.max(0.0), r.largest.vector))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{generalized_symmetric_eig, DenseMatrix};

    fn laplace1d(n: usize) -> SparseMatrix {
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
    fn zero_operator_gives_zero() {
        let a = laplace1d(10);
        let z = SparseMatrix::from_triplets(10, 10, &[]).unwrap();
        let (s, _) = largest_generalized_eig_sparse(&z, &a, &LanczosOptions::default()).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn operator_equal_to_metric_gives_one() {
        let a = laplace1d(30);
        let (s, _) = largest_generalized_eig_sparse(&a, &a, &LanczosOptions::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn extreme_eigenvalues_of_laplacian() {
        let n = 40;
        let a = laplace1d(n);
        let r = lanczos(&a, None, Which::Both, &LanczosOptions::default()).unwrap();
        let h = core::f64::consts::PI / (n as f64 + 1.0);
        let lmin = 2.0 - 2.0 * libm::cos(h);
        let lmax = 2.0 - 2.0 * libm::cos(n as f64 * h);
        assert!((r.smallest.value - lmin).abs() < 1e-8);
        assert!((r.largest.value - lmax).abs() < 1e-8);
    }

    #[test]
    fn generalized_matches_dense() {
        let n = 25;
        let a = laplace1d(n);
        let d: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let s = SparseMatrix::from_diagonal(&d);
        let (sig, x) = largest_generalized_eig_sparse(&s, &a, &LanczosOptions::default()).unwrap();
        let e = generalized_symmetric_eig(&DenseMatrix::from_diagonal(&d), &a.to_dense()).unwrap();
        assert!((sig - e.values[n - 1]).abs() < 1e-6 * sig);
        let sx = s.spmv(&x).unwrap();
        let ax = a.spmv(&x).unwrap();
        let r: f64 = sx.iter().zip(&ax).map(|(p, q)| (p - sig * q).abs()).fold(0.0, f64::max);
        assert!(r < 1e-6);
    }
}
