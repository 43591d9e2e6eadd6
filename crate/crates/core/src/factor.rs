//! Envelope (skyline) Cholesky factorization under a reverse Cuthill-McKee ordering.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// Reverse Cuthill-McKee ordering of a structurally symmetric matrix.
/// `perm[k]` is the original index placed at position `k`.
pub fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut nbrs: Vec<usize> = Vec::new();
    while order.len() < n {
        let start = pseudo_peripheral(a, &visited, &degree);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&u| !visited[u]));
            nbrs.sort_by_key(|&u| (degree[u], u));
            for &u in &nbrs {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

/// Start node of minimum degree among unvisited nodes, pushed toward the
/// periphery by a few breadth-first sweeps.
fn pseudo_peripheral(a: &SparseMatrix, visited: &[bool], degree: &[usize]) -> usize {
    let n = a.n();
    let mut best = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
    let mut level = vec![usize::MAX; n];
    let mut best_ecc = 0;
    for _ in 0..4 {
        for l in level.iter_mut() {
            *l = usize::MAX;
        }
        let mut queue = VecDeque::new();
        level[best] = 0;
        queue.push_back(best);
        let mut far = best;
        while let Some(v) = queue.pop_front() {
            let lv = level[v];
            if lv > level[far] || (lv == level[far] && (degree[v], v) < (degree[far], far)) {
                far = v;
            }
            for &u in a.row(v).0 {
                if !visited[u] && level[u] == usize::MAX {
                    level[u] = lv + 1;
                    queue.push_back(u);
                }
            }
        }
        if level[far] <= best_ecc {
            break;
        }
        best_ecc = level[far];
        best = far;
    }
    best
}

/// Cholesky factor L stored by rows over the envelope of the permuted matrix.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    l: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors A after reordering with reverse Cuthill-McKee.
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        let perm = reverse_cuthill_mckee(a);
        Self::with_ordering(a, perm)
    }

    /// Factors A with a caller-supplied ordering.
    pub fn with_ordering(a: &SparseMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.n();
        if a.rows() != a.cols() || perm.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: perm.len() });
        }
        let mut inv = vec![0usize; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first = vec![0usize; n];
        for k in 0..n {
            let (c, _) = a.row(perm[k]);
            first[k] = c.iter().map(|&j| inv[j]).filter(|&j| j <= k).min().unwrap_or(k);
        }
        let mut start = vec![0usize; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + (k - first[k] + 1);
        }
        let mut l = vec![0.0; start[n]];
        for k in 0..n {
            let (c, v) = a.row(perm[k]);
            for (&j, &x) in c.iter().zip(v) {
                let jj = inv[j];
                if jj <= k {
                    l[start[k] + jj - first[k]] = x;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let si = start[i];
            for j in fi..i {
                let fj = first[j];
                let sj = start[j];
                let lo = fi.max(fj);
                let mut s = l[si + j - fi];
                for k in lo..j {
                    s -= l[si + k - fi] * l[sj + k - fj];
                }
                l[si + j - fi] = s / l[sj + j - fj];
            }
            let mut d = l[si + i - fi];
            for k in fi..i {
                d -= l[si + k - fi] * l[si + k - fi];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotSpd { index: perm[i] });
            }
            l[si + i - fi] = libm::sqrt(d);
        }
        Ok(EnvelopeCholesky { n, perm, first, start, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.l.len()
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let si = self.start[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.l[si + k - fi] * y[k];
            }
            y[i] = s / self.l[si + i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let si = self.start[i];
            y[i] /= self.l[si + i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.l[si + k - fi] * yi;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
    }
}

/// True when A + τI admits a Cholesky factorization, certifying A ⪰ −τI.
pub fn is_positive_semidefinite(a: &SparseMatrix, tau: f64) -> Result<bool> {
    let shifted = a.shifted(&vec![tau; a.n()])?;
    match EnvelopeCholesky::new(&shifted) {
        Ok(_) => Ok(true),
        Err(Error::NotSpd { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dense_cholesky_solve;

    fn laplace2d(m: usize) -> SparseMatrix {
        let mut t = Vec::new();
        let id = |i: usize, j: usize| i * m + j;
        for i in 0..m {
            for j in 0..m {
                t.push((id(i, j), id(i, j), 4.0));
                if i > 0 {
                    t.push((id(i, j), id(i - 1, j), -1.0));
                }
                if i + 1 < m {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((id(i, j), id(i, j - 1), -1.0));
                }
                if j + 1 < m {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(m * m, m * m, &t).unwrap()
    }

    #[test]
    fn rcm_is_permutation() {
        let a = laplace2d(7);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..49).collect::<Vec<_>>());
    }

    #[test]
    fn envelope_matches_dense_solve() {
        let a = laplace2d(6);
        let b: Vec<f64> = (0..36).map(|i| (i as f64).sin()).collect();
        let x = EnvelopeCholesky::new(&a).unwrap().solve(&b);
        let y = dense_cholesky_solve(&a.to_dense(), &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_handles_disconnected_graph() {
        let a = SparseMatrix::from_diagonal(&[1.0, 2.0, 4.0]);
        let x = EnvelopeCholesky::new(&a).unwrap().solve(&[1.0, 1.0, 1.0]);
        for (a, b) in x.iter().zip([1.0, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)])
            .unwrap();
        assert!(matches!(EnvelopeCholesky::new(&a), Err(Error::NotSpd { .. })));
        assert!(!is_positive_semidefinite(&a, 1e-10).unwrap());
    }

    #[test]
    fn singular_psd_accepted_with_shift() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)])
            .unwrap();
        assert!(is_positive_semidefinite(&a, 1e-10).unwrap());
    }
}
