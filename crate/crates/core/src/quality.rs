//! Aggregate quality: the constant μ_c, its local spectral bound, the
//! compatible relaxation ratio and ε-smoothness of weight vectors.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::coarsening::AggregateSet;
use crate::dense::{generalized_symmetric_eig, DenseMatrix};
use crate::error::{Error, Result};
use crate::factor::{is_positive_semidefinite, EnvelopeCholesky};
use crate::lanczos::{lanczos, largest_generalized_with_factor, FnOperator, LanczosOptions, LinearOperator, Which};
use crate::rng::Stream;
use crate::solver::pcg_solve;
use crate::sparse::{dot, energy, galerkin_product, DiagonalMatrix, SparseMatrix};

/// Problems up to this many rows use dense eigensolvers by default.
pub const DENSE_CAP: usize = 400;

/// Largest aggregate accepted by the local bound.
pub const LOCAL_AGGREGATE_CAP: usize = 8;

/// Splitting shifts tried in order, as multiples of the smallest block row sum.
pub const DELTA_POLICY: [f64; 4] = [1.0 / 3.0, 0.5, 1.0, 0.0];

/// Relative tolerance of the remainder PSD test.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    pub lanczos: LanczosOptions,
    /// Dense path when the dimension is at most this.
    pub dense_cap: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            lanczos: LanczosOptions { tol: 1e-7, value_tol: 1e-6, max_iter: 1500, ..LanczosOptions::default() },
            dense_cap: DENSE_CAP,
        }
    }
}

/// Q = P (PᵀDP)⁻¹ PᵀD for a prolongator with one nonzero per row.
pub struct DProjector<'a> {
    p: &'a SparseMatrix,
    pt: SparseMatrix,
    d: &'a [f64],
    pdp: Vec<f64>,
}

impl<'a> DProjector<'a> {
    pub fn new(p: &'a SparseMatrix, d: &'a DiagonalMatrix) -> Result<Self> {
        if p.rows() != d.len() {
            return Err(Error::DimensionMismatch { expected: d.len(), found: p.rows() });
        }
        let pt = p.transpose();
        let dd = d.entries();
        let mut pdp = vec![0.0; p.cols()];
        for i in 0..p.rows() {
            let (c, v) = p.row(i);
            for (&j, &x) in c.iter().zip(v) {
                pdp[j] += x * x * dd[i];
            }
        }
        if let Some(j) = pdp.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::NotSpd { index: j });
        }
        Ok(DProjector { p, pt, d: dd, pdp })
    }

    /// Diagonal of PᵀDP.
    pub fn coarse_mass(&self) -> &[f64] {
        &self.pdp
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let dx: Vec<f64> = x.iter().zip(self.d).map(|(a, b)| a * b).collect();
        let mut c = vec![0.0; self.pt.rows()];
        self.pt.spmv_into(&dx, &mut c);
        for (ci, m) in c.iter_mut().zip(&self.pdp) {
            *ci /= m;
        }
        let mut y = vec![0.0; self.p.rows()];
        self.p.spmv_into(&c, &mut y);
        y
    }

    /// D (I − Q) x.
    pub fn apply_complement(&self, x: &[f64], y: &mut [f64]) {
        let q = self.apply(x);
        for i in 0..x.len() {
            y[i] = self.d[i] * (x[i] - q[i]);
        }
    }
}

/// μ_c⁻¹ together with the attaining eigenvector.
#[derive(Debug, Clone)]
pub struct MuResult {
    pub mu_inv: f64,
    pub vector: Vec<f64>,
}

/// Largest σ of D(I − Q) x = σ A x.
pub fn mu_global(a: &SparseMatrix, d: &DiagonalMatrix, p: &SparseMatrix, opts: &EigOptions) -> Result<MuResult> {
    if a.n() <= opts.dense_cap {
        mu_global_dense(a, d, p)
    } else {
        mu_global_sparse(a, d, p, &opts.lanczos)
    }
}

/// Dense generalized eigen-solve; reference path.
pub fn mu_global_dense(a: &SparseMatrix, d: &DiagonalMatrix, p: &SparseMatrix) -> Result<MuResult> {
    let n = a.n();
    let q = DProjector::new(p, d)?;
    let mut s = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        q.apply_complement(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            s.set(i, j, col[i]);
        }
    }
    let eig = generalized_symmetric_eig(&s, &a.to_dense())?;
    Ok(MuResult { mu_inv: eig.values[n - 1].max(0.0), vector: eig.vectors.column(n - 1) })
}

/// Lanczos on A⁻¹D(I − Q) in the A-inner product.
pub fn mu_global_sparse(
    a: &SparseMatrix,
    d: &DiagonalMatrix,
    p: &SparseMatrix,
    opts: &LanczosOptions,
) -> Result<MuResult> {
    let n = a.n();
    let q = DProjector::new(p, d)?;
    let s = FnOperator::new(n, |x: &[f64], y: &mut [f64]| q.apply_complement(x, y));
    let chol = EnvelopeCholesky::new(a)?;
    let (mu_inv, vector) = largest_generalized_with_factor(&s, a, &chol, opts)?;
    Ok(MuResult { mu_inv, vector })
}

/// Maximum deviations of the projector identities over random vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectorDiagnostics {
    /// max ‖Q²x − Qx‖∞ / ‖x‖∞.
    pub idempotency: f64,
    /// max |yᵀDQx − xᵀDQy| / (‖x‖ ‖y‖ max D).
    pub self_adjointness: f64,
    /// max ‖QP − P‖ entrywise.
    pub range: f64,
}

pub fn q_projector_check(p: &SparseMatrix, d: &DiagonalMatrix, samples: usize, seed: u64) -> Result<ProjectorDiagnostics> {
    let q = DProjector::new(p, d)?;
    let n = p.rows();
    let mut rng = Stream::new(seed);
    let dmax = d.entries().iter().fold(0.0f64, |m, &x| m.max(x));
    let mut idem = 0.0f64;
    let mut adj = 0.0f64;
    for _ in 0..samples {
        let x = rng.vector(n, -1.0, 1.0);
        let y = rng.vector(n, -1.0, 1.0);
        let qx = q.apply(&x);
        let qqx = q.apply(&qx);
        let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        idem = idem.max(qqx.iter().zip(&qx).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / xn);
        let qy = q.apply(&y);
        let dy = d.apply(&y);
        let dx = d.apply(&x);
        let l = dot(&dy, &qx);
        let r = dot(&dx, &qy);
        let scale = libm::sqrt(dot(&x, &x) * dot(&y, &y)) * dmax;
        adj = adj.max((l - r).abs() / scale);
    }
    let pt = p.transpose();
    let mut range = 0.0f64;
    for j in 0..p.cols() {
        let mut col = vec![0.0; n];
        let (c, v) = pt.row(j);
        for (&i, &x) in c.iter().zip(v) {
            col[i] = x;
        }
        let qc = q.apply(&col);
        range = range.max(qc.iter().zip(&col).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    }
    Ok(ProjectorDiagnostics { idempotency: idem, self_adjointness: adj, range })
}

/// Local spectral data of one aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateSpectrum {
    pub aggregate: usize,
    pub size: usize,
    /// Smallest and second smallest eigenvalue of D_j⁻¹A_j.
    pub lambda1: f64,
    pub lambda2: f64,
    /// λ₂⁻¹ ≤ μ_j⁻¹ ≤ λ₁⁻¹; the upper end is `None` when λ₁ vanishes.
    pub lower: f64,
    pub upper: Option<f64>,
    /// Local value μ_j⁻¹ on the block.
    pub mu_inv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalBound {
    /// max_j μ_j⁻¹, or `None` when no splitting was found.
    pub bound: Option<f64>,
    pub splitting_verified: bool,
    /// Multiple of the block row sum used as shift.
    pub delta_factor: Option<f64>,
    pub per_aggregate: Vec<AggregateSpectrum>,
}

/// Local bound from a splitting A = blkdiag(A_j) + A_R with A_j = A|_j − δ_j I.
pub fn local_bound(
    a: &SparseMatrix,
    agg: &AggregateSet,
    p: &SparseMatrix,
    d: &DiagonalMatrix,
    policy: &[f64],
) -> Result<LocalBound> {
    let cap = agg.max_size();
    if cap > LOCAL_AGGREGATE_CAP {
        return Err(Error::AggregateTooLarge { size: cap, cap: LOCAL_AGGREGATE_CAP });
    }
    if agg.n() != a.n() || p.rows() != a.n() || p.cols() != agg.len() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: agg.n() });
    }
    let blocks: Vec<DenseMatrix> = agg.aggregates.iter().map(|g| a.submatrix_dense(g)).collect();
    let tau = PSD_TOL * a.norm_inf();
    let mut last = Vec::new();
    for &c in policy {
        let mut spectra = Vec::with_capacity(agg.len());
        let mut ok = true;
        let mut remove = Vec::new();
        for (j, g) in agg.aggregates.iter().enumerate() {
            let k = g.len();
            let rowsum = (0..k).map(|r| (0..k).map(|s| blocks[j].get(r, s)).sum::<f64>()).fold(f64::INFINITY, f64::min);
            let delta = c * rowsum;
            let mut aj = blocks[j].clone();
            for r in 0..k {
                aj.set(r, r, aj.get(r, r) - delta);
            }
            for r in 0..k {
                for s in 0..k {
                    let v = blocks[j].get(r, s) - if r == s { delta } else { 0.0 };
                    if v != 0.0 {
                        remove.push((g[r], g[s], v));
                    }
                }
            }
            let dj = DenseMatrix::from_diagonal(&g.iter().map(|&i| d.entries()[i]).collect::<Vec<_>>());
            let eig = generalized_symmetric_eig(&aj, &dj)?;
            let scale = aj.max_abs().max(f64::MIN_POSITIVE);
            if eig.values[0] < -PSD_TOL * scale / dj.max_abs() {
                ok = false;
            }
            if k == 1 {
                spectra.push(AggregateSpectrum {
                    aggregate: j,
                    size: 1,
                    lambda1: 1.0,
                    lambda2: 1.0,
                    lower: 1.0,
                    upper: Some(1.0),
                    mu_inv: 1.0,
                });
                continue;
            }
            let l1 = eig.values[0].max(0.0);
            let l2 = eig.values[1].max(0.0);
            let pj: Vec<f64> = g.iter().map(|&i| p.get(i, j)).collect();
            let mu = local_mu_inv(&aj, &dj, &pj)?;
            if !mu.is_finite() {
                ok = false;
            }
            spectra.push(AggregateSpectrum {
                aggregate: j,
                size: k,
                lambda1: l1,
                lambda2: l2,
                lower: if l2 > 0.0 { 1.0 / l2 } else { f64::INFINITY },
                upper: if l1 > 1e-12 * l2 { Some(1.0 / l1) } else { None },
                mu_inv: mu,
            });
        }
        if ok {
            let ar = a.add(1.0, &SparseMatrix::from_triplets(a.n(), a.n(), &remove)?, -1.0)?;
            if !is_positive_semidefinite(&ar, tau)? {
                ok = false;
            }
        }
        if ok {
            let bound = spectra.iter().map(|s| s.mu_inv).fold(0.0f64, f64::max);
            return Ok(LocalBound { bound: Some(bound), splitting_verified: true, delta_factor: Some(c), per_aggregate: spectra });
        }
        last = spectra;
    }
    for s in last.iter_mut() {
        if !s.mu_inv.is_finite() {
            s.mu_inv = f64::MAX;
        }
        if !s.lower.is_finite() {
            s.lower = f64::MAX;
        }
    }
    Ok(LocalBound { bound: None, splitting_verified: false, delta_factor: None, per_aggregate: last })
}

/// max_v ‖(I − Q_j)v‖²_D / ‖v‖²_{A_j} on one block, with Q_j the D-projector onto span(p).
fn local_mu_inv(aj: &DenseMatrix, dj: &DenseMatrix, p: &[f64]) -> Result<f64> {
    let k = p.len();
    let r = (0..k).max_by(|&x, &y| p[x].abs().total_cmp(&p[y].abs())).unwrap();
    let pr = p[r] * dj.get(r, r);
    let mut z = DenseMatrix::zeros(k, k - 1);
    let mut col = 0;
    for t in 0..k {
        if t == r {
            continue;
        }
        z.set(t, col, 1.0);
        z.set(r, col, -p[t] * dj.get(t, t) / pr);
        col += 1;
    }
    let zt = z.transpose();
    let az = aj.matmul(&z)?;
    let mut kmat = zt.matmul(&az)?;
    let nmat = zt.matmul(&dj.matmul(&z)?)?;
    let ap = aj.matvec(p)?;
    let pap = dot(p, &ap);
    let scale = aj.max_abs().max(f64::MIN_POSITIVE);
    if pap > 1e-14 * scale {
        let zap = zt.matvec(&ap)?;
        for s in 0..k - 1 {
            for t in 0..k - 1 {
                kmat.set(s, t, kmat.get(s, t) - zap[s] * zap[t] / pap);
            }
        }
    }
    let eig = generalized_symmetric_eig(&kmat, &nmat)?;
    let lmin = eig.values[0];
    if lmin > 1e-12 * scale / dj.max_abs() {
        Ok(1.0 / lmin)
    } else {
        Ok(f64::INFINITY)
    }
}

/// ρ(I − M_ff⁻¹A_ff) with A_ff = P_fᵀAP_f and M_ff = P_fᵀMP_f.
pub fn cr_ratio(a: &SparseMatrix, p_f: &SparseMatrix, m: &DiagonalMatrix, opts: &EigOptions) -> Result<f64> {
    if p_f.cols() == 0 {
        return Ok(0.0);
    }
    let aff = galerkin_product(p_f, a)?;
    let mff = galerkin_product(p_f, &SparseMatrix::from_diagonal(m.entries()))?;
    let nf = aff.n();
    let mut minv_sqrt = vec![0.0; nf];
    for i in 0..nf {
        let (c, v) = mff.row(i);
        if c.iter().any(|&j| j != i) {
            return Err(Error::Invalid("complement columns overlap".into()));
        }
        let mi = v.iter().zip(c).find(|(_, &j)| j == i).map(|(x, _)| *x).unwrap_or(0.0);
        if !(mi > 0.0) {
            return Err(Error::NonPositiveDiagonal { index: i });
        }
        minv_sqrt[i] = 1.0 / libm::sqrt(mi);
    }
    let mut trip = Vec::with_capacity(aff.nnz());
    for i in 0..nf {
        let (c, v) = aff.row(i);
        for (&j, &x) in c.iter().zip(v) {
            trip.push((i, j, x * minv_sqrt[i] * minv_sqrt[j]));
        }
    }
    let c = SparseMatrix::from_triplets(nf, nf, &trip)?;
    let (lmin, lmax) = if nf <= opts.dense_cap {
        let e = c.to_dense().symmetric_eig()?;
        (e.values[0], e.values[nf - 1])
    } else {
        let r = lanczos(&c, None, Which::Both, &opts.lanczos)?;
        (r.smallest.value, r.largest.value)
    };
    Ok(libm::fabs(1.0 - lmin).max(libm::fabs(1.0 - lmax)))
}

/// R̄ = 2M⁻¹ − M⁻¹AM⁻¹ for a diagonal smoother M.
pub struct SymmetrizedSmoother<'a> {
    a: &'a SparseMatrix,
    minv: Vec<f64>,
}

impl<'a> SymmetrizedSmoother<'a> {
    /// Fails unless 2M − A is SPD, which is equivalent to R̄ being SPD.
    pub fn new(a: &'a SparseMatrix, m: &DiagonalMatrix) -> Result<Self> {
        if m.len() != a.n() {
            return Err(Error::DimensionMismatch { expected: a.n(), found: m.len() });
        }
        let two_m_minus_a = SparseMatrix::from_diagonal(m.entries()).add(2.0, a, -1.0)?;
        match EnvelopeCholesky::new(&two_m_minus_a) {
            Ok(_) => {}
            Err(Error::NotSpd { .. }) => return Err(Error::SmootherNotSpd),
            Err(e) => return Err(e),
        }
        Ok(SymmetrizedSmoother { a, minv: m.entries().iter().map(|x| 1.0 / x).collect() })
    }

    pub fn dim(&self) -> usize {
        self.minv.len()
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mx: Vec<f64> = x.iter().zip(&self.minv).map(|(a, b)| a * b).collect();
        self.a.spmv_into(&mx, y);
        for i in 0..x.len() {
            y[i] = 2.0 * mx[i] - self.minv[i] * y[i];
        }
    }

    /// R̄⁻¹ x by conjugate gradients.
    pub fn solve(&self, x: &[f64], rtol: f64) -> Result<Vec<f64>> {
        Ok(pcg_solve(self, None, x, rtol, 20 * self.dim() + 100)?.x)
    }
}

impl LinearOperator for SymmetrizedSmoother<'_> {
    fn dim(&self) -> usize {
        self.minv.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}

/// ‖v‖²_A / ‖v‖²_{R̄⁻¹}.
pub fn epsilon_smoothness(v: &[f64], a: &SparseMatrix, s: &SymmetrizedSmoother) -> Result<f64> {
    if v.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: v.len() });
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::Invalid("zero vector".into()));
    }
    let z = s.solve(v, 1e-10)?;
    Ok(energy(a, v) / dot(v, &z))
}

/// Eigenvector of the smallest eigenvalue of R̄A, unit Euclidean norm, first nonzero entry positive.
pub fn smallest_eigvec_tbar(a: &SparseMatrix, s: &SymmetrizedSmoother, opts: &EigOptions) -> Result<Vec<f64>> {
    let n = a.n();
    let mut v = if n <= opts.dense_cap {
        let mut rbar = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            s.apply_into(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                rbar.set(i, j, col[i]);
            }
        }
        let rbar = DenseMatrix::from_rows(n, n, {
            let t = rbar.transpose();
            rbar.data().iter().zip(t.data()).map(|(x, y)| 0.5 * (x + y)).collect()
        })?;
        let chol = rbar.cholesky().map_err(|_| Error::SmootherNotSpd)?;
        let mut l = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                l.set(i, j, chol.l(i, j));
            }
        }
        let c = l.transpose().matmul(&a.to_dense().matmul(&l)?)?;
        let e = c.symmetric_eig()?;
        l.matvec(&e.vectors.column(0))?
    } else {
        let chol = EnvelopeCholesky::new(a)?;
        let err = core::cell::RefCell::new(None);
        let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| match s.solve(x, 1e-12) {
            Ok(z) => chol.solve_into(&z, y),
            Err(e) => {
                *err.borrow_mut() = Some(e);
                y.iter_mut().for_each(|t| *t = 0.0);
            }
        });
        let r = lanczos(&op, Some(a), Which::Largest, &opts.lanczos);
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        r?.largest.vector
    };
    let nrm = libm::sqrt(dot(&v, &v));
    if !(nrm > 0.0) {
        return Err(Error::Breakdown("eigenvector vanished"));
    }
    let lead = v.iter().copied().find(|x| x.abs() > 1e-14 * nrm).unwrap_or(1.0);
    let sgn = if lead < 0.0 { -1.0 } else { 1.0 };
    v.iter_mut().for_each(|x| *x *= sgn / nrm);
    Ok(v)
}

/// Free-form labels of the configuration that produced a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub problem: String,
    pub matcher: String,
    pub sweeps: usize,
    pub weight: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualityReport {
    pub mu_inv: f64,
    pub bound: Option<f64>,
    pub splitting_verified: bool,
    pub delta_factor: Option<f64>,
    pub rho_f: Option<f64>,
    pub per_aggregate: Vec<AggregateSpectrum>,
    pub metadata: ReportMetadata,
}
