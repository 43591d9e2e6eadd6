//! Smoothers, two-level and V-cycle application, weight refinement and the
//! bootstrap composite solver.

use alloc::vec;
use alloc::vec::Vec;

use crate::coarsening::{build_hierarchy, AggregateSet, Hierarchy, HierarchyOptions};
use crate::error::{Error, Result};
use crate::factor::EnvelopeCholesky;
use crate::lanczos::{lanczos, FnOperator, LanczosOptions, LinearOperator, Which};
use crate::matching::Matcher;
use crate::quality::{mu_global, EigOptions};
use crate::sparse::{dot, galerkin_product, l1_jacobi_diagonal, DiagonalMatrix, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherConfig {
    pub sweeps: usize,
    pub damping: f64,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig { sweeps: 1, damping: 1.0 }
    }
}

/// x ← x + M⁻¹(b − Ax), `sweeps` times.
pub fn smooth_apply(a: &SparseMatrix, m: &DiagonalMatrix, x: &[f64], b: &[f64], sweeps: usize) -> Result<Vec<f64>> {
    let n = a.n();
    if x.len() != n || b.len() != n || m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    let mut x = x.to_vec();
    smooth_in_place(a, m.entries(), &mut x, b, sweeps, 1.0);
    Ok(x)
}

fn smooth_in_place(a: &SparseMatrix, m: &[f64], x: &mut [f64], b: &[f64], sweeps: usize, damping: f64) {
    let mut ax = vec![0.0; x.len()];
    for _ in 0..sweeps {
        a.spmv_into(x, &mut ax);
        for i in 0..x.len() {
            x[i] += damping * (b[i] - ax[i]) / m[i];
        }
    }
}

/// Result of a preconditioned conjugate gradient solve.
#[derive(Debug, Clone)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual norms, starting with the initial one.
    pub residuals: Vec<f64>,
}

/// Preconditioned conjugate gradients from a zero initial guess.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    precond: Option<&dyn LinearOperator>,
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> Result<PcgResult> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let bnorm = libm::sqrt(dot(b, b));
    let mut x = vec![0.0; n];
    let mut residuals = vec![1.0];
    if bnorm == 0.0 {
        return Ok(PcgResult { x, iterations: 0, residuals: vec![0.0] });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let apply_prec = |r: &[f64], z: &mut [f64]| match precond {
        Some(pc) => pc.apply(r, z),
        None => z.copy_from_slice(r),
    };
    apply_prec(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        if !(rz > 0.0) {
            return Err(Error::Breakdown("preconditioner is not positive definite"));
        }
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Breakdown("nonpositive curvature"));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = libm::sqrt(dot(&r, &r)) / bnorm;
        residuals.push(rel);
        if rel <= rtol {
            return Ok(PcgResult { x, iterations: it, residuals });
        }
        apply_prec(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { what: "pcg", iterations: max_iter })
}

/// Post-smoothed two-level method with an exact coarse solve.
pub struct TwoLevel {
    a: SparseMatrix,
    p: SparseMatrix,
    pt: SparseMatrix,
    m: Vec<f64>,
    coarse: EnvelopeCholesky,
}

impl TwoLevel {
    pub fn new(a: &SparseMatrix, p: &SparseMatrix, m: &DiagonalMatrix) -> Result<Self> {
        let ac = galerkin_product(p, a)?;
        let coarse = EnvelopeCholesky::new(&ac)?;
        Ok(TwoLevel { a: a.clone(), p: p.clone(), pt: p.transpose(), m: m.entries().to_vec(), coarse })
    }

    /// w = P A_c⁻¹ Pᵀ g.
    fn coarse_correction(&self, g: &[f64]) -> Vec<f64> {
        let mut gc = vec![0.0; self.pt.rows()];
        self.pt.spmv_into(g, &mut gc);
        let xc = self.coarse.solve(&gc);
        let mut w = vec![0.0; self.a.n()];
        self.p.spmv_into(&xc, &mut w);
        w
    }

    /// (I − Π) e with Π the A-orthogonal projector onto range(P).
    fn project_out(&self, e: &[f64]) -> Vec<f64> {
        let ae = self.a.spmv(e).expect("dimension checked");
        let c = self.coarse_correction(&ae);
        e.iter().zip(&c).map(|(x, y)| x - y).collect()
    }

    fn smooth_error(&self, e: &[f64]) -> Vec<f64> {
        let ae = self.a.spmv(e).expect("dimension checked");
        e.iter().zip(&ae).zip(&self.m).map(|((x, y), m)| x - y / m).collect()
    }

    /// E = (I − M⁻¹A)(I − Π).
    pub fn error(&self, e: &[f64]) -> Vec<f64> {
        self.smooth_error(&self.project_out(e))
    }

    /// A-adjoint (I − Π)(I − M⁻¹A).
    pub fn error_adjoint(&self, e: &[f64]) -> Vec<f64> {
        self.project_out(&self.smooth_error(e))
    }
}

/// B g = w + M⁻¹(g − A w) with w = P A_c⁻¹ Pᵀ g.
pub fn tl_apply(tl: &TwoLevel, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != tl.a.n() {
        return Err(Error::DimensionMismatch { expected: tl.a.n(), found: g.len() });
    }
    let mut w = tl.coarse_correction(g);
    smooth_in_place(&tl.a, &tl.m, &mut w, g, 1, 1.0);
    Ok(w)
}

impl LinearOperator for TwoLevel {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let w = tl_apply(self, x).expect("dimension checked");
        y.copy_from_slice(&w);
    }
}

/// V-cycle on a multilevel hierarchy.
pub struct VCycle {
    levels: Vec<(SparseMatrix, Option<(SparseMatrix, SparseMatrix)>, Vec<f64>)>,
    coarsest: EnvelopeCholesky,
    pub pre: usize,
    pub post: usize,
    /// Aggregates of the first coarsening.
    pub aggregates: AggregateSet,
}

impl VCycle {
    pub fn new(h: &Hierarchy, pre: usize, post: usize) -> Result<Self> {
        if h.levels.is_empty() {
            return Err(Error::EmptyCoarse);
        }
        let levels = h
            .levels
            .iter()
            .map(|l| (l.a.clone(), l.p.as_ref().map(|p| (p.clone(), p.transpose())), l.m.entries().to_vec()))
            .collect::<Vec<_>>();
        let coarsest = EnvelopeCholesky::new(&h.levels.last().unwrap().a)?;
        Ok(VCycle { levels, coarsest, pre, post, aggregates: h.first_aggregates.clone() })
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn fine_matrix(&self) -> &SparseMatrix {
        &self.levels[0].0
    }

    /// First-level prolongator, if any.
    pub fn prolongator(&self) -> Option<&SparseMatrix> {
        self.levels[0].1.as_ref().map(|(p, _)| p)
    }

    fn cycle(&self, k: usize, r: &[f64]) -> Vec<f64> {
        self.cycle_with(k, r, self.pre, self.post)
    }

    fn cycle_with(&self, k: usize, r: &[f64], pre: usize, post: usize) -> Vec<f64> {
        let (a, pp, m) = &self.levels[k];
        let (p, pt) = match pp {
            None => return self.coarsest.solve(r),
            Some(x) => (&x.0, &x.1),
        };
        let n = a.n();
        let mut x = vec![0.0; n];
        smooth_in_place(a, m, &mut x, r, pre, 1.0);
        let mut ax = vec![0.0; n];
        a.spmv_into(&x, &mut ax);
        let res: Vec<f64> = r.iter().zip(&ax).map(|(b, y)| b - y).collect();
        let mut rc = vec![0.0; pt.rows()];
        pt.spmv_into(&res, &mut rc);
        let xc = self.cycle_with(k + 1, &rc, pre, post);
        let mut cx = vec![0.0; n];
        p.spmv_into(&xc, &mut cx);
        for i in 0..n {
            x[i] += cx[i];
        }
        smooth_in_place(a, m, &mut x, r, post, 1.0);
        x
    }

    /// E e = e − B A e.
    pub fn error(&self, e: &[f64]) -> Vec<f64> {
        self.error_with(e, self.pre, self.post)
    }

    /// A-adjoint of E: the cycle with pre- and post-smoothing exchanged.
    pub fn error_adjoint(&self, e: &[f64]) -> Vec<f64> {
        self.error_with(e, self.post, self.pre)
    }

    fn error_with(&self, e: &[f64], pre: usize, post: usize) -> Vec<f64> {
        let ae = self.levels[0].0.spmv(e).expect("dimension checked");
        let be = self.cycle_with(0, &ae, pre, post);
        e.iter().zip(&be).map(|(x, y)| x - y).collect()
    }
}

/// V-cycle application B g.
pub fn vcycle_apply(v: &VCycle, g: &[f64]) -> Result<Vec<f64>> {
    let n = v.levels[0].0.n();
    if g.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.len() });
    }
    Ok(v.cycle(0, g))
}

impl LinearOperator for VCycle {
    fn dim(&self) -> usize {
        self.levels[0].0.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.cycle(0, x));
    }
}

/// ‖E‖_A = sqrt(λ_max(E*E)) with E* the A-adjoint of E.
pub fn measure_conv_factor(
    e: &dyn Fn(&[f64]) -> Vec<f64>,
    e_adjoint: &dyn Fn(&[f64]) -> Vec<f64>,
    a: &SparseMatrix,
    opts: &LanczosOptions,
) -> Result<f64> {
    let n = a.n();
    let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
        let t = e_adjoint(&e(x));
        y.copy_from_slice(&t);
    });
    let r = lanczos(&op, Some(a), Which::Largest, opts)?;
    Ok(libm::sqrt(r.largest.value.max(0.0)))
}

/// Convergence factor of a two-level method.
pub fn tl_conv_factor(tl: &TwoLevel, opts: &LanczosOptions) -> Result<f64> {
    measure_conv_factor(&|x| tl.error(x), &|x| tl.error_adjoint(x), &tl.a, opts)
}

/// w_k = (I − M⁻¹A)^k w₀, rescaled to unit ∞-norm after every step.
pub fn refine_weight(a: &SparseMatrix, m: &DiagonalMatrix, w0: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = a.n();
    if w0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w0.len() });
    }
    let mut w = w0.to_vec();
    normalize_inf(&mut w)?;
    let zero = vec![0.0; n];
    for _ in 0..k {
        smooth_in_place(a, m.entries(), &mut w, &zero, 1, 1.0);
        normalize_inf(&mut w)?;
    }
    Ok(w)
}

fn normalize_inf(w: &mut [f64]) -> Result<()> {
    let s = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(s > f64::MIN_POSITIVE) || !s.is_finite() {
        return Err(Error::ZeroWeight);
    }
    w.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapConfig {
    /// Number of hierarchies.
    pub r: usize,
    /// Composite iterations refining w between hierarchies.
    pub m: usize,
    /// Matching sweeps per level.
    pub sweeps: usize,
    pub matcher: Matcher,
    pub coarsest: usize,
    pub w0: Vec<f64>,
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.m == 0 || self.sweeps == 0 {
            return Err(Error::Invalid("bootstrap requires r, m and sweeps at least 1".into()));
        }
        Ok(())
    }
}

/// Multiplicative product of V-cycles, B_{r−1} applied last.
pub struct CompositeSolver {
    pub hierarchies: Vec<VCycle>,
    a: SparseMatrix,
}

impl CompositeSolver {
    pub fn new(a: &SparseMatrix) -> Self {
        CompositeSolver { hierarchies: Vec::new(), a: a.clone() }
    }

    pub fn push(&mut self, v: VCycle) {
        self.hierarchies.push(v);
    }

    /// E = E_{r−1} ⋯ E_0.
    pub fn error(&self, e: &[f64]) -> Vec<f64> {
        let mut x = e.to_vec();
        for h in &self.hierarchies {
            x = h.error(&x);
        }
        x
    }

    /// E* = E_0 ⋯ E_{r−1}; each symmetric V-cycle error is A-self-adjoint.
    pub fn error_adjoint(&self, e: &[f64]) -> Vec<f64> {
        let mut x = e.to_vec();
        for h in self.hierarchies.iter().rev() {
            x = h.error_adjoint(&x);
        }
        x
    }

    pub fn conv_factor(&self, opts: &LanczosOptions) -> Result<f64> {
        measure_conv_factor(&|x| self.error(x), &|x| self.error_adjoint(x), &self.a, opts)
    }
}

impl LinearOperator for CompositeSolver {
    fn dim(&self) -> usize {
        self.a.n()
    }

    /// B with I − BA = E.
    fn apply(&self, g: &[f64], y: &mut [f64]) {
        let n = self.a.n();
        let mut x = vec![0.0; n];
        let mut ax = vec![0.0; n];
        for h in &self.hierarchies {
            self.a.spmv_into(&x, &mut ax);
            let r: Vec<f64> = g.iter().zip(&ax).map(|(b, t)| b - t).collect();
            let c = h.cycle(0, &r);
            for i in 0..n {
                x[i] += c[i];
            }
        }
        y.copy_from_slice(&x);
    }
}

/// One bootstrap step.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapStep {
    pub weight: Vec<f64>,
    /// μ_c⁻¹ of the first-level aggregates built from `weight`.
    pub mu_inv: f64,
    /// Convergence factor of this hierarchy alone.
    pub factor: f64,
    /// Convergence factor of the composite after adding this hierarchy.
    pub composite_factor: f64,
    pub aggregates: AggregateSet,
}

/// Builds r hierarchies, refining w with m composite iterations between them.
///
/// A refinement that annihilates w keeps the previous vector.
pub fn bootstrap_build(a: &SparseMatrix, cfg: &BootstrapConfig) -> Result<(CompositeSolver, Vec<BootstrapStep>)> {
    cfg.validate()?;
    if cfg.w0.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: cfg.w0.len() });
    }
    let opts = HierarchyOptions { matcher: cfg.matcher, sweeps: cfg.sweeps, coarsest: cfg.coarsest, max_levels: 30 };
    let lopts = LanczosOptions { tol: 1e-6, ..LanczosOptions::default() };
    let eopts = EigOptions::default();
    let d = DiagonalMatrix::of(a)?;
    let mut solver = CompositeSolver::new(a);
    let mut history = Vec::with_capacity(cfg.r);
    let mut w = cfg.w0.clone();
    normalize_inf(&mut w)?;
    for step in 0..cfg.r {
        if step > 0 {
            for _ in 0..cfg.m {
                let mut next = solver.error(&w);
                match normalize_inf(&mut next) {
                    Ok(()) => w = next,
                    Err(Error::ZeroWeight) => break,
                    Err(e) => return Err(e),
                }
            }
        }
        let h = build_hierarchy(a, &w, &opts)?;
        let v = VCycle::new(&h, 1, 1)?;
        let mu_inv = match v.prolongator() {
            Some(p) => mu_global(a, &d, p, &eopts)?.mu_inv,
            None => 0.0,
        };
        let factor = measure_conv_factor(&|x| v.error(x), &|x| v.error_adjoint(x), a, &lopts)?;
        if !(factor < 1.0) {
            return Err(Error::NoConvergence { what: "bootstrap hierarchy", iterations: step });
        }
        let aggregates = v.aggregates.clone();
        solver.push(v);
        let composite_factor = solver.conv_factor(&lopts)?;
        history.push(BootstrapStep { weight: w.clone(), mu_inv, factor, composite_factor, aggregates });
    }
    Ok((solver, history))
}

/// Convenience: ℓ1-Jacobi smoothing of the all-ones vector.
pub fn ones_refined(a: &SparseMatrix, k: usize) -> Result<Vec<f64>> {
    refine_weight(a, &l1_jacobi_diagonal(a)?, &vec![1.0; a.n()], k)
}
