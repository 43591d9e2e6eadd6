//! Runs one configuration through problem, weight, coarsening and quality measures.

use std::time::Instant;

use cwm_core::coarsening::{build_hierarchy, coarsen_sweeps, AggregateSet, HierarchyOptions};
use cwm_core::lanczos::LanczosOptions;
use cwm_core::problems::{assemble_p1, gen_fd_diffusion, gen_structured_trimesh, TriMesh};
use cwm_core::quality::{
    cr_ratio, local_bound, mu_global, smallest_eigvec_tbar, EigOptions, SymmetrizedSmoother, DELTA_POLICY,
    LOCAL_AGGREGATE_CAP,
};
use cwm_core::rng::Stream;
use cwm_core::solver::{
    bootstrap_build, ones_refined, pcg_solve, refine_weight, tl_conv_factor, BootstrapConfig, TwoLevel, VCycle,
};
use cwm_core::sparse::l1_jacobi_diagonal;
use cwm_core::{DiagonalMatrix, SparseMatrix};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemSpec, WeightSpec};
use crate::error::{Error, Result, Tag};
use crate::mesh_io::read_mesh;
use crate::mtx::{read_matrix_market, read_vector};
use crate::report::{Bound, BootstrapRow, ReportRow};

/// Coarsest level size of the hierarchies used for bootstrap and PCG.
const COARSEST: usize = 40;
const PCG_RTOL: f64 = 1e-8;
const PCG_MAX_ITER: usize = 1000;

/// Where the unknowns live, for drawing aggregates.
#[derive(Debug, Clone)]
pub enum Geometry {
    Grid { n: usize },
    /// Unknown k sits on mesh vertex `dofs[k]`.
    Mesh { mesh: TriMesh, dofs: Vec<usize> },
    None,
}

pub struct Problem {
    pub a: SparseMatrix,
    pub geometry: Geometry,
}

pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    match spec {
        ProblemSpec::Grid { n, field } => {
            Ok(Problem { a: gen_fd_diffusion(*n, field).tag("problems")?, geometry: Geometry::Grid { n: *n } })
        }
        ProblemSpec::Mesh { path, field } => mesh_problem(read_mesh(path)?, field),
        ProblemSpec::StructuredMesh { levels, field } => mesh_problem(gen_structured_trimesh(*levels), field),
        ProblemSpec::Matrix { path } => {
            let a = read_matrix_market(path)?;
            if a.rows() != a.cols() {
                return Err(Error::Usage(format!("{}: matrix is not square", path.display())));
            }
            Ok(Problem { a, geometry: Geometry::None })
        }
    }
}

fn mesh_problem(mesh: TriMesh, field: &cwm_core::problems::CoefficientField) -> Result<Problem> {
    let a = assemble_p1(&mesh, field).tag("problems")?;
    let dofs = mesh.interior();
    Ok(Problem { a, geometry: Geometry::Mesh { mesh, dofs } })
}

struct Weight {
    w: Vec<f64>,
    bootstrap: Vec<BootstrapRow>,
    composite_factor: Option<f64>,
}

fn build_weight(cfg: &ExperimentConfig, a: &SparseMatrix) -> Result<Weight> {
    let plain = |w| Weight { w, bootstrap: Vec::new(), composite_factor: None };
    let n = a.n();
    Ok(match &cfg.weight {
        WeightSpec::Ones => plain(vec![1.0; n]),
        WeightSpec::Random { seed, k } => {
            let w0 = Stream::new(*seed).vector(n, 0.0, 1.0);
            plain(refine_weight(a, &l1_jacobi_diagonal(a).tag("sparse")?, &w0, *k).tag("solver")?)
        }
        WeightSpec::OnesRefined { k } => plain(ones_refined(a, *k).tag("solver")?),
        WeightSpec::Eigenvector => {
            let m = l1_jacobi_diagonal(a).tag("sparse")?;
            let s = SymmetrizedSmoother::new(a, &m).tag("quality")?;
            plain(smallest_eigvec_tbar(a, &s, &EigOptions::default()).tag("quality")?)
        }
        WeightSpec::Bootstrap { r, m, k } => {
            let bc = BootstrapConfig {
                r: *r,
                m: *m,
                sweeps: cfg.sweeps,
                matcher: cfg.matcher,
                coarsest: COARSEST,
                w0: ones_refined(a, *k).tag("solver")?,
            };
            let (_, steps) = bootstrap_build(a, &bc).tag("solver")?;
            let rows = steps
                .iter()
                .map(|s| BootstrapRow { mu_inv: s.mu_inv, factor: s.factor, composite_factor: s.composite_factor })
                .collect();
            let last = steps.last().expect("r >= 1");
            Weight { w: last.weight.clone(), bootstrap: rows, composite_factor: Some(last.composite_factor) }
        }
        WeightSpec::File { path } => {
            let w = read_vector(path)?;
            if w.len() != n {
                return Err(Error::Usage(format!("{}: {} values for {n} unknowns", path.display(), w.len())));
            }
            plain(w)
        }
    })
}

/// Everything a run produces besides the report row.
pub struct Outcome {
    pub row: ReportRow,
    pub aggregates: AggregateSet,
    pub geometry: Geometry,
    /// Relative residuals of the preconditioned solve, when requested.
    pub pcg_history: Vec<f64>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReportRow> {
    run_experiment_full(cfg).map(|o| o.row)
}

pub fn run_experiment_full(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let problem = build_problem(&cfg.problem)?;
    let a = &problem.a;
    let mut row = ReportRow::new(cfg);
    row.dofs = a.n();
    if let Geometry::Grid { n } = problem.geometry {
        row.n = Some(n);
    }

    let weight = build_weight(cfg, a)?;
    let w = &weight.w;
    row.bootstrap = weight.bootstrap;
    row.timing.weight_s = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let c = coarsen_sweeps(a, w, cfg.matcher, cfg.sweeps).tag("coarsening")?;
    row.n_coarse = c.aggregates.len();
    row.max_aggregate = c.aggregates.max_size();
    row.timing.coarsening_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let d = DiagonalMatrix::of(a).tag("sparse")?;
    let opts = EigOptions::default();
    row.mu_inv = Some(mu_global(a, &d, &c.p_total, &opts).tag("quality")?.mu_inv);
    row.timing.mu_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    if cfg.measure.bound && c.aggregates.max_size() <= LOCAL_AGGREGATE_CAP {
        let lb = local_bound(a, &c.aggregates, &c.p_total, &d, &DELTA_POLICY).tag("quality")?;
        row.bound = match lb.bound {
            Some(b) => Bound::Value(b),
            None => Bound::Unavailable,
        };
        row.splitting_verified = lb.splitting_verified;
        row.delta_factor = lb.delta_factor;
    }
    row.timing.bound_s = t.elapsed().as_secs_f64();

    let m = l1_jacobi_diagonal(a).tag("sparse")?;
    let t = Instant::now();
    if cfg.measure.rho_f && cfg.sweeps == 1 {
        row.rho_f = Some(cr_ratio(a, &c.complement().p_f, &m, &opts).tag("quality")?);
    }
    row.timing.rho_f_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    if let Some(f) = weight.composite_factor {
        row.conv_factor = Some(f);
    } else if cfg.measure.conv_factor {
        let tl = TwoLevel::new(a, &c.p_total, &m).tag("solver")?;
        let lopts = LanczosOptions { tol: 1e-6, ..LanczosOptions::default() };
        row.conv_factor = Some(tl_conv_factor(&tl, &lopts).tag("solver")?);
    }
    row.timing.conv_factor_s = t.elapsed().as_secs_f64();

    let mut pcg_history = Vec::new();
    if cfg.measure.pcg {
        let t = Instant::now();
        let hopts = HierarchyOptions { matcher: cfg.matcher, sweeps: cfg.sweeps, coarsest: COARSEST, max_levels: 30 };
        let h = build_hierarchy(a, w, &hopts).tag("solver")?;
        let v = VCycle::new(&h, 1, 1).tag("solver")?;
        let b = vec![1.0; a.n()];
        let r = pcg_solve(a, Some(&v), &b, PCG_RTOL, PCG_MAX_ITER).tag("solver")?;
        row.pcg_iterations = Some(r.iterations);
        pcg_history = r.residuals;
        row.timing.pcg_s = t.elapsed().as_secs_f64();
    }

    row.timing.total_s = start.elapsed().as_secs_f64();
    Ok(Outcome { row, aggregates: c.aggregates, geometry: problem.geometry, pcg_history })
}

/// Runs every configuration on a pool of `threads` workers; failures become rows with `error` set.
pub fn run_table(configs: &[ExperimentConfig], threads: usize) -> Result<Vec<ReportRow>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        configs
            .par_iter()
            .map(|cfg| match run_experiment(cfg) {
                Ok(row) => row,
                Err(e) => {
                    let mut row = ReportRow::new(cfg);
                    row.error = Some(e.to_string());
                    row
                }
            })
            .collect()
    }))
}
