use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwm::config::{read_batch, read_config, ExperimentConfig, Measures, ProblemSpec, WeightSpec};
use cwm::error::{Error, Result};
use cwm::experiment::{build_problem, run_experiment_full, run_table};
use cwm::mtx::write_matrix_market;
use cwm::report::{write_aggregates_csv, write_csv, write_history_csv, write_json, write_pivot_csv};
use cwm::svg::aggregate_svg;
use cwm_core::matching::Matcher;

#[derive(Parser)]
#[command(name = "cwm", version, about = "Aggregation quality experiments with compatible weighted matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run(RunArgs),
    /// Run every configuration of a batch file.
    Table(TableArgs),
    /// Write the matrix of a configuration in Matrix Market format.
    ExportMatrix(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Report file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides every seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix Market input replacing the configured problem.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Weight vector, one value per line.
    #[arg(long)]
    weight_file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
    /// Aggregate map.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// `index,aggregate` CSV.
    #[arg(long)]
    aggregates: Option<PathBuf>,
    /// Residual history of the preconditioned solve, when measured.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: Common,
    /// Table layout with bound and mu_inv columns per number of sweeps.
    #[arg(long)]
    pivot: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

fn apply_overrides(mut cfg: ExperimentConfig, c: &Common) -> ExperimentConfig {
    if let Some(seed) = c.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(m) = &c.matrix {
        cfg.problem = ProblemSpec::Matrix { path: m.clone() };
    }
    if let Some(w) = &c.weight_file {
        cfg.weight = WeightSpec::File { path: w.clone() };
    }
    cfg
}

fn default_for_matrix(path: &Path) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::Matrix { path: path.to_path_buf() },
        matcher: Matcher::Suitor,
        sweeps: 1,
        weight: WeightSpec::Ones,
        measure: Measures::default(),
        svg: None,
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(Error::io(p))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(Error::io(path))?))
}

fn check_threads(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Usage("--threads must be at least 1".into()));
    }
    Ok(())
}

fn load_single(config: &Option<PathBuf>, c: &Common) -> Result<ExperimentConfig> {
    let cfg = match (config, &c.matrix) {
        (Some(p), _) => read_config(p)?,
        (None, Some(m)) => default_for_matrix(m),
        (None, None) => return Err(Error::Usage("either --config or --matrix is required".into())),
    };
    Ok(apply_overrides(cfg, c))
}

fn run(args: RunArgs) -> Result<bool> {
    check_threads(args.common.threads)?;
    let cfg = load_single(&args.config, &args.common)?;
    let outcome = run_experiment_full(&cfg)?;
    let mut out = output(&args.common.out)?;
    match args.common.format.unwrap_or(Format::Json) {
        Format::Json => write_json(&outcome.row, &mut out)?,
        Format::Csv => write_csv(std::slice::from_ref(&outcome.row), &mut out)?,
    }
    out.flush().map_err(Error::io(args.common.out.clone().unwrap_or_else(|| "<stdout>".into())))?;
    if let Some(svg_path) = args.svg.as_ref().or(cfg.svg.as_ref()) {
        match aggregate_svg(&outcome.aggregates, &outcome.geometry) {
            Some(s) => std::fs::write(svg_path, s).map_err(Error::io(svg_path))?,
            None => eprintln!("warning: no geometry for a matrix input, skipping {}", svg_path.display()),
        }
    }
    if let Some(p) = &args.aggregates {
        write_aggregates_csv(&outcome.aggregates.agg_of, create(p)?)?;
    }
    if let Some(p) = &args.history {
        if outcome.pcg_history.is_empty() {
            eprintln!("warning: no solve was measured, set [measure] pcg = true");
        } else {
            write_history_csv(&outcome.pcg_history, create(p)?)?;
        }
    }
    Ok(true)
}

fn table(args: TableArgs) -> Result<bool> {
    check_threads(args.common.threads)?;
    let configs: Vec<ExperimentConfig> =
        read_batch(&args.config)?.into_iter().map(|c| apply_overrides(c, &args.common)).collect();
    let rows = run_table(&configs, args.common.threads)?;
    let mut out = output(&args.common.out)?;
    match args.common.format.unwrap_or(Format::Csv) {
        Format::Json => write_json(&rows, &mut out)?,
        Format::Csv => write_csv(&rows, &mut out)?,
    }
    out.flush().map_err(Error::io(args.common.out.clone().unwrap_or_else(|| "<stdout>".into())))?;
    if let Some(p) = &args.pivot {
        write_pivot_csv(&rows, create(p)?)?;
    }
    let mut ok = true;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("row {} {} l={}: {}", r.problem, r.matcher, r.sweeps, r.error.as_deref().unwrap_or(""));
        ok = false;
    }
    Ok(ok)
}

fn export(args: ExportArgs) -> Result<bool> {
    let common = Common { out: None, format: None, threads: 1, seed: args.seed, matrix: None, weight_file: None };
    let cfg = load_single(&args.config, &common)?;
    let problem = build_problem(&cfg.problem)?;
    write_matrix_market(&args.out, &problem.a, true)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Table(a) => table(a),
        Command::ExportMatrix(a) => export(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
