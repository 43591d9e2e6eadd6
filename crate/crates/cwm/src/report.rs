//! Report rows and their CSV and JSON renderings.

use std::collections::BTreeSet;
use std::io::Write;

use serde::ser::Serializer;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};

/// Local bound as printed in tables: a number, "†" when no splitting was found, or absent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bound {
    Value(f64),
    Unavailable,
    #[default]
    NotComputed,
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Bound::Value(v) => Some(v),
            _ => None,
        }
    }

    fn cell(&self, fmt: impl Fn(f64) -> String) -> String {
        match *self {
            Bound::Value(v) => fmt(v),
            Bound::Unavailable => "†".into(),
            Bound::NotComputed => String::new(),
        }
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Bound::Value(v) => s.serialize_f64(v),
            Bound::Unavailable => s.serialize_str("†"),
            Bound::NotComputed => s.serialize_none(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapRow {
    pub mu_inv: f64,
    pub factor: f64,
    pub composite_factor: f64,
}

/// Wall-clock seconds per phase; not part of the reproducible output.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timing {
    pub weight_s: f64,
    pub coarsening_s: f64,
    pub mu_s: f64,
    pub bound_s: f64,
    pub rho_f_s: f64,
    pub conv_factor_s: f64,
    pub pcg_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub problem: String,
    pub n: Option<usize>,
    pub dofs: usize,
    pub matcher: String,
    pub sweeps: usize,
    pub weight: String,
    pub n_coarse: usize,
    pub max_aggregate: usize,
    pub mu_inv: Option<f64>,
    pub bound: Bound,
    pub splitting_verified: bool,
    pub delta_factor: Option<f64>,
    pub rho_f: Option<f64>,
    pub conv_factor: Option<f64>,
    pub pcg_iterations: Option<usize>,
    pub bootstrap: Vec<BootstrapRow>,
    pub error: Option<String>,
    pub timing: Timing,
}

impl ReportRow {
    /// Row echoing the configuration with no measurements yet.
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ReportRow {
            problem: cfg.problem_label(),
            n: match cfg.problem {
                crate::config::ProblemSpec::Grid { n, .. } => Some(n),
                _ => None,
            },
            dofs: 0,
            matcher: cfg.matcher_label(),
            sweeps: cfg.sweeps,
            weight: cfg.weight_label(),
            n_coarse: 0,
            max_aggregate: 0,
            mu_inv: None,
            bound: Bound::NotComputed,
            splitting_verified: false,
            delta_factor: None,
            rho_f: None,
            conv_factor: None,
            pcg_iterations: None,
            bootstrap: Vec::new(),
            error: None,
            timing: Timing::default(),
        }
    }
}

pub const CSV_HEADER: [&str; 17] = [
    "problem",
    "n",
    "dofs",
    "matcher",
    "sweeps",
    "weight",
    "n_coarse",
    "max_aggregate",
    "mu_inv",
    "bound",
    "splitting_verified",
    "delta_factor",
    "rho_f",
    "conv_factor",
    "pcg_iterations",
    "error",
    "total_s",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Usage(format!("csv output: {e}"))
}

pub fn write_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            opt(r.n),
            r.dofs.to_string(),
            r.matcher.clone(),
            r.sweeps.to_string(),
            r.weight.clone(),
            r.n_coarse.to_string(),
            r.max_aggregate.to_string(),
            opt(r.mu_inv),
            r.bound.cell(|v| v.to_string()),
            r.splitting_verified.to_string(),
            opt(r.delta_factor),
            opt(r.rho_f),
            opt(r.conv_factor),
            opt(r.pcg_iterations),
            r.error.clone().unwrap_or_default(),
            format!("{:.3}", r.timing.total_s),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Usage(format!("csv output: {e}")))
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| Error::Usage(format!("json output: {e}")))?;
    writeln!(out).map_err(|e| Error::Usage(format!("json output: {e}")))
}

/// Table layout: one line per problem, matcher, weight and size, with bound and μ_c⁻¹ columns per ℓ.
pub fn write_pivot_csv<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let levels: BTreeSet<usize> = rows.iter().map(|r| r.sweeps).collect();
    let key = |r: &ReportRow| (r.problem.clone(), r.matcher.clone(), r.weight.clone(), r.n, r.dofs);
    let mut keys = Vec::new();
    for r in rows {
        let k = key(r);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["problem", "matcher", "weight", "n", "dofs"].map(String::from).to_vec();
    for l in &levels {
        header.push(format!("bound_l{l}"));
        header.push(format!("mu_inv_l{l}"));
    }
    w.write_record(&header).map_err(csv_err)?;
    for k in keys {
        let mut rec = vec![k.0.clone(), k.1.clone(), k.2.clone(), opt(k.3), k.4.to_string()];
        for &l in &levels {
            match rows.iter().find(|r| key(r) == k && r.sweeps == l) {
                Some(r) if r.error.is_none() => {
                    rec.push(r.bound.cell(|v| format!("{v:.3}")));
                    rec.push(r.mu_inv.map(|v| format!("{v:.3}")).unwrap_or_default());
                }
                Some(_) => rec.extend(["error".to_string(), "error".to_string()]),
                None => rec.extend([String::new(), String::new()]),
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Usage(format!("csv output: {e}")))
}

/// Iteration, relative residual and per-step reduction factor of a solve.
pub fn write_history_csv<W: Write>(residuals: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iteration", "residual", "factor"]).map_err(csv_err)?;
    for (k, r) in residuals.iter().enumerate() {
        let f = if k == 0 { String::new() } else { (r / residuals[k - 1]).to_string() };
        w.write_record([k.to_string(), r.to_string(), f]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Usage(format!("csv output: {e}")))
}

/// `index,aggregate` lines.
pub fn write_aggregates_csv<W: Write>(agg_of: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "aggregate"]).map_err(csv_err)?;
    for (i, a) in agg_of.iter().enumerate() {
        w.write_record([i.to_string(), a.to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Usage(format!("csv output: {e}")))
}
