//! Experiment configuration: key = value files with section headers.
//!
//! A value holding commas is a list; a batch file expands every list into
//! the cartesian product of its entries, earlier keys varying slowest.

use std::path::{Path, PathBuf};

use cwm_core::matching::Matcher;
use cwm_core::problems::{Axis, CoefficientField};
use ini::Ini;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// 5-point operator on the n × n interior grid.
    Grid { n: usize, field: CoefficientField },
    /// P1 operator on a mesh file.
    Mesh { path: PathBuf, field: CoefficientField },
    /// P1 operator on the criss-cross mesh with 2^levels cells per side.
    StructuredMesh { levels: usize, field: CoefficientField },
    Matrix { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Ones,
    /// Uniform [0, 1) sample smoothed by k ℓ1-Jacobi sweeps.
    Random { seed: u64, k: usize },
    OnesRefined { k: usize },
    /// Smallest eigenvector of the symmetrized ℓ1-Jacobi smoother problem.
    Eigenvector,
    Bootstrap { r: usize, m: usize, k: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measures {
    pub bound: bool,
    pub rho_f: bool,
    pub conv_factor: bool,
    pub pcg: bool,
}

impl Default for Measures {
    fn default() -> Self {
        Measures { bound: true, rho_f: true, conv_factor: false, pcg: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub matcher: Matcher,
    pub sweeps: usize,
    pub weight: WeightSpec,
    pub measure: Measures,
    pub svg: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn problem_label(&self) -> String {
        match &self.problem {
            ProblemSpec::Grid { field, .. } => field_label(field),
            ProblemSpec::Mesh { path, field } => {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                format!("mesh:{name}:{}", field_label(field))
            }
            ProblemSpec::StructuredMesh { levels, field } => format!("crisscross{levels}:{}", field_label(field)),
            ProblemSpec::Matrix { path } => format!("matrix:{}", path.display()),
        }
    }

    pub fn weight_label(&self) -> String {
        match &self.weight {
            WeightSpec::Ones => "ones".into(),
            WeightSpec::Random { seed, k } => format!("random(seed={seed},k={k})"),
            WeightSpec::OnesRefined { k } => format!("ones-refined(k={k})"),
            WeightSpec::Eigenvector => "eigenvector".into(),
            WeightSpec::Bootstrap { r, m, k } => format!("bootstrap(r={r},m={m},k={k})"),
            WeightSpec::File { path } => format!("file:{}", path.display()),
        }
    }

    pub fn matcher_label(&self) -> String {
        match self.matcher {
            Matcher::Auction { eps } => format!("auction(eps={eps})"),
            m => m.name().into(),
        }
    }

    /// Replaces every seed present in the configuration.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let ProblemSpec::Grid { field: CoefficientField::Random { seed: s }, .. }
        | ProblemSpec::Mesh { field: CoefficientField::Random { seed: s }, .. }
        | ProblemSpec::StructuredMesh { field: CoefficientField::Random { seed: s }, .. } = &mut self.problem
        {
            *s = seed;
        }
        if let WeightSpec::Random { seed: s, .. } = &mut self.weight {
            *s = seed;
        }
        self
    }
}

fn field_label(f: &CoefficientField) -> String {
    match *f {
        CoefficientField::Constant => "constant".into(),
        CoefficientField::Anisotropic { eps, axis } => {
            format!("anisotropy(eps={eps},axis={})", if axis == Axis::X { "x" } else { "y" })
        }
        CoefficientField::Jump => "jump".into(),
        CoefficientField::Random { seed } => format!("random(seed={seed})"),
        CoefficientField::RotatedTensor { theta, eps } => format!("rotated(theta={theta},eps={eps})"),
    }
}

/// Parses a matcher name; `auction` takes its ε from `auction_eps`.
pub fn parse_matcher(name: &str, auction_eps: f64) -> Result<Matcher> {
    match name {
        "exact" => Ok(Matcher::Exact),
        "suitor" => Ok(Matcher::Suitor),
        "preis" => Ok(Matcher::Preis),
        "auction" if auction_eps > 0.0 => Ok(Matcher::Auction { eps: auction_eps }),
        "auction" => Err(Error::Usage("auction_eps must be positive".into())),
        "bruteforce" => Ok(Matcher::BruteForce),
        other => Err(Error::Usage(format!("unknown matcher `{other}` (expected exact, suitor, preis or auction)"))),
    }
}

/// Reads `pi`, `pi/k`, `k*pi` or a plain number.
fn parse_angle(s: &str) -> Option<f64> {
    let pi = std::f64::consts::PI;
    let s = s.replace(' ', "");
    if s == "pi" {
        return Some(pi);
    }
    if let Some(d) = s.strip_prefix("pi/") {
        return d.parse::<f64>().ok().map(|d| pi / d);
    }
    if let Some(k) = s.strip_suffix("*pi") {
        return k.parse::<f64>().ok().map(|k| k * pi);
    }
    s.parse().ok()
}

/// One flat assignment `section.key = value`.
type Assignment = Vec<(String, String, String)>;

struct View<'a> {
    values: &'a Assignment,
    path: &'a Path,
}

impl View<'_> {
    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.values.iter().find(|(s, k, _)| s == section && k == key).map(|(_, _, v)| v.as_str())
    }

    fn bad(&self, section: &str, key: &str, v: &str, want: &str) -> Error {
        Error::Usage(format!("{}: [{section}] {key} = `{v}`: expected {want}", self.path.display()))
    }

    fn get<T: std::str::FromStr>(&self, section: &str, key: &str, want: &str) -> Result<Option<T>> {
        match self.raw(section, key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.bad(section, key, v, want)),
        }
    }

    fn required<T: std::str::FromStr>(&self, section: &str, key: &str, want: &str) -> Result<T> {
        self.get(section, key, want)?
            .ok_or_else(|| Error::Usage(format!("{}: missing [{section}] {key}", self.path.display())))
    }

    fn flag(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.raw(section, key) {
            None => Ok(default),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(self.bad(section, key, v, "a boolean")),
        }
    }

    fn relative(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path.parent().unwrap_or(Path::new(".")).join(p)
        }
    }

    fn field(&self, kind: &str) -> Result<CoefficientField> {
        let field = match kind {
            "constant" | "poisson" => CoefficientField::Constant,
            "anisotropy" => {
                let eps = self.get("problem", "eps", "a number")?.unwrap_or(100.0);
                let axis = match self.raw("problem", "axis").unwrap_or("y") {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    v => return Err(self.bad("problem", "axis", v, "x or y")),
                };
                CoefficientField::Anisotropic { eps, axis }
            }
            "jump" => CoefficientField::Jump,
            "random" => CoefficientField::Random { seed: self.get("problem", "seed", "an integer")?.unwrap_or(0) },
            "rotated" => {
                let theta = match self.raw("problem", "theta") {
                    None => 0.0,
                    Some(v) => parse_angle(v).ok_or_else(|| self.bad("problem", "theta", v, "an angle"))?,
                };
                let eps = self.get("problem", "eps", "a number")?.unwrap_or(1.0);
                CoefficientField::RotatedTensor { theta, eps }
            }
            v => return Err(self.bad("problem", "kind", v, "constant, anisotropy, jump, random, rotated, fem or matrix")),
        };
        field.validate().map_err(|e| Error::Usage(format!("{}: {e}", self.path.display())))?;
        Ok(field)
    }

    fn problem(&self) -> Result<ProblemSpec> {
        let kind: String = self.required("problem", "kind", "a problem kind")?;
        match kind.as_str() {
            "matrix" => Ok(ProblemSpec::Matrix { path: self.relative(&self.required::<String>("problem", "matrix", "a path")?) }),
            "fem" => {
                let field = self.field(self.raw("problem", "field").unwrap_or("constant"))?;
                match (self.raw("problem", "mesh"), self.get::<usize>("problem", "levels", "an integer")?) {
                    (Some(m), _) => Ok(ProblemSpec::Mesh { path: self.relative(m), field }),
                    (None, Some(levels)) => Ok(ProblemSpec::StructuredMesh { levels, field }),
                    (None, None) => Err(Error::Usage(format!("{}: fem needs [problem] mesh or levels", self.path.display()))),
                }
            }
            k => {
                let field = self.field(k)?;
                let n = self.required("problem", "n", "a grid size")?;
                Ok(ProblemSpec::Grid { n, field })
            }
        }
    }

    fn weight(&self) -> Result<WeightSpec> {
        let k = |d: usize| -> Result<usize> { Ok(self.get("weight", "k", "an integer")?.unwrap_or(d)) };
        Ok(match self.raw("weight", "kind").unwrap_or("ones") {
            "ones" => WeightSpec::Ones,
            "random" => WeightSpec::Random { seed: self.get("weight", "seed", "an integer")?.unwrap_or(0), k: k(0)? },
            "ones-refined" => WeightSpec::OnesRefined { k: k(1)? },
            "eigenvector" => WeightSpec::Eigenvector,
            "bootstrap" => WeightSpec::Bootstrap {
                r: self.get("weight", "r", "an integer")?.unwrap_or(4),
                m: self.get("weight", "m", "an integer")?.unwrap_or(1),
                k: k(5)?,
            },
            "file" => WeightSpec::File { path: self.relative(&self.required::<String>("weight", "file", "a path")?) },
            v => return Err(self.bad("weight", "kind", v, "ones, random, ones-refined, eigenvector, bootstrap or file")),
        })
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let eps = self.get("coarsening", "auction_eps", "a number")?.unwrap_or(1e-2);
        let matcher = parse_matcher(self.raw("coarsening", "matcher").unwrap_or("suitor"), eps)?;
        let sweeps: usize = self.get("coarsening", "sweeps", "an integer")?.unwrap_or(1);
        if sweeps == 0 {
            return Err(self.bad("coarsening", "sweeps", "0", "at least 1"));
        }
        let d = Measures::default();
        let measure = Measures {
            bound: self.flag("measure", "bound", d.bound)?,
            rho_f: self.flag("measure", "rho_f", d.rho_f)?,
            conv_factor: self.flag("measure", "conv_factor", d.conv_factor)?,
            pcg: self.flag("measure", "pcg", d.pcg)?,
        };
        Ok(ExperimentConfig {
            problem: self.problem()?,
            matcher,
            sweeps,
            weight: self.weight()?,
            measure,
            svg: self.raw("output", "svg").map(|p| self.relative(p)),
        })
    }
}

fn load_ini(text: &str, path: &Path) -> Result<Assignment> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::parse(path, e.line, e.msg.to_string()))?;
    let mut out = Vec::new();
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(Error::Usage(format!("{}: key `{k}` outside any section", path.display())));
            }
            continue;
        };
        for (k, v) in props.iter() {
            out.push((section.trim().to_string(), k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

/// Parses a single configuration; list values are rejected.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let values = load_ini(text, path)?;
    if let Some((s, k, _)) = values.iter().find(|(_, _, v)| v.contains(',')) {
        return Err(Error::Usage(format!("{}: [{s}] {k} is a list; use the table command", path.display())));
    }
    View { values: &values, path }.config()
}

/// Expands a batch file into its configurations; a file without sections is an empty batch.
pub fn parse_batch(text: &str, path: &Path) -> Result<Vec<ExperimentConfig>> {
    let values = load_ini(text, path)?;
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let lists: Vec<Vec<String>> =
        values.iter().map(|(_, _, v)| v.split(',').map(|x| x.trim().to_string()).collect()).collect();
    if let Some(i) = lists.iter().position(|l| l.iter().any(|x| x.is_empty())) {
        return Err(Error::Usage(format!("{}: empty entry in [{}] {}", path.display(), values[i].0, values[i].1)));
    }
    let total: usize = lists.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; lists.len()];
    for _ in 0..total {
        let one: Assignment = values
            .iter()
            .zip(&lists)
            .zip(&idx)
            .map(|(((s, k, _), l), &i)| (s.clone(), k.clone(), l[i].clone()))
            .collect();
        out.push(View { values: &one, path }.config()?);
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < lists[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_config(&text, path)
}

pub fn read_batch(path: &Path) -> Result<Vec<ExperimentConfig>> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_batch(&text, path)
}
