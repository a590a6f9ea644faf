use std::path::{Path, PathBuf};

use crate::basis::BasisKind;
use crate::error::{Error, Result};
use crate::gallery;
use crate::matio::{read_matrix_market, SparseMatrix};
use crate::ritz::CStrategy;
use crate::trace::SolverKind;

/// Environment variable naming a directory of `<name>.mtx` files.
pub const MATRIX_DIR_ENV: &str = "SSTEP_CG_MATRIX_DIR";

/// Default matrix directory, relative to the workspace root.
pub const DEFAULT_MATRIX_DIR: &str = "data/matrices";

/// How the target relative residual is chosen for a cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsMode {
    /// The smallest relative true residual CG attains on the problem,
    /// rounded up to two significant digits.
    HscgAttainable,
    Fixed(f64),
}

impl EpsMode {
    pub fn label(&self) -> String {
        match self {
            EpsMode::HscgAttainable => "hscg-attainable".to_string(),
            EpsMode::Fixed(v) => format!("{v:e}"),
        }
    }
}

impl std::str::FromStr for EpsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("hscg-attainable") || t.eq_ignore_ascii_case("attainable") {
            return Ok(EpsMode::HscgAttainable);
        }
        let v = t.strip_prefix("fixed(").and_then(|r| r.strip_suffix(')')).unwrap_or(t);
        match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(EpsMode::Fixed(x)),
            _ => Err(Error::Config(format!("bad eps mode '{t}'"))),
        }
    }
}

/// A matrix source: a Matrix Market file, or `gallery:<name>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSource {
    pub label: String,
    pub location: String,
}

impl MatrixSource {
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split_whitespace();
        let location = parts
            .next()
            .ok_or_else(|| Error::Config("empty matrix entry".into()))?
            .to_string();
        let label = match parts.next() {
            Some(l) => l.to_string(),
            None => default_label(&location),
        };
        if parts.next().is_some() {
            return Err(Error::Config(format!("matrix entry '{s}' has extra fields")));
        }
        Ok(Self { label, location })
    }

    pub fn load(&self) -> Result<SparseMatrix> {
        load_matrix(&self.location)
    }
}

fn default_label(location: &str) -> String {
    if let Some(name) = location.strip_prefix("gallery:") {
        return name.to_string();
    }
    Path::new(location)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| location.to_string())
}

/// Generated matrices available as `gallery:<name>`.
pub fn gallery_matrix(name: &str) -> Option<SparseMatrix> {
    let (base, arg) = match name.split_once('-') {
        Some((b, a)) => (b, a.parse::<usize>().ok()),
        None => (name, None),
    };
    Some(match (base, arg) {
        ("gr_30_30", None) => gallery::gr_30_30(),
        ("grid9", Some(k)) => gallery::grid9(k),
        ("laplace1d", Some(n)) => gallery::laplace1d(n),
        ("laplace2d", Some(k)) => gallery::laplace2d(k),
        ("biharmonic1d", Some(n)) => gallery::biharmonic1d(n),
        ("identity", Some(n)) => SparseMatrix::identity(n),
        _ => return None,
    })
}

/// Directory searched for bare matrix names.
pub fn matrix_dir() -> PathBuf {
    match std::env::var_os(MATRIX_DIR_ENV) {
        Some(d) => PathBuf::from(d),
        None => {
            let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("../..")
                .join(DEFAULT_MATRIX_DIR);
            if here.is_dir() {
                here.canonicalize().unwrap_or(here)
            } else {
                PathBuf::from(DEFAULT_MATRIX_DIR)
            }
        }
    }
}

/// Loads `gallery:<name>`, a path to a `.mtx` file, or a bare name looked up
/// as `<matrix_dir>/<name>.mtx`.
pub fn load_matrix(location: &str) -> Result<SparseMatrix> {
    if let Some(name) = location.strip_prefix("gallery:") {
        return gallery_matrix(name).ok_or_else(|| Error::Config(format!("unknown gallery matrix '{name}'")));
    }
    let path = Path::new(location);
    if path.exists() || location.contains('/') || location.ends_with(".mtx") {
        return read_matrix_market(path);
    }
    let candidate = matrix_dir().join(format!("{location}.mtx"));
    if candidate.exists() {
        return read_matrix_market(candidate);
    }
    if let Some(m) = gallery_matrix(location) {
        return Ok(m);
    }
    read_matrix_market(candidate)
}

/// Experiment grid read from a line-based `key = value` file.
///
/// ```text
/// # comment
/// matrix = data/matrices/nos1.mtx nos1
/// matrix = gallery:gr_30_30
/// algorithms = hscg, sstep, adaptive-old, adaptive-improved
/// s_values = 5, 10, 15
/// eps_modes = hscg-attainable, 1e-6
/// basis_kinds = newton, chebyshev
/// c_strategies = adaptive
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub matrices: Vec<MatrixSource>,
    pub algorithms: Vec<SolverKind>,
    pub s_values: Vec<usize>,
    pub eps_modes: Vec<EpsMode>,
    /// Bases for the improved adaptive variant.
    pub basis_kinds: Vec<BasisKind>,
    /// `c` strategies for the improved adaptive variant.
    pub c_strategies: Vec<CStrategy>,
    /// Basis for fixed s-step and the old adaptive variant.
    pub fixed_basis: BasisKind,
    /// `c` for the old adaptive variant.
    pub old_c_strategy: CStrategy,
    /// Growth per outer loop; `None` means `f = sigma`.
    pub f: Option<usize>,
    pub s_bar0: usize,
    pub max_outer: Option<usize>,
    pub max_iters: Option<usize>,
    pub write_traces: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            matrices: Vec::new(),
            algorithms: Vec::new(),
            s_values: vec![5, 10, 15],
            eps_modes: vec![EpsMode::HscgAttainable, EpsMode::Fixed(1e-6)],
            basis_kinds: vec![BasisKind::Newton, BasisKind::Chebyshev],
            c_strategies: vec![CStrategy::Adaptive],
            fixed_basis: BasisKind::Monomial,
            old_c_strategy: CStrategy::Unit,
            f: None,
            s_bar0: 1,
            max_outer: None,
            max_iters: None,
            write_traces: true,
        }
    }
}

fn list<T>(value: &str, line: usize, path: &Path, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            f(s).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line,
                msg: e.to_string(),
            })
        })
        .collect()
}

impl ExperimentSpec {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected key = value, got '{content}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let usize_of = |v: &str| {
                v.parse::<usize>()
                    .map_err(|_| Error::Config(format!("'{v}' is not a nonnegative integer")))
            };
            match key {
                "matrix" | "matrices" => {
                    for m in list(value, line, path, MatrixSource::parse)? {
                        spec.matrices.push(m);
                    }
                }
                "algorithms" => spec.algorithms = list(value, line, path, str::parse)?,
                "s_values" | "s" | "sigma" => spec.s_values = list(value, line, path, usize_of)?,
                "eps_modes" | "eps_star" => spec.eps_modes = list(value, line, path, str::parse)?,
                "basis_kinds" | "bases" => spec.basis_kinds = list(value, line, path, str::parse)?,
                "c_strategies" => spec.c_strategies = list(value, line, path, str::parse)?,
                "fixed_basis" => spec.fixed_basis = value.parse().map_err(|e: Error| err(line, e.to_string()))?,
                "old_c_strategy" => spec.old_c_strategy = value.parse().map_err(|e: Error| err(line, e.to_string()))?,
                "f" => spec.f = Some(usize_of(value).map_err(|e| err(line, e.to_string()))?),
                "s_bar0" => spec.s_bar0 = usize_of(value).map_err(|e| err(line, e.to_string()))?,
                "max_outer" => spec.max_outer = Some(usize_of(value).map_err(|e| err(line, e.to_string()))?),
                "max_iters" => spec.max_iters = Some(usize_of(value).map_err(|e| err(line, e.to_string()))?),
                "traces" | "write_traces" => {
                    spec.write_traces = match value {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => return Err(err(line, format!("expected a boolean, got '{value}'"))),
                    }
                }
                other => return Err(err(line, format!("unknown key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.matrices.is_empty() {
            return Err(Error::Config("spec lists no matrices".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("spec lists no algorithms".into()));
        }
        if self.eps_modes.is_empty() {
            return Err(Error::Config("spec lists no eps modes".into()));
        }
        let needs_s = self.algorithms.iter().any(|a| *a != SolverKind::Hscg);
        if needs_s && (self.s_values.is_empty() || self.s_values.contains(&0)) {
            return Err(Error::Config("s_values must be nonempty and positive".into()));
        }
        if self.algorithms.contains(&SolverKind::AdaptiveImproved)
            && (self.basis_kinds.is_empty() || self.c_strategies.is_empty())
        {
            return Err(Error::Config(
                "improved variant needs basis_kinds and c_strategies".into(),
            ));
        }
        if self.s_bar0 == 0 {
            return Err(Error::Config("s_bar0 must be positive".into()));
        }
        Ok(())
    }
}
