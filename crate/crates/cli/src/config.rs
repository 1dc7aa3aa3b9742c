//! JSON run configurations.
//!
//! Every command reads one config file. Unknown keys are rejected, optional
//! keys are filled with their defaults, and relative paths are resolved
//! against the config file's directory before anything runs. The resolved
//! struct is what lands in the run manifest, so `run.json` is itself a valid
//! config for the same command.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use roughpde::expr::Expr;
use roughpde::mildsolver::SolverParams;
use roughpde::nonlinearity::Nonlinearity;
use roughpde::roughfield::{gaussian_field, generate_rough, smooth_coefficient, RoughCoefficient};
use roughpde::{io, Grid, SpectralField};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Raised for malformed or inconsistent configs; maps to the usage exit code.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "one")]
    pub dim: usize,
    pub points: usize,
    #[serde(default = "two_pi")]
    pub period: f64,
}

fn one() -> usize {
    1
}

fn two_pi() -> f64 {
    std::f64::consts::TAU
}

impl GridSpec {
    pub fn build(&self) -> anyhow::Result<Grid> {
        Ok(Grid::new(self.dim, self.points, self.period)?)
    }
}

/// A single periodic field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Closed form in `x` (and `y` in two dimensions).
    Expression { expr: String },
    /// A field file written by this tool.
    File { path: PathBuf },
    Gaussian {
        regularity: f64,
        seed: u64,
        #[serde(default)]
        stream: u64,
        #[serde(default = "unit")]
        scale: f64,
    },
    Constant { value: f64 },
}

fn unit() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn build(&self, grid: Grid) -> anyhow::Result<SpectralField> {
        match self {
            FieldSpec::Expression { expr } => {
                let e = Expr::parse(expr, &["x", "y"])?;
                let values: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        let x = grid.node(i);
                        e.eval(&[x[0], x[1]])
                    })
                    .collect();
                if values.iter().any(|v| !v.is_finite()) {
                    bail!(ConfigError(format!("'{expr}' is not finite on the grid")));
                }
                Ok(SpectralField::from_physical(grid, &values)?)
            }
            FieldSpec::File { path } => {
                let f = io::read_field(path).with_context(|| format!("reading {}", path.display()))?;
                let g = f.grid();
                if g.dim() != grid.dim() || g.period() != grid.period() {
                    bail!(ConfigError(format!("{} holds a field on {g:?}, not on {grid:?}", path.display())));
                }
                if g != &grid {
                    return Ok(f.resample(grid.points())?);
                }
                Ok(f)
            }
            FieldSpec::Gaussian { regularity, seed, stream, scale } => {
                Ok(gaussian_field(grid, *regularity, *seed, *stream).scale(*scale))
            }
            FieldSpec::Constant { value } => Ok(SpectralField::constant(grid, *value)),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let FieldSpec::File { path } = self {
            *path = absolute(base, path);
        }
    }
}

/// The drift coefficient `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Rough {
        beta: f64,
        seed: u64,
        #[serde(default = "eight")]
        n_slices: usize,
        #[serde(default = "unit")]
        scale: f64,
    },
    /// Closed form in `x`, `y` and `t`, sampled at each slice start.
    Smooth {
        expr: String,
        #[serde(default = "one")]
        n_slices: usize,
    },
    Constant { value: f64 },
    /// A bundle directory written by `roughpde generate`.
    Bundle { path: PathBuf },
}

fn eight() -> usize {
    8
}

impl CoefficientSpec {
    pub fn build(&self, grid: Grid, horizon: f64) -> anyhow::Result<RoughCoefficient> {
        match self {
            CoefficientSpec::Rough { beta, seed, n_slices, scale } => {
                let b = generate_rough(*beta, grid, *seed, *n_slices, horizon)?;
                Ok(if *scale == 1.0 { b } else { b.scaled(*scale) })
            }
            CoefficientSpec::Smooth { expr, n_slices } => Ok(smooth_coefficient(expr, grid, *n_slices, horizon)?),
            CoefficientSpec::Constant { value } => Ok(RoughCoefficient::constant(grid, *value, horizon)?),
            CoefficientSpec::Bundle { path } => {
                let b = io::read_bundle(path).with_context(|| format!("reading bundle {}", path.display()))?;
                if b.grid() != &grid {
                    bail!(ConfigError(format!("bundle grid {:?} does not match the configured grid {grid:?}", b.grid())));
                }
                if b.horizon < horizon {
                    bail!(ConfigError(format!("bundle covers [0, {}] but the run needs [0, {horizon}]", b.horizon)));
                }
                Ok(b)
            }
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let CoefficientSpec::Bundle { path } = self {
            *path = absolute(base, path);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Quadratic,
    SoftAbs,
    Sine,
    /// `expr` in `x` (and `y` in two dimensions) with declared constants.
    Custom {
        expr: String,
        lip_grad: f64,
        lin_growth: f64,
        #[serde(default)]
        global_lip: Option<f64>,
        #[serde(default)]
        sublin: Option<f64>,
    },
}

impl NonlinearitySpec {
    pub fn build(&self, dim: usize) -> anyhow::Result<Nonlinearity> {
        Ok(match self {
            NonlinearitySpec::Quadratic => Nonlinearity::quadratic(dim),
            NonlinearitySpec::SoftAbs => Nonlinearity::soft_abs(dim),
            NonlinearitySpec::Sine => {
                if dim != 1 {
                    bail!(ConfigError("the sine nonlinearity is one-dimensional".into()));
                }
                Nonlinearity::sine()
            }
            NonlinearitySpec::Custom { expr, lip_grad, lin_growth, global_lip, sublin } => {
                let nl = Nonlinearity::custom(expr, dim, *lip_grad, *lin_growth)?;
                match global_lip {
                    Some(g) => nl.with_global_lip(*g, *sublin),
                    None => nl,
                }
            }
        })
    }
}

/// Picard settings. `rho` defaults to the weight chosen from the contraction
/// bounds for the given data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub n_time_steps: usize,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_iters")]
    pub max_picard_iters: usize,
    #[serde(default = "unit")]
    pub damping: f64,
    #[serde(default = "default_ceiling")]
    pub norm_ceiling: f64,
    #[serde(default)]
    pub contraction_constant: Option<f64>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_iters() -> usize {
    100
}

fn default_ceiling() -> f64 {
    1e8
}

impl SolverSpec {
    pub fn params(&self, alpha: f64, beta: f64, horizon: f64) -> SolverParams {
        SolverParams {
            alpha,
            beta,
            horizon,
            n_time_steps: self.n_time_steps,
            rho: self.rho.unwrap_or(1.0),
            picard_tol: self.picard_tol,
            max_picard_iters: self.max_picard_iters,
            damping: self.damping,
            norm_ceiling: self.norm_ceiling,
            contraction_constant: self.contraction_constant,
        }
    }
}

/// Windowed continuation of the local solution up to the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationSpec {
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
    #[serde(default = "default_windows")]
    pub max_windows: usize,
    /// Also compute the a-priori bound `K` (needs a globally Lipschitz `F`).
    #[serde(default)]
    pub apriori: bool,
}

fn default_windows() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub grid: GridSpec,
    pub horizon: f64,
    pub coefficient: CoefficientSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridSpec,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub nonlinearity: NonlinearitySpec,
    pub coefficient: CoefficientSpec,
    pub initial: FieldSpec,
    pub solver: SolverSpec,
    #[serde(default)]
    pub continuation: Option<ContinuationSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BsdeConfig {
    pub grid: GridSpec,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub nonlinearity: NonlinearitySpec,
    pub coefficient: CoefficientSpec,
    pub terminal: FieldSpec,
    pub solver: SolverSpec,
    /// Start time of the paths; must be a node of the solver's time grid.
    #[serde(default)]
    pub t: f64,
    pub x: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Width of the acceptance band in standard errors.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Deterministic tolerance of the Feynman-Kac check.
    #[serde(default = "default_fk_tol")]
    pub fk_tolerance: f64,
    #[serde(default)]
    pub write_paths: bool,
}

fn default_k() -> f64 {
    4.0
}

fn default_fk_tol() -> f64 {
    1e-8
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    ColeHopf,
    CrankNicolson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub grid: GridSpec,
    pub alpha: f64,
    pub beta: f64,
    pub horizon: f64,
    pub oracle: OracleKind,
    #[serde(default = "quadratic")]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default = "unit_coefficient")]
    pub coefficient: CoefficientSpec,
    pub initial: FieldSpec,
    /// Time-step counts of the refinement study, coarse to fine.
    pub steps: Vec<usize>,
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
}

fn quadratic() -> NonlinearitySpec {
    NonlinearitySpec::Quadratic
}

fn unit_coefficient() -> CoefficientSpec {
    CoefficientSpec::Constant { value: 1.0 }
}

/// Anything whose relative paths must be pinned before running.
pub trait Resolve {
    fn resolve(&mut self, base: &Path);
}

impl Resolve for GenerateConfig {
    fn resolve(&mut self, base: &Path) {
        self.coefficient.resolve(base);
    }
}

impl Resolve for SolveConfig {
    fn resolve(&mut self, base: &Path) {
        self.coefficient.resolve(base);
        self.initial.resolve(base);
    }
}

impl Resolve for BsdeConfig {
    fn resolve(&mut self, base: &Path) {
        self.coefficient.resolve(base);
        self.terminal.resolve(base);
    }
}

impl Resolve for CompareConfig {
    fn resolve(&mut self, base: &Path) {
        self.coefficient.resolve(base);
        self.initial.resolve(base);
    }
}

fn absolute(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Reads `path` as a config for `command`. A run manifest from an earlier
/// run of the same command is accepted too.
pub fn load<T: DeserializeOwned + Resolve>(path: &Path, command: &str) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: invalid JSON: {e}", path.display())))?;
    if let Some(m) = value.as_object().filter(|m| m.contains_key("format") && m.contains_key("config")) {
        if m.get("format").and_then(Value::as_str) != Some(crate::output::MANIFEST_FORMAT) {
            bail!(ConfigError(format!("{}: unsupported manifest format", path.display())));
        }
        let recorded = m.get("command").and_then(Value::as_str).unwrap_or("");
        if recorded != command {
            bail!(ConfigError(format!("{} is a manifest of `{recorded}`, not `{command}`", path.display())));
        }
        value = m["config"].clone();
    }
    let mut config: T =
        serde_json::from_value(value).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = fs::canonicalize(base).unwrap_or_else(|_| base.to_path_buf());
    config.resolve(&base);
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_in() {
        let c: SolveConfig = serde_json::from_str(
            r#"{"grid": {"points": 32}, "alpha": 0.3, "beta": -0.2, "horizon": 0.1,
                "nonlinearity": {"kind": "quadratic"},
                "coefficient": {"kind": "rough", "beta": -0.2, "seed": 3},
                "initial": {"kind": "expression", "expr": "sin(x)"},
                "solver": {"n_time_steps": 16}}"#,
        )
        .unwrap();
        assert_eq!(c.grid.dim, 1);
        assert_eq!(c.solver.max_picard_iters, 100);
        assert_eq!(c.coefficient, CoefficientSpec::Rough { beta: -0.2, seed: 3, n_slices: 8, scale: 1.0 });
        let again: SolveConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<GridSpec, _> = serde_json::from_str(r#"{"points": 32, "pionts": 64}"#);
        assert!(r.is_err());
        let r: Result<FieldSpec, _> = serde_json::from_str(r#"{"kind": "spline"}"#);
        assert!(r.is_err());
    }

    #[test]
    fn relative_paths_follow_the_config() {
        let mut c = CoefficientSpec::Bundle { path: "b".into() };
        c.resolve(Path::new("/data/runs"));
        assert_eq!(c, CoefficientSpec::Bundle { path: "/data/runs/b".into() });
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_stem().unwrap().to_str().unwrap().to_owned();
            match name.split('_').next().unwrap() {
                "generate" => drop(load::<GenerateConfig>(&path, "generate").unwrap()),
                "solve" => drop(load::<SolveConfig>(&path, "solve").unwrap()),
                "bsde" => drop(load::<BsdeConfig>(&path, "bsde").unwrap()),
                "compare" => drop(load::<CompareConfig>(&path, "compare").unwrap()),
                other => panic!("unexpected config {other}"),
            }
            seen += 1;
        }
        assert!(seen >= 4);
    }
}
