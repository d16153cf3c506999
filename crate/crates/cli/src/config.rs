//! JSON experiment configuration.
//!
//! A config file holds either one experiment object or
//! `{"seed": …, "experiments": [ … ]}`. Each experiment object carries an
//! optional `name` plus the fields of its `experiment` kind. Every object
//! rejects unknown keys so that typos surface as errors instead of silently
//! falling back to defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use rrde::grid::GridPath;
use rrde::roughpath::{brownian_driver, RoughPathGrid, DEFAULT_P};
use rrde::solver::VectorField;

use crate::error::CliError;

pub const SEED_ENV: &str = "RRDE_SEED";

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentKind {
    LiftCheck(LiftCheck),
    Skorohod(SkorohodExp),
    Solve(SolveExp),
    ExponentialConvergence(ExponentialExp),
    WongZakai(WongZakaiExp),
    Stability(StabilityExp),
    Gronwall(GronwallExp),
}

/// Every check name an experiment or `verify` can emit.
pub const CHECK_NAMES: &[&str] = &[
    "chen",
    "geometricity",
    "superadditivity",
    "complementarity",
    "domain",
    "skorohod-bound",
    "min-order",
    "final-error",
    "distances-monotone",
    "wong-zakai-contraction",
    "stability-spread",
    "gronwall-implication",
];

impl ExperimentKind {
    pub fn skip_checks(&self) -> &[String] {
        match self {
            Self::LiftCheck(e) => &e.skip_checks,
            Self::Skorohod(e) => &e.skip_checks,
            Self::Solve(e) => &e.skip_checks,
            Self::ExponentialConvergence(e) => &e.skip_checks,
            Self::WongZakai(e) => &e.skip_checks,
            Self::Stability(e) => &e.skip_checks,
            Self::Gronwall(e) => &e.skip_checks,
        }
    }

    pub fn tolerances(&self) -> &Tolerances {
        match self {
            Self::LiftCheck(e) => &e.tolerances,
            Self::Skorohod(e) => &e.tolerances,
            Self::Solve(e) => &e.tolerances,
            Self::ExponentialConvergence(e) => &e.tolerances,
            Self::WongZakai(e) => &e.tolerances,
            Self::Stability(e) => &e.tolerances,
            Self::Gronwall(e) => &e.tolerances,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::LiftCheck(_) => "lift-check",
            Self::Skorohod(_) => "skorohod",
            Self::Solve(_) => "solve",
            Self::ExponentialConvergence(_) => "exponential-convergence",
            Self::WongZakai(_) => "wong-zakai",
            Self::Stability(_) => "stability",
            Self::Gronwall(_) => "gronwall",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftKind {
    #[default]
    PiecewiseLinear,
    ItoStyle,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftCheck {
    pub driver: DriverSpec,
    #[serde(default)]
    pub lift: LiftKind,
    #[serde(default)]
    pub allow_non_geometric: bool,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkorohodExp {
    pub driver: DriverSpec,
    /// Added to the driver before reflecting.
    #[serde(default)]
    pub shift: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveExp {
    pub driver: DriverSpec,
    #[serde(default)]
    pub lift: LiftKind,
    #[serde(default)]
    pub allow_non_geometric: bool,
    pub vf: VfSpec,
    pub a: InitialCondition,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialExp {
    /// Coefficient `c` of `f(y) = c y`.
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub a: f64,
    #[serde(default = "one")]
    pub t_end: f64,
    /// Inclusive range of `log₂ n`.
    #[serde(default = "default_n_levels")]
    pub n_levels: [u32; 2],
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WongZakaiExp {
    pub driver: DriverSpec,
    pub vf: VfSpec,
    pub a: InitialCondition,
    pub levels: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityExp {
    /// Finest driver; coarser grids take every `2^k`-th point.
    pub driver: DriverSpec,
    pub vf: VfSpec,
    pub a: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_stability_levels")]
    pub levels: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GronwallExp {
    pub driver: DriverSpec,
    pub vf: VfSpec,
    /// Two starting points whose solution gap is the Gronwall path.
    pub a: [f64; 2],
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one")]
    pub l: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    /// Multiplier on the driver's homogeneous p-variation control, giving ω₁.
    #[serde(default = "one")]
    pub omega1_scale: f64,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub skip_checks: Vec<String>,
}

/// Per-experiment tolerance overrides.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub chen: f64,
    pub geometricity: f64,
    pub superadditivity: f64,
    pub skorohod_bound: f64,
    pub min_order: f64,
    /// Only checked when set.
    pub max_final_error: Option<f64>,
    pub stability_spread: f64,
    /// Last Wong–Zakai distance must not exceed this multiple of the first.
    pub wong_zakai_contraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chen: 1e-12,
            geometricity: 1e-14,
            superadditivity: rrde::variation::SUPERADDITIVITY_TOL,
            skorohod_bound: rrde::skorohod::SKOROHOD_BOUND,
            min_order: 1.9,
            max_final_error: None,
            stability_spread: 1.2,
            wong_zakai_contraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialCondition {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl InitialCondition {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Self::Scalar(a) => vec![*a],
            Self::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum DriverSpec {
    Builtin(BuiltinDriver),
    File(PathBuf),
    Brownian(BrownianSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinDriver {
    pub name: BuiltinName,
    pub n: usize,
    #[serde(default = "one")]
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinName {
    /// `x_t = t`.
    Identity,
    /// `x_t = 1 - t`.
    OneMinusT,
    /// `x_t = sin(2π t)`.
    Sine,
    /// `x_t = (t, t²)`.
    Parabola,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianSpec {
    pub n: usize,
    #[serde(default = "one_usize")]
    pub dim: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VfSpec {
    Constant { coeffs: Vec<f64> },
    Linear { coeffs: Vec<f64> },
    Bounded { coeffs: Vec<f64> },
    Sine { coeffs: Vec<f64>, shift: Vec<f64> },
    Diagonal { parts: Vec<VfSpec> },
}

fn default_p() -> f64 {
    DEFAULT_P
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_n_levels() -> [u32; 2] {
    [6, 10]
}
fn default_delta() -> f64 {
    1e-3
}
fn default_stability_levels() -> usize {
    3
}

/// A parsed and validated config.
#[derive(Debug, Clone)]
pub struct Config {
    pub experiments: Vec<NamedExperiment>,
    /// Directory that relative driver file paths resolve against.
    pub base_dir: PathBuf,
    /// Output directory from the config, resolved against `base_dir`.
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct NamedExperiment {
    pub name: String,
    pub kind: ExperimentKind,
    /// `RRDE_SEED`, else the top-level `seed`, else 0.
    pub seed: u64,
    /// Whether `RRDE_SEED` was set; it then beats per-driver seeds too.
    pub seed_overridden: bool,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let env_seed = match std::env::var(SEED_ENV) {
            Ok(s) => Some(s.trim().parse::<u64>().map_err(|_| {
                CliError::Config(format!(
                    "{SEED_ENV} must be a non-negative integer, got {s:?}"
                ))
            })?),
            Err(_) => None,
        };
        Self::parse(&text, base_dir, env_seed)
    }

    pub fn parse(text: &str, base_dir: PathBuf, env_seed: Option<u64>) -> Result<Self, CliError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        let (top_seed, out, list) = split_batch(value)?;
        if list.is_empty() {
            return Err(CliError::Config("config lists no experiments".into()));
        }
        let mut experiments = Vec::with_capacity(list.len());
        for (k, item) in list.into_iter().enumerate() {
            let (name, kind) = parse_experiment(item, k)?;
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return Err(CliError::Config(format!(
                    "invalid experiment name {name:?}"
                )));
            }
            validate(&kind).map_err(|m| CliError::Config(format!("experiment {name}: {m}")))?;
            experiments.push(NamedExperiment {
                name,
                kind,
                seed: env_seed.or(top_seed).unwrap_or(0),
                seed_overridden: env_seed.is_some(),
            });
        }
        let mut names: Vec<&str> = experiments.iter().map(|e| e.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!(
                "duplicate experiment name {:?}",
                w[0]
            )));
        }
        let out = out.map(|o| if o.is_absolute() { o } else { base_dir.join(o) });
        Ok(Self {
            experiments,
            base_dir,
            out,
        })
    }
}

type Split = (Option<u64>, Option<PathBuf>, Vec<serde_json::Value>);

/// Separates the top-level `seed` and `out` keys from the experiment list.
/// Without an `experiments` key the remaining object is the one experiment.
fn split_batch(value: serde_json::Value) -> Result<Split, CliError> {
    let serde_json::Value::Object(mut map) = value else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    let seed = match map.remove("seed") {
        None => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| {
            CliError::Config(format!("seed must be a non-negative integer, got {v}"))
        })?),
    };
    let out = match map.remove("out") {
        None => None,
        Some(serde_json::Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            return Err(CliError::Config(format!(
                "out must be a path string, got {v}"
            )))
        }
    };
    let Some(list) = map.remove("experiments") else {
        return Ok((seed, out, vec![serde_json::Value::Object(map)]));
    };
    if let Some(key) = map.keys().next() {
        return Err(CliError::Config(format!(
            "unknown field `{key}`, expected `seed`, `out` or `experiments`"
        )));
    }
    match list {
        serde_json::Value::Array(list) => Ok((seed, out, list)),
        _ => Err(CliError::Config("`experiments` must be an array".into())),
    }
}

fn parse_experiment(
    item: serde_json::Value,
    index: usize,
) -> Result<(String, ExperimentKind), CliError> {
    let serde_json::Value::Object(mut map) = item else {
        return Err(CliError::Config(format!(
            "experiment {index} is not a JSON object"
        )));
    };
    let name = match map.remove("name") {
        None => None,
        Some(serde_json::Value::String(s)) => Some(s),
        Some(v) => {
            return Err(CliError::Config(format!(
                "experiment name must be a string, got {v}"
            )))
        }
    };
    let kind: ExperimentKind = serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| CliError::Config(format!("experiment {index}: {e}")))?;
    let name = name.unwrap_or_else(|| format!("{}-{index}", kind.label()));
    Ok((name, kind))
}

fn check_p(p: f64) -> Result<(), String> {
    if (2.0..3.0).contains(&p) {
        Ok(())
    } else {
        Err(format!("p must lie in [2, 3), got {p}"))
    }
}

fn check_driver(d: &DriverSpec) -> Result<(), String> {
    match d {
        DriverSpec::Builtin(b) if b.n == 0 => Err("builtin driver needs n >= 1".into()),
        DriverSpec::Builtin(b) if !(b.t_end > 0.0 && b.t_end.is_finite()) => {
            Err(format!("t_end must be positive, got {}", b.t_end))
        }
        DriverSpec::Brownian(b) if b.n == 0 || b.dim == 0 => {
            Err("brownian driver needs n >= 1 and dim >= 1".into())
        }
        _ => Ok(()),
    }
}

fn check_start(a: &[f64]) -> Result<(), String> {
    if a.is_empty() {
        return Err("initial condition is empty".into());
    }
    if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(format!(
            "initial condition must lie in the closed orthant, got {a:?}"
        ));
    }
    Ok(())
}

fn validate(kind: &ExperimentKind) -> Result<(), String> {
    if let Some(bad) = kind
        .skip_checks()
        .iter()
        .find(|c| !CHECK_NAMES.contains(&c.as_str()))
    {
        return Err(format!(
            "unknown check {bad:?} in skip_checks, expected one of {CHECK_NAMES:?}"
        ));
    }
    match kind {
        ExperimentKind::LiftCheck(e) => {
            check_p(e.p)?;
            check_driver(&e.driver)
        }
        ExperimentKind::Skorohod(e) => check_driver(&e.driver),
        ExperimentKind::Solve(e) => {
            check_p(e.p)?;
            check_driver(&e.driver)?;
            check_start(&e.a.to_vec())
        }
        ExperimentKind::ExponentialConvergence(e) => {
            let [lo, hi] = e.n_levels;
            if lo > hi || hi > 24 {
                return Err(format!(
                    "n_levels must satisfy lo <= hi <= 24, got [{lo}, {hi}]"
                ));
            }
            if !(e.a > 0.0) || !(e.t_end > 0.0) {
                return Err("exponential-convergence needs a > 0 and t_end > 0".into());
            }
            Ok(())
        }
        ExperimentKind::WongZakai(e) => {
            check_driver(&e.driver)?;
            check_start(&e.a.to_vec())?;
            if e.levels < 2 {
                return Err(format!("levels must be >= 2, got {}", e.levels));
            }
            Ok(())
        }
        ExperimentKind::Stability(e) => {
            check_driver(&e.driver)?;
            check_start(&[e.a, e.a + e.delta])?;
            if e.delta == 0.0 || e.levels < 2 {
                return Err("stability needs delta != 0 and levels >= 2".into());
            }
            Ok(())
        }
        ExperimentKind::Gronwall(e) => {
            check_p(e.p)?;
            check_driver(&e.driver)?;
            check_start(&e.a)?;
            if !(e.omega1_scale >= 0.0) {
                return Err("omega1_scale must be >= 0".into());
            }
            rrde::sewing::gronwall::gronwall_constant(e.c, e.l, e.kappa)
                .map(|_| ())
                .map_err(|err| err.to_string())
        }
    }
}

impl DriverSpec {
    /// Samples or loads the driver path. `seed` is the resolved experiment
    /// seed; an explicit Brownian seed wins unless the environment overrides.
    pub fn build(
        &self,
        base_dir: &Path,
        seed: u64,
        env_override: bool,
    ) -> Result<GridPath, CliError> {
        match self {
            DriverSpec::Builtin(b) => {
                let f: fn(f64) -> Vec<f64> = match b.name {
                    BuiltinName::Identity => |t| vec![t],
                    BuiltinName::OneMinusT => |t| vec![1.0 - t],
                    BuiltinName::Sine => |t| vec![(2.0 * std::f64::consts::PI * t).sin()],
                    BuiltinName::Parabola => |t| vec![t, t * t],
                };
                Ok(GridPath::sample(b.n, b.t_end, f)?)
            }
            DriverSpec::File(p) => {
                let path = if p.is_absolute() {
                    p.clone()
                } else {
                    base_dir.join(p)
                };
                GridPath::load_json(&path)
                    .map_err(|e| CliError::Config(format!("driver file {}: {e}", path.display())))
            }
            DriverSpec::Brownian(b) => {
                let s = if env_override {
                    seed
                } else {
                    b.seed.unwrap_or(seed)
                };
                Ok(brownian_driver(b.n, b.dim, s)?)
            }
        }
    }
}

pub fn lift(path: &GridPath, kind: LiftKind, p: f64) -> Result<RoughPathGrid, CliError> {
    let x = match kind {
        LiftKind::PiecewiseLinear => RoughPathGrid::lift_piecewise_linear(path)?,
        LiftKind::ItoStyle => RoughPathGrid::lift_ito_style(path)?,
    };
    Ok(x.with_p_exponent(p)?)
}

impl VfSpec {
    pub fn build(&self) -> Result<VectorField, CliError> {
        let vf = match self {
            VfSpec::Constant { coeffs } => VectorField::constant(coeffs.clone()),
            VfSpec::Linear { coeffs } => VectorField::linear(coeffs.clone()),
            VfSpec::Bounded { coeffs } => VectorField::bounded(coeffs.clone()),
            VfSpec::Sine { coeffs, shift } => VectorField::sine(coeffs.clone(), shift.clone()),
            VfSpec::Diagonal { parts } => {
                let built = parts
                    .iter()
                    .map(VfSpec::build)
                    .collect::<Result<Vec<_>, _>>()?;
                VectorField::diagonal(built)
            }
        };
        vf.map_err(|e| CliError::Config(format!("vector field: {e}")))
    }
}
