//! Scenario files. The grammar is TOML; the accepted keys are listed in
//! `docs/config.md` and mirrored by [`SCHEMA`].

use std::path::{Path, PathBuf};

use kgstab::damping::DampingSpec;
use kgstab::geometry::SamplingPlan;
use kgstab::linalg::{SolveMethod, SolverOptions};
use kgstab::ratefit::WindowSpec;
use kgstab::spectral::TorusGrid;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 7;
pub const WORKERS_ENV: &str = "KGSTAB_WORKERS";

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("unknown key `{path}`{}", .suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { path: String, suggestion: Option<String> },
    #[error("invalid value for `{path}`: {reason}")]
    Invalid { path: String, reason: String },
}

impl ConfigError {
    /// Key path for semantic errors.
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { path, .. } | ConfigError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { path: path.into(), reason: reason.into() }
}

/// Accepted keys per table. `damping` keys are further restricted by kind.
pub const SCHEMA: &[(&str, &[&str])] = &[
    (
        "",
        &[
            "name", "seed", "workers", "output", "s", "grid", "damping", "facts", "analyses", "simulate",
            "resolvent_sweep", "annihilation", "gcc_check", "classify", "solver",
        ],
    ),
    ("grid", &["d", "L", "N"]),
    ("damping", &["kind", "a0", "level", "half_gap", "spacing", "radius", "half_thickness", "base", "values"]),
    (
        "facts",
        &[
            "infer_from_damping", "zero_gcc", "one_gcc", "d_gcc", "finite_measure_sublevel", "periodic_superset",
            "uniformly_continuous", "continuous",
        ],
    ),
    ("simulate", &["T", "n", "method", "dt", "smooth", "window"]),
    ("resolvent_sweep", &["operator", "lambda_max", "points"]),
    ("annihilation", &["epsilon", "mu", "lambdas", "brute_force"]),
    (
        "gcc_check",
        &["epsilon", "r", "ell", "centers", "directions", "offsets", "ball_quadrature", "segment_quadrature"],
    ),
    ("classify", &["extrapolate_to"]),
    ("solver", &["dense_cap", "tol", "max_outer", "max_inner", "method"]),
];

fn damping_keys(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "constant" => &["a0"],
        "interval_gap" => &["half_gap", "level"],
        "lattice_of_balls" => &["spacing", "radius", "level"],
        "grid_lines" => &["spacing", "half_thickness", "level"],
        "finite_measure" => &["radius", "level"],
        "smooth_dip" => &["radius", "base"],
        "samples" => &["values"],
        _ => return None,
    })
}

const DAMPING_KINDS: &[&str] =
    &["constant", "interval_gap", "lattice_of_balls", "grid_lines", "finite_measure", "smooth_dip", "samples"];

fn suggest(key: &str, candidates: &[&str]) -> Option<String> {
    candidates
        .iter()
        .map(|c| (strsim::normalized_damerau_levenshtein(key, c), *c))
        .filter(|(score, _)| *score >= 0.5)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c.to_string())
}

fn join(prefix: &str, key: &str) -> String {
    if prefix.is_empty() {
        key.to_string()
    } else {
        format!("{prefix}.{key}")
    }
}

fn check_keys(table: &toml::Table) -> Result<(), ConfigError> {
    for (name, allowed) in SCHEMA {
        let sub = if name.is_empty() {
            Some(table)
        } else {
            match table.get(*name) {
                Some(toml::Value::Table(t)) => Some(t),
                Some(_) => return Err(invalid(*name, "expected a table")),
                None => None,
            }
        };
        let Some(sub) = sub else { continue };
        for key in sub.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { path: join(name, key), suggestion: suggest(key, allowed) });
            }
        }
    }
    if let Some(toml::Value::Table(d)) = table.get("damping") {
        if let Some(toml::Value::String(kind)) = d.get("kind") {
            let Some(keys) = damping_keys(kind) else {
                return Err(invalid(
                    "damping.kind",
                    format!(
                        "unknown kind `{kind}`{}; expected one of {}",
                        suggest(kind, DAMPING_KINDS).map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default(),
                        DAMPING_KINDS.join(", ")
                    ),
                ));
            };
            for key in d.keys().filter(|k| k.as_str() != "kind") {
                if !keys.contains(&key.as_str()) {
                    return Err(invalid(
                        format!("damping.{key}"),
                        format!("not a parameter of kind `{kind}` (expected {})", keys.join(", ")),
                    ));
                }
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Orders {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampingConfig {
    pub kind: String,
    pub a0: Option<f64>,
    pub level: Option<f64>,
    pub half_gap: Option<f64>,
    pub spacing: Option<f64>,
    pub radius: Option<f64>,
    pub half_thickness: Option<f64>,
    pub base: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactsConfig {
    pub infer_from_damping: bool,
    pub zero_gcc: Option<bool>,
    pub one_gcc: Option<bool>,
    pub d_gcc: Option<bool>,
    pub finite_measure_sublevel: Option<bool>,
    pub periodic_superset: Option<bool>,
    pub uniformly_continuous: Option<bool>,
    pub continuous: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Simulate,
    ResolventSweep,
    Annihilation,
    GccCheck,
    Classify,
}

impl Analysis {
    pub fn name(self) -> &'static str {
        match self {
            Analysis::Simulate => "simulate",
            Analysis::ResolventSweep => "resolvent_sweep",
            Analysis::Annihilation => "annihilation",
            Analysis::GccCheck => "gcc_check",
            Analysis::Classify => "classify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    DenseExpm,
    Strang,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n: usize,
    pub method: MethodName,
    pub dt: f64,
    pub smooth: bool,
    /// `[t_lo, t_hi]` fit window; the tail half when absent.
    pub window: Option<[f64; 2]>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self { horizon: 20.0, n: 201, method: MethodName::DenseExpm, dt: 1e-3, smooth: false, window: None }
    }
}

impl SimulateConfig {
    pub fn window_spec(&self) -> WindowSpec {
        match self.window {
            Some([t_lo, t_hi]) => WindowSpec::Time { t_lo, t_hi },
            None => WindowSpec::TailHalf,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOperator {
    Full,
    Halfwave,
    TwoSided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub operator: SweepOperator,
    pub lambda_max: f64,
    pub points: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { operator: SweepOperator::Full, lambda_max: 10.0, points: 21 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnihilationConfig {
    pub epsilon: f64,
    pub mu: f64,
    pub lambdas: Vec<f64>,
    /// Also compute the sharp sum-form constant by dense minimization.
    pub brute_force: bool,
}

impl Default for AnnihilationConfig {
    fn default() -> Self {
        Self { epsilon: 0.5, mu: 1.0, lambdas: vec![0.0, 1.0, 2.0, 5.0], brute_force: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GccConfig {
    pub epsilon: f64,
    pub r: f64,
    pub ell: f64,
    pub centers: usize,
    pub directions: usize,
    pub offsets: usize,
    pub ball_quadrature: usize,
    pub segment_quadrature: usize,
}

impl Default for GccConfig {
    fn default() -> Self {
        let p = SamplingPlan::default();
        Self {
            epsilon: 0.5,
            r: 1.0,
            ell: 5.0,
            centers: p.centers_per_axis,
            directions: p.directions,
            offsets: p.offsets_per_axis,
            ball_quadrature: p.ball_quadrature,
            segment_quadrature: p.segment_quadrature,
        }
    }
}

impl GccConfig {
    pub fn plan(&self) -> SamplingPlan {
        SamplingPlan {
            centers_per_axis: self.centers,
            directions: self.directions,
            offsets_per_axis: self.offsets,
            ball_quadrature: self.ball_quadrature,
            segment_quadrature: self.segment_quadrature,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub extrapolate_to: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dense_cap: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub method: SolverChoice,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { dense_cap: o.dense_cap, tol: o.tol, max_outer: o.max_outer, max_inner: o.max_inner, method: SolverChoice::Auto }
    }
}

/// The document as written, after key and type checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub name: String,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub s: Orders,
    pub grid: GridConfig,
    pub damping: DampingConfig,
    #[serde(default)]
    pub facts: FactsConfig,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub resolvent_sweep: SweepConfig,
    #[serde(default)]
    pub annihilation: AnnihilationConfig,
    #[serde(default)]
    pub gcc_check: GccConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub raw: RawScenario,
    pub seed: u64,
    pub output: PathBuf,
    pub orders: Vec<f64>,
    pub grid: TorusGrid<f64>,
    pub damping: DampingSpec<f64>,
    pub analyses: Vec<Analysis>,
    pub solver: SolverOptions,
}

impl Scenario {
    pub fn runs(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    /// Worker count: the environment override, then the config, then rayon's default.
    pub fn workers(&self) -> Result<Option<usize>, ConfigError> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(Some(n)),
                _ => Err(invalid(WORKERS_ENV, format!("expected a positive integer, got `{v}`"))),
            },
            Err(_) => Ok(self.raw.workers),
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |i| before[i + 1..].chars().count()) + 1;
    (line, column)
}

fn syntax(text: &str, err: toml::de::Error) -> ConfigError {
    let (line, column) = err.span().map_or((1, 1), |s| line_col(text, s.start));
    ConfigError::Syntax { line, column, message: err.message().trim().to_string() }
}

pub fn parse_config(path: &Path) -> Result<Scenario, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
    let text = String::from_utf8(bytes)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: format!("not UTF-8: {e}") })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<Scenario, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| syntax(text, e))?;
    check_keys(&table)?;
    let raw: RawScenario = toml::from_str(text).map_err(|e| syntax(text, e))?;
    validate(raw)
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be positive and finite, got {x}")))
    }
}

fn nonnegative(path: &str, x: f64) -> Result<(), ConfigError> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, format!("must be nonnegative and finite, got {x}")))
    }
}

fn at_least(path: &str, x: usize, min: usize) -> Result<(), ConfigError> {
    if x >= min {
        Ok(())
    } else {
        Err(invalid(path, format!("must be at least {min}, got {x}")))
    }
}

fn core_error(section: &str, e: kgstab::Error) -> ConfigError {
    match e {
        kgstab::Error::InvalidParameter { name, reason } => invalid(format!("{section}.{name}"), reason),
        other => invalid(section, other.to_string()),
    }
}

fn build_damping(c: &DampingConfig, grid: &TorusGrid<f64>) -> Result<DampingSpec<f64>, ConfigError> {
    let need = |key: &str, v: Option<f64>| v.ok_or_else(|| invalid(format!("damping.{key}"), "required by this kind"));
    let (d, l) = (grid.dim(), grid.length());
    let two_d = |kind: &str| {
        if d == 2 {
            Ok(())
        } else {
            Err(invalid("damping.kind", format!("`{kind}` requires grid.d = 2")))
        }
    };
    let spec = match c.kind.as_str() {
        "constant" => DampingSpec::constant(d, l, need("a0", c.a0)?),
        "interval_gap" => {
            if d != 1 {
                return Err(invalid("damping.kind", "`interval_gap` requires grid.d = 1"));
            }
            DampingSpec::interval_gap(l, need("half_gap", c.half_gap)?, need("level", c.level)?)
        }
        "lattice_of_balls" => {
            two_d("lattice_of_balls")?;
            DampingSpec::lattice_of_balls(l, need("spacing", c.spacing)?, need("radius", c.radius)?, need("level", c.level)?)
        }
        "grid_lines" => {
            two_d("grid_lines")?;
            DampingSpec::grid_lines(
                l,
                need("spacing", c.spacing)?,
                need("half_thickness", c.half_thickness)?,
                need("level", c.level)?,
            )
        }
        "finite_measure" => DampingSpec::finite_measure(d, l, need("radius", c.radius)?, need("level", c.level)?),
        "smooth_dip" => DampingSpec::smooth_dip(d, l, need("radius", c.radius)?, need("base", c.base)?),
        "samples" => {
            let values = c.values.clone().ok_or_else(|| invalid("damping.values", "required by this kind"))?;
            DampingSpec::from_samples(grid, values)
        }
        other => return Err(invalid("damping.kind", format!("unknown kind `{other}`"))),
    };
    spec.map_err(|e| core_error("damping", e))
}

pub fn validate(raw: RawScenario) -> Result<Scenario, ConfigError> {
    if raw.name.trim().is_empty() {
        return Err(invalid("name", "must not be empty"));
    }
    let orders = match &raw.s {
        Orders::One(s) => {
            positive("s", *s)?;
            vec![*s]
        }
        Orders::Many(v) => {
            if v.is_empty() {
                return Err(invalid("s", "list of orders must not be empty"));
            }
            for (i, s) in v.iter().enumerate() {
                positive(&format!("s[{i}]"), *s)?;
            }
            v.clone()
        }
    };
    if !(raw.grid.d == 1 || raw.grid.d == 2) {
        return Err(invalid("grid.d", format!("must be 1 or 2, got {}", raw.grid.d)));
    }
    positive("grid.L", raw.grid.length)?;
    let grid = TorusGrid::new(raw.grid.d, raw.grid.length, raw.grid.n).map_err(|e| match e {
        kgstab::Error::InvalidParameter { reason, .. } => invalid("grid.N", reason),
        other => invalid("grid", other.to_string()),
    })?;
    let damping = build_damping(&raw.damping, &grid)?;
    if let Some(w) = raw.workers {
        at_least("workers", w, 1)?;
    }
    if raw.analyses.is_empty() {
        return Err(invalid("analyses", "at least one analysis is required"));
    }
    let mut analyses = raw.analyses.clone();
    analyses.sort();
    if analyses.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("analyses", "duplicate entry"));
    }

    let sim = &raw.simulate;
    positive("simulate.T", sim.horizon)?;
    at_least("simulate.n", sim.n, 2)?;
    positive("simulate.dt", sim.dt)?;
    if let Some([a, b]) = sim.window {
        nonnegative("simulate.window", a)?;
        if !(b > a) {
            return Err(invalid("simulate.window", format!("need t_lo < t_hi, got [{a}, {b}]")));
        }
    }
    let sw = &raw.resolvent_sweep;
    positive("resolvent_sweep.lambda_max", sw.lambda_max)?;
    at_least("resolvent_sweep.points", sw.points, 2)?;
    let an = &raw.annihilation;
    positive("annihilation.epsilon", an.epsilon)?;
    positive("annihilation.mu", an.mu)?;
    if an.lambdas.is_empty() {
        return Err(invalid("annihilation.lambdas", "must not be empty"));
    }
    for (i, l) in an.lambdas.iter().enumerate() {
        if !l.is_finite() {
            return Err(invalid(format!("annihilation.lambdas[{i}]"), "must be finite"));
        }
    }
    let g = &raw.gcc_check;
    positive("gcc_check.epsilon", g.epsilon)?;
    positive("gcc_check.r", g.r)?;
    if g.r > grid.length() / 2.0 {
        return Err(invalid("gcc_check.r", format!("must not exceed half the box, {}", grid.length() / 2.0)));
    }
    positive("gcc_check.ell", g.ell)?;
    for (key, v) in [
        ("centers", g.centers),
        ("directions", g.directions),
        ("offsets", g.offsets),
        ("ball_quadrature", g.ball_quadrature),
        ("segment_quadrature", g.segment_quadrature),
    ] {
        at_least(&format!("gcc_check.{key}"), v, 1)?;
    }
    for (i, s) in raw.classify.extrapolate_to.iter().enumerate() {
        positive(&format!("classify.extrapolate_to[{i}]"), *s)?;
    }
    let so = &raw.solver;
    at_least("solver.dense_cap", so.dense_cap, 1)?;
    positive("solver.tol", so.tol)?;
    at_least("solver.max_outer", so.max_outer, 1)?;
    at_least("solver.max_inner", so.max_inner, 1)?;

    let seed = raw.seed.unwrap_or(DEFAULT_SEED);
    let solver = SolverOptions {
        dense_cap: so.dense_cap,
        tol: so.tol,
        max_outer: so.max_outer,
        max_inner: so.max_inner,
        force: match so.method {
            SolverChoice::Auto => None,
            SolverChoice::Dense => Some(SolveMethod::DenseSvd),
            SolverChoice::Iterative => Some(SolveMethod::Iterative),
        },
        seed,
    };
    let output = raw.output.clone().unwrap_or_else(|| PathBuf::from("kgstab-out").join(&raw.name));
    Ok(Scenario { seed, output, orders, grid, damping, analyses, solver, raw })
}
