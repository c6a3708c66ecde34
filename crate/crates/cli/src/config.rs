//! Flat `key = value` experiment configuration with named presets.
//!
//! Lines are `key = value`; `#` starts a comment. `include-preset = name`
//! loads a preset first, and keys in the including file override it. Lists
//! are comma separated and numbers may be written as fractions (`9/11`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use bsgni::analysis::NormSpec;
use bsgni::experiments::{Problem, StepRule};
use bsgni::jacobi::WeightExponent;
use bsgni::model::{
    bore_data, nonsmooth_data, params_b_neq_d, params_from_theta, solitary_b_neq_d, solitary_bona_smith, traveling_bbm,
    BoundaryData, ExactSolution, InitialData, IntervalMap, NonsmoothKind, SystemParams,
};
use bsgni::time::SdirkScheme;
use thiserror::Error;

/// Preset name and file contents.
pub const PRESETS: &[(&str, &str)] = &[
    ("table1", include_str!("../presets/table1.cfg")),
    ("table2", include_str!("../presets/table2.cfg")),
    ("table3", include_str!("../presets/table3.cfg")),
    ("table4", include_str!("../presets/table4.cfg")),
    ("table5", include_str!("../presets/table5.cfg")),
    ("table5-bs", include_str!("../presets/table5-bs.cfg")),
    ("table6", include_str!("../presets/table6.cfg")),
    ("bore", include_str!("../presets/bore.cfg")),
    ("bs-solitary", include_str!("../presets/bs-solitary.cfg")),
    ("bbm-traveling", include_str!("../presets/bbm-traveling.cfg")),
    ("bneqd-solitary", include_str!("../presets/bneqd-solitary.cfg")),
    (
        "piecewise-quadratic",
        include_str!("../presets/piecewise-quadratic.cfg"),
    ),
    ("tent", include_str!("../presets/tent.cfg")),
];

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "label",
    "mode",
    "system",
    "theta2",
    "b",
    "c",
    "d",
    "left",
    "right",
    "mu",
    "n",
    "k",
    "k-mesh",
    "gamma",
    "t-end",
    "initial",
    "boundary",
    "boundary-eta",
    "boundary-u",
    "solution",
    "x0",
    "rho",
    "cs",
    "eta0",
    "kappa",
    "norm",
    "norm-mu",
    "norm-m",
    "snapshots",
    "output",
];

const MAX_INCLUDE_DEPTH: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message}")]
    Syntax {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset includes nest deeper than {MAX_INCLUDE_DEPTH}")]
    IncludeDepth,
    #[error("`{key}`: {message}")]
    Field { key: String, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn field(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Resolved key/value pairs after includes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        Self::parse_nested(text, source_name, 0)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        Self::preset_nested(name, 0)
    }

    fn preset_nested(name: &str, depth: usize) -> Result<Self, ConfigError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
        Self::parse_nested(text, &format!("preset {name}"), depth + 1)
    }

    fn parse_nested(text: &str, source_name: &str, depth: usize) -> Result<Self, ConfigError> {
        if depth > MAX_INCLUDE_DEPTH {
            return Err(ConfigError::IncludeDepth);
        }
        let syntax = |line: usize, message: String| ConfigError::Syntax {
            source_name: source_name.to_string(),
            line,
            message,
        };
        let mut includes = Vec::new();
        let mut local = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(index + 1, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "include-preset" {
                includes.push(value.to_string());
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(syntax(index + 1, format!("unknown key `{key}`")));
            }
            if local.insert(key.to_string(), value.to_string()).is_some() {
                return Err(syntax(index + 1, format!("duplicate key `{key}`")));
            }
        }
        let mut merged = Self::default();
        for name in includes {
            merged.values.extend(Self::preset_nested(&name, depth)?.values);
        }
        merged.values.extend(local);
        Ok(merged)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(field(key, "unknown key"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.get(key)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| field(key, "missing"))
    }

    fn number(&self, key: &str) -> Result<f64, ConfigError> {
        parse_number(self.required(key)?).map_err(|m| field(key, m))
    }

    fn number_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            Some(v) if !v.is_empty() => parse_number(v).map_err(|m| field(key, m)),
            _ => Ok(default),
        }
    }

    fn numbers(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => split_list(v)
                .map(parse_number)
                .collect::<Result<_, _>>()
                .map_err(|m| field(key, m)),
        }
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// A decimal number or a fraction `p/q`.
pub fn parse_number(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("`{text}` is not a number"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("`{text}` is not a number"))?;
            if q == 0.0 {
                return Err(format!("`{text}` divides by zero"));
            }
            p / q
        }
        None => text.parse().map_err(|_| format!("`{text}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{text}` is not finite"))
    }
}

pub fn parse_scheme(text: &str) -> Result<SdirkScheme, String> {
    match text {
        "midpoint" | "1/2" | "0.5" => Ok(SdirkScheme::midpoint()),
        "third-order" | "gamma3" | "(3+sqrt3)/6" => Ok(SdirkScheme::third_order()),
        other => parse_number(other)
            .ok()
            .and_then(SdirkScheme::from_gamma)
            .ok_or_else(|| format!("`{other}`: gamma must be 1/2 (midpoint) or (3+sqrt3)/6 (third-order)")),
    }
}

/// `L2`, `H1`, `H2` pairs such as `H2xH1`.
pub fn parse_norm(text: &str) -> Result<NormSpec, String> {
    let order = |s: &str| match s.trim() {
        "L2" | "H0" => Ok(0u8),
        "H1" => Ok(1),
        "H2" => Ok(2),
        other => Err(format!("`{other}` is not one of L2, H1, H2")),
    };
    let (a, b) = text
        .split_once('x')
        .ok_or_else(|| format!("`{text}`: expected a pair such as H2xH1"))?;
    NormSpec::new(order(a)?, order(b)?).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Errors against the exact solution for each time step and scheme.
    Time,
    /// Quotients `E_N` along a doubling chain.
    Space,
    /// One run per `N`.
    Single,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Time => "time",
            Self::Space => "space",
            Self::Single => "single",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepSpec {
    Absolute(Vec<f64>),
    MeshMultiple(f64),
}

/// A validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub label: String,
    pub mode: Mode,
    pub params: SystemParams,
    pub map: IntervalMap,
    pub mu: WeightExponent,
    pub ns: Vec<usize>,
    pub step: StepSpec,
    pub schemes: Vec<SdirkScheme>,
    pub t_end: f64,
    pub initial: InitialData,
    pub boundary: BoundaryData,
    pub exact: Option<ExactSolution>,
    pub norms: Vec<NormSpec>,
    pub snapshots: Vec<f64>,
    pub output: PathBuf,
    pub raw: RawConfig,
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let label = raw
            .get("label")
            .filter(|v| !v.is_empty())
            .unwrap_or("experiment")
            .to_string();
        if label.contains(['/', '\\']) {
            return Err(field("label", "must not contain path separators"));
        }
        let params = system_params(&raw)?;
        let left = raw.number("left")?;
        let right = raw.number("right")?;
        let map = IntervalMap::new(left, right)
            .map_err(|_| field("right", format!("need left < right, got [{left}, {right}]")))?;
        let mu = WeightExponent::new(raw.number_or("mu", 0.0)?).map_err(|e| field("mu", e.to_string()))?;

        let ns = raw
            .numbers("n")?
            .into_iter()
            .map(|v| {
                if v.fract() != 0.0 || v < 2.0 {
                    Err(field("n", format!("{v} is not an integer >= 2")))
                } else {
                    Ok(v as usize)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        if ns.is_empty() {
            return Err(field("n", "missing"));
        }

        let step = match (
            raw.get("k").filter(|v| !v.is_empty()),
            raw.get("k-mesh").filter(|v| !v.is_empty()),
        ) {
            (Some(_), Some(_)) => return Err(field("k", "give either `k` or `k-mesh`, not both")),
            (Some(_), None) => StepSpec::Absolute(raw.numbers("k")?),
            (None, Some(_)) => StepSpec::MeshMultiple(raw.number("k-mesh")?),
            (None, None) => return Err(field("k", "missing (or give `k-mesh`)")),
        };
        match &step {
            StepSpec::Absolute(ks) if ks.iter().any(|&k| k <= 0.0) => return Err(field("k", "steps must be positive")),
            StepSpec::MeshMultiple(f) if *f <= 0.0 => return Err(field("k-mesh", "must be positive")),
            _ => {}
        }

        let schemes = split_list(raw.get("gamma").unwrap_or("third-order"))
            .map(parse_scheme)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| field("gamma", m))?;
        if schemes.is_empty() {
            return Err(field("gamma", "missing"));
        }
        let t_end = raw.number("t-end")?;
        if t_end <= 0.0 {
            return Err(field("t-end", "must be positive"));
        }

        let exact = exact_solution(&raw, &params)?;
        let (initial, boundary) = data(&raw, exact.as_ref())?;
        let norms = split_list(raw.get("norm").unwrap_or("L2xL2"))
            .map(|s| {
                let mut spec = parse_norm(s)?;
                if let Some(v) = raw.get("norm-mu").filter(|v| !v.is_empty()) {
                    spec = spec.with_mu(WeightExponent::new(parse_number(v)?).map_err(|e| e.to_string())?);
                }
                if let Some(v) = raw.get("norm-m").filter(|v| !v.is_empty()) {
                    let m = parse_number(v)?;
                    if m.fract() != 0.0 || m < 2.0 {
                        return Err(format!("evaluation degree {m} is not an integer >= 2"));
                    }
                    spec = spec.with_m(m as usize);
                }
                Ok(spec)
            })
            .collect::<Result<Vec<_>, String>>()
            .map_err(|m| field("norm", m))?;
        if norms.is_empty() {
            return Err(field("norm", "missing"));
        }

        let snapshots = raw.numbers("snapshots")?;
        if let Some(bad) = snapshots.iter().find(|&&s| !(0.0..=t_end).contains(&s)) {
            return Err(field("snapshots", format!("{bad} outside [0, {t_end}]")));
        }
        let output = PathBuf::from(raw.get("output").filter(|v| !v.is_empty()).unwrap_or(&label));

        let mode = match raw.get("mode").unwrap_or("") {
            "time" => Mode::Time,
            "space" => Mode::Space,
            "single" => Mode::Single,
            "" if ns.len() > 1 => Mode::Space,
            "" if matches!(&step, StepSpec::Absolute(ks) if ks.len() > 1) => Mode::Time,
            "" => Mode::Single,
            other => return Err(field("mode", format!("`{other}` is not one of time, space, single"))),
        };
        let config = Self {
            label,
            mode,
            params,
            map,
            mu,
            ns,
            step,
            schemes,
            t_end,
            initial,
            boundary,
            exact,
            norms,
            snapshots,
            output,
            raw,
        };
        config.check_mode()?;
        Ok(config)
    }

    fn check_mode(&self) -> Result<(), ConfigError> {
        match self.mode {
            Mode::Time => {
                if self.exact.is_none() {
                    return Err(field(
                        "solution",
                        "time mode measures errors and needs an exact solution",
                    ));
                }
                if !matches!(&self.step, StepSpec::Absolute(ks) if ks.len() >= 2) {
                    return Err(field("k", "time mode needs at least two absolute steps"));
                }
            }
            Mode::Space => {
                self.check_doubling()?;
                if matches!(&self.step, StepSpec::Absolute(ks) if ks.len() != 1) {
                    return Err(field("k", "space mode takes one step size or `k-mesh`"));
                }
                if self.schemes.len() != 1 {
                    return Err(field("gamma", "space mode takes one scheme"));
                }
            }
            Mode::Single => {
                if matches!(&self.step, StepSpec::Absolute(ks) if ks.is_empty()) {
                    return Err(field("k", "missing"));
                }
            }
        }
        Ok(())
    }

    /// `n` must be a chain `N, 2N, 4N, ...` of length at least three.
    pub fn check_doubling(&self) -> Result<(), ConfigError> {
        bsgni::experiments::validate_doubling(&self.ns).map_err(|e| field("n", e.to_string()))
    }

    pub fn problem(&self) -> Problem {
        Problem {
            params: self.params,
            map: self.map,
            mu: self.mu,
            initial: self.initial.clone(),
            boundary: self.boundary.clone(),
            t_end: self.t_end,
        }
    }

    /// Step rule for a single step value or the mesh multiple.
    pub fn step_rules(&self) -> Vec<StepRule> {
        match &self.step {
            StepSpec::Absolute(ks) => ks.iter().map(|&k| StepRule::Absolute(k)).collect(),
            StepSpec::MeshMultiple(f) => vec![StepRule::MeshMultiple(*f)],
        }
    }
}

fn system_params(raw: &RawConfig) -> Result<SystemParams, ConfigError> {
    match raw.get("system").unwrap_or("bona-smith") {
        "bona-smith" => params_from_theta(raw.number("theta2")?).map_err(|e| field("theta2", e.to_string())),
        "b-neq-d" => params_b_neq_d(raw.number("theta2")?).map_err(|e| field("theta2", e.to_string())),
        "explicit" => SystemParams::new(raw.number("b")?, raw.number("c")?, raw.number("d")?)
            .map_err(|e| field("system", e.to_string())),
        other => Err(field(
            "system",
            format!("`{other}` is not one of bona-smith, b-neq-d, explicit"),
        )),
    }
}

fn exact_solution(raw: &RawConfig, params: &SystemParams) -> Result<Option<ExactSolution>, ConfigError> {
    let x0 = raw.number_or("x0", 0.0)?;
    let sol = match raw.get("solution").unwrap_or("none") {
        "none" | "" => return Ok(None),
        "bs-solitary" => {
            let theta2 = params
                .theta2
                .ok_or_else(|| field("solution", "bs-solitary needs the Bona-Smith system"))?;
            solitary_bona_smith(theta2, x0)
        }
        "bbm-traveling" => traveling_bbm(raw.number("rho")?, raw.number("cs")?, x0),
        "bneqd-solitary" => solitary_b_neq_d(raw.number("eta0")?, x0),
        other => {
            return Err(field(
                "solution",
                format!("`{other}` is not one of none, bs-solitary, bbm-traveling, bneqd-solitary"),
            ))
        }
    }
    .map_err(|e| field("solution", e.to_string()))?;
    let p = sol.params();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    if !(close(p.b, params.b) && close(p.c, params.c) && close(p.d, params.d)) {
        return Err(field(
            "system",
            format!(
                "the {} solution belongs to b = {}, c = {}, d = {}, but the system has b = {}, c = {}, d = {}",
                sol.family().name(),
                p.b,
                p.c,
                p.d,
                params.b,
                params.c,
                params.d
            ),
        ));
    }
    Ok(Some(sol))
}

fn pair(raw: &RawConfig, key: &str) -> Result<[f64; 2], ConfigError> {
    let v = raw.numbers(key)?;
    <[f64; 2]>::try_from(v).map_err(|_| field(key, "expected two values `left, right`"))
}

fn data(raw: &RawConfig, exact: Option<&ExactSolution>) -> Result<(InitialData, BoundaryData), ConfigError> {
    let need_exact = |key: &str| exact.copied().ok_or_else(|| field(key, "`exact` needs a `solution`"));
    let bore = || -> Result<(InitialData, BoundaryData), ConfigError> {
        bore_data(raw.number("eta0")?, raw.number("kappa")?).map_err(|e| field("eta0", e.to_string()))
    };
    let initial = match raw.required("initial")? {
        "exact" => InitialData::Exact(need_exact("initial")?),
        "bore" => bore()?.0,
        "piecewise-quadratic" => nonsmooth_data(NonsmoothKind::PiecewiseQuadratic),
        "tent" => nonsmooth_data(NonsmoothKind::Tent),
        other => {
            return Err(field(
                "initial",
                format!("`{other}` is not one of exact, bore, piecewise-quadratic, tent"),
            ))
        }
    };
    let boundary = match raw.get("boundary").unwrap_or("homogeneous") {
        "homogeneous" => BoundaryData::Homogeneous,
        "exact" => BoundaryData::Exact(need_exact("boundary")?),
        "bore" => bore()?.1,
        "constant" => BoundaryData::Constant {
            eta: pair(raw, "boundary-eta")?,
            u: pair(raw, "boundary-u")?,
        },
        other => {
            return Err(field(
                "boundary",
                format!("`{other}` is not one of homogeneous, exact, bore, constant"),
            ))
        }
    };
    Ok((initial, boundary))
}

/// Loads a config file or preset and applies `key=value` overrides.
pub fn load(source: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = load_raw(source)?;
    apply_overrides(&mut raw, overrides)?;
    ExperimentConfig::from_raw(raw)
}

/// The exact solution named by `solution`, checked against the system.
pub fn exact_from_raw(raw: &RawConfig) -> Result<ExactSolution, ConfigError> {
    let params = system_params(raw)?;
    exact_solution(raw, &params)?.ok_or_else(|| field("solution", "missing"))
}

/// Reads `source` as a file if it exists, otherwise as a preset name.
pub fn load_raw(source: &str) -> Result<RawConfig, ConfigError> {
    let path = Path::new(source);
    if path.exists() {
        RawConfig::from_file(path)
    } else {
        RawConfig::preset(source).map_err(|e| match e {
            ConfigError::UnknownPreset(_) => ConfigError::Io {
                path: source.to_string(),
                message: "no such file or preset".to_string(),
            },
            other => other,
        })
    }
}

/// Applies `key=value` overrides.
pub fn apply_overrides(raw: &mut RawConfig, overrides: &[String]) -> Result<(), ConfigError> {
    for item in overrides {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| field(item, "override must be `key=value`"))?;
        raw.set(k.trim(), v.trim())?;
    }
    Ok(())
}
