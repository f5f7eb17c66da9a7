//! Flat `key = value` run configuration.
//!
//! Lines are `section.key = value`; `#` starts a comment. Unknown keys,
//! duplicate keys and unparsable values are errors that name the line and
//! the key. The same format is used for the config echo in the manifest,
//! where the extra `result.*` keys are ignored on reparse.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use etpl_core::analysis::{Field, InitialState, Scenario, SweepAxis};
use etpl_core::dynamics::Method;
use etpl_core::{Complex64, FockDim, IntegratorConfig, ModelParams};
use thiserror::Error;

pub const DEFAULT_FOCK_DIM: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigError {
    /// 1-based line of the offending entry; `None` for defaults and
    /// command-line overrides.
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "line {n}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

/// Square Wigner grid over `[min, max]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min: -5.0,
            max: 5.0,
            points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub field: Field,
    pub thresholds: Vec<f64>,
    pub prominence_db: f64,
    /// 0 uses every available core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub integrator: IntegratorConfig,
    pub fock_dim: usize,
    pub output_dir: PathBuf,
    pub wigner_times: Vec<f64>,
    pub grid: GridSpec,
    pub sweep: Option<SweepSpec>,
}

const KEYS: &[&str] = &[
    "scenario.kind",
    "scenario.epsilon",
    "scenario.kerr",
    "scenario.kappa",
    "scenario.kappa2",
    "scenario.initial_state",
    "integrator.t_max",
    "integrator.n_outputs",
    "integrator.rel_tol",
    "integrator.abs_tol",
    "integrator.max_step",
    "integrator.method",
    "fock_dim",
    "output.dir",
    "output.wigner_times",
    "output.grid_min",
    "output.grid_max",
    "output.grid_points",
    "sweep.axis",
    "sweep.values",
    "sweep.field",
    "sweep.thresholds",
    "sweep.prominence_db",
    "sweep.workers",
];

/// Prefix of manifest keys that are not part of the config.
pub const RESULT_PREFIX: &str = "result.";

struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|e| e.0)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            line: self.line(key),
            field: key.to_string(),
            message: message.into(),
        }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.map.get(key) {
            None => Ok(default),
            Some((_, raw)) => raw
                .parse()
                .map_err(|e: T::Err| self.error(key, format!("cannot parse '{raw}': {e}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some((_, raw)) => parse_list(raw).map_err(|e| self.error(key, e)),
        }
    }
}

fn parse_list(raw: &str) -> Result<Vec<f64>, String> {
    if raw.trim().is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .map_err(|e| format!("cannot parse list item '{s}': {e}"))
        })
        .collect()
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "dormand_prince" => Ok(Method::DormandPrince),
        "rk4" => Ok(Method::Rk4),
        other => Err(format!("unknown method '{other}' (expected dormand_prince or rk4)")),
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::DormandPrince => "dormand_prince",
        Method::Rk4 => "rk4",
    }
}

/// `vacuum`, `fock:N`, `coherent:RE,IM` or `cat:RE,IM,PARITY`.
pub fn parse_initial_state(s: &str) -> Result<InitialState, String> {
    let (head, rest) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>, String> { parse_list(rest) };
    match head.trim() {
        "vacuum" if rest.is_empty() => Ok(InitialState::Vacuum),
        "fock" => rest
            .trim()
            .parse()
            .map(InitialState::Fock)
            .map_err(|e| format!("bad Fock index '{rest}': {e}")),
        "coherent" => match nums()?.as_slice() {
            [re, im] => Ok(InitialState::Coherent(Complex64::new(*re, *im))),
            _ => Err("coherent needs RE,IM".into()),
        },
        "cat" => match nums()?.as_slice() {
            [re, im, p] if *p == 1.0 || *p == -1.0 => Ok(InitialState::Cat {
                alpha: Complex64::new(*re, *im),
                parity: *p as i32,
            }),
            _ => Err("cat needs RE,IM,PARITY with PARITY = 1 or -1".into()),
        },
        _ => Err(format!(
            "unknown initial state '{s}' (expected vacuum, fock:N, coherent:RE,IM or cat:RE,IM,PARITY)"
        )),
    }
}

pub fn format_initial_state(s: &InitialState) -> String {
    match *s {
        InitialState::Vacuum => "vacuum".into(),
        InitialState::Fock(n) => format!("fock:{n}"),
        InitialState::Coherent(a) => format!("coherent:{},{}", a.re, a.im),
        InitialState::Cat { alpha, parity } => format!("cat:{},{},{parity}", alpha.re, alpha.im),
    }
}

fn format_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses a config file. `result.*` keys are rejected here and accepted
    /// only by [`RunConfig::parse_manifest`].
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_inner(text, false)
    }

    /// Reparses the config echo of a manifest.
    pub fn parse_manifest(text: &str) -> Result<Self, ConfigError> {
        Self::parse_inner(text, true)
    }

    fn parse_inner(text: &str, allow_results: bool) -> Result<Self, ConfigError> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError {
                    line: Some(line),
                    field: content.to_string(),
                    message: "expected key = value".into(),
                });
            };
            let key = key.trim();
            if allow_results && key.starts_with(RESULT_PREFIX) {
                continue;
            }
            if !KEYS.contains(&key) {
                return Err(ConfigError {
                    line: Some(line),
                    field: key.to_string(),
                    message: "unknown key".into(),
                });
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.trim().to_string())) {
                return Err(ConfigError {
                    line: Some(line),
                    field: key.to_string(),
                    message: format!("duplicate key, first set on line {first}"),
                });
            }
        }
        Self::from_entries(&Entries { map })
    }

    fn from_entries(e: &Entries) -> Result<Self, ConfigError> {
        let kind_raw = e
            .map
            .get("scenario.kind")
            .ok_or_else(|| e.error("scenario.kind", "required"))?;
        let kind = kind_raw.1.parse().map_err(|m: String| e.error("scenario.kind", m))?;
        let epsilon = e.get("scenario.epsilon", 1.0)?;
        let kerr = e.get("scenario.kerr", 0.0)?;
        let kappa = e.get("scenario.kappa", 0.01)?;
        let kappa2 = e.get("scenario.kappa2", 0.0)?;
        let initial = match e.map.get("scenario.initial_state") {
            None => InitialState::Vacuum,
            Some((_, raw)) => parse_initial_state(raw).map_err(|m| e.error("scenario.initial_state", m))?,
        };
        let params = ModelParams::new(epsilon, kerr, kappa, kappa2).map_err(|err| {
            let key = ["scenario.epsilon", "scenario.kerr", "scenario.kappa", "scenario.kappa2"]
                .into_iter()
                .find(|k| e.line(k).is_some())
                .unwrap_or("scenario.epsilon");
            e.error(key, err.to_string())
        })?;
        let scenario = Scenario::new(kind, params, initial).map_err(|err| e.error("scenario.kind", err.to_string()))?;

        let defaults = IntegratorConfig::default();
        let integrator = IntegratorConfig {
            t_max: e.get("integrator.t_max", defaults.t_max)?,
            n_outputs: e.get("integrator.n_outputs", defaults.n_outputs)?,
            rel_tol: e.get("integrator.rel_tol", defaults.rel_tol)?,
            abs_tol: e.get("integrator.abs_tol", defaults.abs_tol)?,
            max_step: e.get("integrator.max_step", defaults.max_step)?,
            method: match e.map.get("integrator.method") {
                None => defaults.method,
                Some((_, raw)) => parse_method(raw).map_err(|m| e.error("integrator.method", m))?,
            },
        };

        let grid_defaults = GridSpec::default();
        let sweep = if e.line("sweep.axis").is_some() || e.line("sweep.values").is_some() {
            let axis_raw = e
                .map
                .get("sweep.axis")
                .ok_or_else(|| e.error("sweep.axis", "required when sweep.values is set"))?;
            Some(SweepSpec {
                axis: axis_raw.1.parse().map_err(|m: String| e.error("sweep.axis", m))?,
                values: e.list("sweep.values", &[])?,
                field: match e.map.get("sweep.field") {
                    None => Field::GqDb,
                    Some((_, raw)) => raw.parse().map_err(|m: String| e.error("sweep.field", m))?,
                },
                thresholds: e.list("sweep.thresholds", &[5.0])?,
                prominence_db: e.get("sweep.prominence_db", etpl_core::analysis::DEFAULT_PROMINENCE_DB)?,
                workers: e.get("sweep.workers", 0)?,
            })
        } else {
            for key in ["sweep.field", "sweep.thresholds", "sweep.prominence_db", "sweep.workers"] {
                if e.line(key).is_some() {
                    return Err(e.error(key, "set without sweep.axis"));
                }
            }
            None
        };

        let cfg = RunConfig {
            scenario,
            integrator,
            fock_dim: e.get("fock_dim", DEFAULT_FOCK_DIM)?,
            output_dir: PathBuf::from(e.get::<String>("output.dir", "out".into())?),
            wigner_times: e.list("output.wigner_times", &[])?,
            grid: GridSpec {
                min: e.get("output.grid_min", grid_defaults.min)?,
                max: e.get("output.grid_max", grid_defaults.max)?,
                points: e.get("output.grid_points", grid_defaults.points)?,
            },
            sweep,
        };
        cfg.validate_with(|key| e.line(key))?;
        Ok(cfg)
    }

    /// Checks cross-field constraints; used again after command-line
    /// overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with(|_| None)
    }

    fn validate_with(&self, line: impl Fn(&str) -> Option<usize>) -> Result<(), ConfigError> {
        let err = |key: &str, message: String| ConfigError {
            line: line(key),
            field: key.to_string(),
            message,
        };
        if let Err(e) = self.integrator.validate() {
            let key = ["t_max", "n_outputs", "rel_tol", "abs_tol", "max_step"]
                .into_iter()
                .find(|k| e.to_string().contains(k))
                .map_or("integrator.t_max".to_string(), |k| format!("integrator.{k}"));
            return Err(err(&key, e.to_string()));
        }
        let dim = FockDim::new(self.fock_dim).map_err(|e| err("fock_dim", e.to_string()))?;
        self.scenario
            .initial()
            .build(dim)
            .map_err(|e| err("scenario.initial_state", e.to_string()))?;
        if let Some(t) = self
            .wigner_times
            .iter()
            .find(|&&t| !(t >= 0.0 && t <= self.integrator.t_max))
        {
            return Err(err(
                "output.wigner_times",
                format!("snapshot time {t} outside [0, {}]", self.integrator.t_max),
            ));
        }
        let g = self.grid;
        if !(g.min.is_finite() && g.max.is_finite() && g.min < g.max) || g.points < 2 {
            return Err(err(
                "output.grid_points",
                format!("grid needs min < max and at least 2 points, got [{}, {}] x {}", g.min, g.max, g.points),
            ));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(err("sweep.values", "no values given".into()));
            }
            if let Some(v) = s.values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(err("sweep.values", format!("values must be finite and nonnegative, got {v}")));
            }
            if s.thresholds.is_empty() || s.thresholds.iter().any(|t| !t.is_finite()) {
                return Err(err("sweep.thresholds", "need at least one finite threshold".into()));
            }
            if !(s.prominence_db.is_finite() && s.prominence_db >= 0.0) {
                return Err(err("sweep.prominence_db", format!("must be nonnegative, got {}", s.prominence_db)));
            }
            for &v in &s.values {
                self.scenario
                    .with_axis(s.axis, v)
                    .map_err(|e| err("sweep.values", format!("value {v}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> FockDim {
        FockDim::new(self.fock_dim).expect("validated fock_dim")
    }

    /// Renders the config in its own input format; [`RunConfig::parse`]
    /// reproduces an equal value.
    pub fn to_text(&self) -> String {
        let p = self.scenario.params();
        let i = &self.integrator;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("scenario.kind", self.scenario.kind().to_string());
        put("scenario.epsilon", p.epsilon.to_string());
        put("scenario.kerr", p.kerr.to_string());
        put("scenario.kappa", p.kappa.to_string());
        put("scenario.kappa2", p.kappa2.to_string());
        put("scenario.initial_state", format_initial_state(self.scenario.initial()));
        put("integrator.t_max", i.t_max.to_string());
        put("integrator.n_outputs", i.n_outputs.to_string());
        put("integrator.rel_tol", i.rel_tol.to_string());
        put("integrator.abs_tol", i.abs_tol.to_string());
        put("integrator.max_step", i.max_step.to_string());
        put("integrator.method", method_name(i.method).into());
        put("fock_dim", self.fock_dim.to_string());
        put("output.dir", self.output_dir.display().to_string());
        put("output.wigner_times", format_list(&self.wigner_times));
        put("output.grid_min", self.grid.min.to_string());
        put("output.grid_max", self.grid.max.to_string());
        put("output.grid_points", self.grid.points.to_string());
        if let Some(s) = &self.sweep {
            put("sweep.axis", s.axis.to_string());
            put("sweep.values", format_list(&s.values));
            put("sweep.field", s.field.name().into());
            put("sweep.thresholds", format_list(&s.thresholds));
            put("sweep.prominence_db", s.prominence_db.to_string());
            put("sweep.workers", s.workers.to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse("scenario.kind = tpd_kerr\nscenario.kerr = 0.25\n").unwrap();
        assert_eq!(cfg.fock_dim, DEFAULT_FOCK_DIM);
        assert_eq!(cfg.scenario.params().kappa, 0.01);
        assert_eq!(cfg.integrator, IntegratorConfig::default());
        assert!(cfg.sweep.is_none());
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = RunConfig::parse("# comment\nscenario.kind = hybrid\nscenario.bogus = 1\n").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert_eq!(e.field, "scenario.bogus");

        let e = RunConfig::parse("scenario.kind = hybrid\nintegrator.t_max = 0\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert_eq!(e.field, "integrator.t_max");

        let e = RunConfig::parse("scenario.kind = hybrid\nscenario.kerr = x\n").unwrap_err();
        assert_eq!(e.field, "scenario.kerr");

        let e = RunConfig::parse("scenario.kind = tpd_kerr\nscenario.kappa2 = 0.5\n").unwrap_err();
        assert_eq!(e.field, "scenario.kind");
    }

    #[test]
    fn initial_states_round_trip() {
        for s in ["vacuum", "fock:3", "coherent:1.5,-0.25", "cat:2,0,-1"] {
            let parsed = parse_initial_state(s).unwrap();
            assert_eq!(format_initial_state(&parsed), s);
        }
        assert!(parse_initial_state("cat:2,0,0").is_err());
        assert!(parse_initial_state("squeezed").is_err());
    }
}
