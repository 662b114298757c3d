//! Run configuration: a flat `key = value` file with dotted section names.
//!
//! ```text
//! # comments start with '#'
//! command = converge
//! domain.shape = unit_disk
//! kernel.family = C4
//! kernel.delta_rule = fixed(0.7)
//! problem.name = MA2
//! discretization.base_h = 0.3
//! discretization.levels = 3
//! solver.tol = absolute(1e-8)
//! output.dir = out
//! ```
//!
//! Inline problems replace `problem.name` with `problem.f`, `problem.g`
//! and optionally `problem.exact`, written in the grammar of
//! [`crate::expr`].

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use mameshfree_core::analysis::{DeltaRule, StudyConfig};
use mameshfree_core::{Domain, KernelFamily, Manufactured, SolverConfig, Tolerance};
use thiserror::Error;

use crate::expr::FieldExpr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config not found: {0}")]
    NotFound(String),
    #[error("cannot read config: {0}")]
    Unreadable(String),
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("key `{key}` given twice (line {line})")]
    Duplicate { key: String, line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("key `{key}`: {message}")]
    Invalid { key: String, message: String },
}

impl ConfigError {
    fn invalid(key: &str, message: impl fmt::Display) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Converge,
    Interp,
    Diagnose,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Converge => "converge",
            Command::Interp => "interp",
            Command::Diagnose => "diagnose",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "solve" => Command::Solve,
            "converge" => Command::Converge,
            "interp" => Command::Interp,
            "diagnose" => Command::Diagnose,
            _ => {
                return Err(format!(
                    "unknown command {s:?} (expected solve, converge, interp or diagnose)"
                ))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Catalog(Manufactured),
    Inline {
        f: FieldExpr,
        g: FieldExpr,
        exact: Option<FieldExpr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub domain: Domain,
    pub problem: ProblemSpec,
    pub study: StudyConfig,
    pub solver: SolverConfig,
    /// Random coefficient vectors per level in the inverse-inequality probe.
    pub probe_trials: usize,
    pub output: PathBuf,
}

const KEYS: &[&str] = &[
    "command",
    "domain.shape",
    "domain.a",
    "domain.b",
    "kernel.family",
    "kernel.delta_rule",
    "problem.name",
    "problem.f",
    "problem.g",
    "problem.exact",
    "discretization.base_h",
    "discretization.levels",
    "discretization.test_refinement",
    "discretization.seed",
    "discretization.probe_resolution",
    "discretization.error_resolution",
    "solver.max_iters",
    "solver.tol",
    "solver.norm_u",
    "solver.lm_lambda0",
    "solver.lm_growth",
    "solver.step_tol",
    "solver.boundary_weight",
    "analysis.oversampling_constant",
    "analysis.probe_trials",
    "output.dir",
];

struct Entries(BTreeMap<String, String>);

impl Entries {
    fn take(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn parse_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| ConfigError::invalid(key, e)),
        }
    }

    fn positive_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v: f64 = self.parse_or(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(ConfigError::invalid(
                key,
                format!("must be positive, got {v}"),
            ));
        }
        Ok(v)
    }

    fn expr(&mut self, key: &str) -> Result<Option<FieldExpr>, ConfigError> {
        self.take(key)
            .map(|v| FieldExpr::parse(&v).map_err(|e| ConfigError::invalid(key, e)))
            .transpose()
    }
}

/// `name(arg, ...)` with numeric arguments.
fn call_syntax(text: &str) -> Option<(&str, Vec<f64>)> {
    let (name, rest) = text.split_once('(')?;
    let args = rest.strip_suffix(')')?;
    let values = args
        .split(',')
        .map(|a| a.trim().parse().ok())
        .collect::<Option<Vec<f64>>>()?;
    Some((name.trim(), values))
}

fn parse_delta_rule(key: &str, text: &str) -> Result<DeltaRule, ConfigError> {
    let rule = match call_syntax(text) {
        Some(("fixed", v)) if v.len() == 1 => DeltaRule::Fixed(v[0]),
        Some(("proportional", v)) if v.len() == 1 => DeltaRule::Proportional(v[0]),
        _ => {
            return Err(ConfigError::invalid(
                key,
                format!("expected fixed(δ) or proportional(c), got {text:?}"),
            ))
        }
    };
    let ok = match rule {
        DeltaRule::Fixed(d) => d > 0.0 && d <= 1.0,
        DeltaRule::Proportional(c) => c > 0.0 && c.is_finite(),
    };
    if !ok {
        return Err(ConfigError::invalid(key, format!("out of range: {text:?}")));
    }
    Ok(rule)
}

fn parse_tolerance(key: &str, text: &str, norm_u: f64) -> Result<Tolerance, ConfigError> {
    let tol = match call_syntax(text) {
        Some(("absolute", v)) if v.len() == 1 => Tolerance::Absolute(v[0]),
        Some(("theory", v)) if v.len() == 1 => Tolerance::Theory {
            constant: v[0],
            norm_u,
        },
        None => match text.parse() {
            Ok(t) => Tolerance::Absolute(t),
            Err(_) => {
                return Err(ConfigError::invalid(
                    key,
                    format!("expected absolute(tol) or theory(C), got {text:?}"),
                ))
            }
        },
        _ => {
            return Err(ConfigError::invalid(
                key,
                format!("expected absolute(tol) or theory(C), got {text:?}"),
            ))
        }
    };
    Ok(tol)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if !KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError::Duplicate {
                    key: k.to_string(),
                    line: i + 1,
                });
            }
        }
        let mut e = Entries(map);

        let command: Command = e
            .take("command")
            .ok_or_else(|| ConfigError::Missing("command".into()))?
            .parse()
            .map_err(|m| ConfigError::invalid("command", m))?;

        let shape = e.take("domain.shape").unwrap_or_else(|| "unit_disk".into());
        let domain = match shape.as_str() {
            "unit_disk" | "unit_square" => {
                for k in ["domain.a", "domain.b"] {
                    if e.take(k).is_some() {
                        return Err(ConfigError::invalid(
                            k,
                            format!("only used with domain.shape = ellipse, not {shape}"),
                        ));
                    }
                }
                if shape == "unit_disk" {
                    Domain::UnitDisk
                } else {
                    Domain::UnitSquare
                }
            }
            "ellipse" => {
                let a: f64 = e.parse_or("domain.a", 1.0)?;
                let b: f64 = e.parse_or("domain.b", 1.0)?;
                Domain::ellipse(a, b).map_err(|err| ConfigError::invalid("domain.a", err))?
            }
            other => {
                return Err(ConfigError::invalid(
                    "domain.shape",
                    format!("unknown shape {other:?} (expected unit_disk, unit_square or ellipse)"),
                ))
            }
        };

        let problem = match e.take("problem.name") {
            Some(name) => {
                for k in ["problem.f", "problem.g", "problem.exact"] {
                    if e.take(k).is_some() {
                        return Err(ConfigError::invalid(
                            k,
                            "cannot be combined with problem.name",
                        ));
                    }
                }
                ProblemSpec::Catalog(
                    name.parse()
                        .map_err(|err| ConfigError::invalid("problem.name", err))?,
                )
            }
            None => {
                let f = e
                    .expr("problem.f")?
                    .ok_or_else(|| ConfigError::Missing("problem.name or problem.f".into()))?;
                let g = e
                    .expr("problem.g")?
                    .ok_or_else(|| ConfigError::Missing("problem.g".into()))?;
                ProblemSpec::Inline {
                    f,
                    g,
                    exact: e.expr("problem.exact")?,
                }
            }
        };

        let defaults = StudyConfig::default();
        let family: KernelFamily = e.parse_or("kernel.family", defaults.family)?;
        let delta_rule = match e.take("kernel.delta_rule") {
            Some(v) => parse_delta_rule("kernel.delta_rule", &v)?,
            None => defaults.delta_rule,
        };
        let base_h = e.positive_or("discretization.base_h", defaults.base_h)?;
        if base_h >= 1.0 {
            return Err(ConfigError::invalid(
                "discretization.base_h",
                format!("must be below 1, got {base_h}"),
            ));
        }
        let levels: usize = e.parse_or("discretization.levels", defaults.levels)?;
        if levels == 0 {
            return Err(ConfigError::invalid(
                "discretization.levels",
                "must be at least 1",
            ));
        }
        let study = StudyConfig {
            family,
            base_h,
            levels,
            delta_rule,
            test_refinement: e
                .positive_or("discretization.test_refinement", defaults.test_refinement)?,
            probe_resolution: e
                .parse_or("discretization.probe_resolution", defaults.probe_resolution)?,
            error_resolution: e
                .parse_or("discretization.error_resolution", defaults.error_resolution)?,
            oversampling_constant: e.positive_or(
                "analysis.oversampling_constant",
                defaults.oversampling_constant,
            )?,
            seed: e.parse_or("discretization.seed", defaults.seed)?,
        };
        for (key, v) in [
            ("discretization.probe_resolution", study.probe_resolution),
            ("discretization.error_resolution", study.error_resolution),
        ] {
            if v < 16 {
                return Err(ConfigError::invalid(
                    key,
                    format!("must be at least 16, got {v}"),
                ));
            }
        }

        let sd = SolverConfig::default();
        let norm_u = e.positive_or("solver.norm_u", 1.0)?;
        let tol = match e.take("solver.tol") {
            Some(v) => parse_tolerance("solver.tol", &v, norm_u)?,
            None => sd.tol,
        };
        let solver = SolverConfig {
            max_iters: e.parse_or("solver.max_iters", sd.max_iters)?,
            tol,
            lm_lambda0: e.positive_or("solver.lm_lambda0", sd.lm_lambda0)?,
            lm_growth: e.positive_or("solver.lm_growth", sd.lm_growth)?,
            step_tol: e.positive_or("solver.step_tol", sd.step_tol)?,
            boundary_weight: e.positive_or("solver.boundary_weight", sd.boundary_weight)?,
        };
        solver
            .validate()
            .map_err(|err| ConfigError::invalid("solver", err))?;

        let probe_trials: usize = e.parse_or("analysis.probe_trials", 20)?;
        if probe_trials == 0 {
            return Err(ConfigError::invalid(
                "analysis.probe_trials",
                "must be at least 1",
            ));
        }
        let output = PathBuf::from(e.take("output.dir").unwrap_or_else(|| "out".into()));
        debug_assert!(e.0.is_empty(), "{:?}", e.0);

        Ok(RunConfig {
            command,
            domain,
            problem,
            study,
            solver,
            probe_trials,
            output,
        })
    }

    /// Every key with its effective value; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("command", &self.command.as_str());
        match self.domain {
            Domain::UnitDisk => kv("domain.shape", &"unit_disk"),
            Domain::UnitSquare => kv("domain.shape", &"unit_square"),
            Domain::Ellipse { a, b } => {
                kv("domain.shape", &"ellipse");
                kv("domain.a", &Num(a));
                kv("domain.b", &Num(b));
            }
        }
        kv("kernel.family", &self.study.family);
        match self.study.delta_rule {
            DeltaRule::Fixed(d) => kv("kernel.delta_rule", &format!("fixed({:?})", d)),
            DeltaRule::Proportional(c) => {
                kv("kernel.delta_rule", &format!("proportional({:?})", c))
            }
        }
        match &self.problem {
            ProblemSpec::Catalog(m) => kv("problem.name", m),
            ProblemSpec::Inline { f, g, exact } => {
                kv("problem.f", &f.source());
                kv("problem.g", &g.source());
                if let Some(u) = exact {
                    kv("problem.exact", &u.source());
                }
            }
        }
        kv("discretization.base_h", &Num(self.study.base_h));
        kv("discretization.levels", &self.study.levels);
        kv(
            "discretization.test_refinement",
            &Num(self.study.test_refinement),
        );
        kv("discretization.seed", &self.study.seed);
        kv(
            "discretization.probe_resolution",
            &self.study.probe_resolution,
        );
        kv(
            "discretization.error_resolution",
            &self.study.error_resolution,
        );
        kv("solver.max_iters", &self.solver.max_iters);
        match self.solver.tol {
            Tolerance::Absolute(t) => {
                kv("solver.tol", &format!("absolute({:?})", t));
                kv("solver.norm_u", &Num(1.0));
            }
            Tolerance::Theory { constant, norm_u } => {
                kv("solver.tol", &format!("theory({:?})", constant));
                kv("solver.norm_u", &Num(norm_u));
            }
        }
        kv("solver.lm_lambda0", &Num(self.solver.lm_lambda0));
        kv("solver.lm_growth", &Num(self.solver.lm_growth));
        kv("solver.step_tol", &Num(self.solver.step_tol));
        kv("solver.boundary_weight", &Num(self.solver.boundary_weight));
        kv(
            "analysis.oversampling_constant",
            &Num(self.study.oversampling_constant),
        );
        kv("analysis.probe_trials", &self.probe_trials);
        kv("output.dir", &self.output.display());
        s
    }
}

/// Shortest round-trip float formatting.
struct Num(f64);

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}
