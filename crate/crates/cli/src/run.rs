//! Execution of a parsed [`RunConfig`] and the artifacts it writes.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mameshfree_core::analysis::{
    bernstein_probe, build_level, convergence_study, interpolation_study, sampling_probe,
    sampling_spread, write_convergence_csv, write_interpolation_csv, Quadrature,
};
use mameshfree_core::solver::{gauss_newton_solve, oversampling_check};
use mameshfree_core::{
    Error as CoreError, Jet, Manufactured, Point, Problem, ScaledKernel, TrialSpace,
};
use nalgebra::Vector2;
use thiserror::Error;

use crate::config::{Command, ConfigError, ProblemSpec, RunConfig};

pub const DIAGNOSTICS_HEADER: &str =
    "level,h_Y,q_Y,s_X,delta,N,mesh_ratio,oversampling_value,oversampling_ok,\
bernstein_max_ratio_order2,sampling_l2,sampling_h2_order2_scaled,sampling_ratio";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// Process exit code: 1 when the solver could not proceed, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(CoreError::SolverStalled(_)) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when any solve in the command missed its tolerance.
    pub converged: bool,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.converged {
            0
        } else {
            1
        }
    }
}

/// Reads and parses a config file.
pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(ConfigError::NotFound(path.display().to_string()))
        }
        Err(e) => return Err(ConfigError::Unreadable(format!("{}: {e}", path.display()))),
    };
    RunConfig::parse(&text)
}

pub fn build_problem(cfg: &RunConfig) -> Problem {
    match &cfg.problem {
        ProblemSpec::Catalog(m) => m.problem(cfg.domain),
        ProblemSpec::Inline { f, g, exact } => {
            let (f, g) = (f.clone(), g.clone());
            let p = Problem::new(
                "inline",
                cfg.domain,
                move |p| f.eval(p.x, p.y),
                move |p| g.eval(p.x, p.y),
            );
            match exact.clone() {
                Some(u) => p.with_exact(move |p| u.eval(p.x, p.y)),
                None => p,
            }
        }
    }
}

/// Runs the configured command, writing artifacts into `out_dir`.
pub fn execute(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    match cfg.command {
        Command::Solve => solve(cfg, out_dir),
        Command::Converge => converge(cfg, out_dir),
        Command::Interp => interp(cfg, out_dir),
        Command::Diagnose => diagnose(cfg, out_dir),
    }
}

fn write_file(
    path: PathBuf,
    f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<PathBuf, RunError> {
    let io_err = |source| RunError::Io {
        path: path.clone(),
        source,
    };
    let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
    f(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
    Ok(path)
}

fn solve(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let problem = build_problem(cfg);
    let lv = build_level(&cfg.domain, &cfg.study, 0)?;
    let ts = TrialSpace::new(&lv.trial, ScaledKernel::new(cfg.study.family, lv.delta)?)?;
    let report = gauss_newton_solve(&problem, &ts, &lv.test, &cfg.solver)?;

    let mut text = String::new();
    let _ = writeln!(text, "problem = {}", problem.name);
    let _ = writeln!(text, "domain = {}", cfg.domain.name());
    let _ = writeln!(text, "kernel = {}", cfg.study.family);
    let _ = writeln!(text, "delta = {}", lv.delta);
    let _ = writeln!(text, "h_Y = {}", lv.trial_metrics.fill());
    let _ = writeln!(text, "q_Y = {}", lv.trial_metrics.separation());
    let _ = writeln!(text, "s_X = {}", lv.test_metrics.fill());
    let _ = writeln!(text, "N = {}", ts.len());
    let _ = writeln!(text, "M = {}", lv.test.len());
    let _ = writeln!(
        text,
        "oversampling_value = {}",
        lv.oversampling_value(cfg.study.family, cfg.study.oversampling_constant)?
    );
    let mut errors = String::new();
    if let Some(u) = &problem.exact {
        let quad = Quadrature::new(&cfg.domain, cfg.study.error_resolution)?;
        let exact = quad.sample(|p| u(p));
        let diff: Vec<f64> = ts
            .eval_many(&report.coefficients, &quad.points)
            .iter()
            .zip(&exact)
            .map(|(s, e)| s - e)
            .collect();
        let e_l2 = quad.l2_norm(&diff);
        let e_inf = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let _ = writeln!(text, "e_l2 = {e_l2:e}");
        let _ = writeln!(text, "e_inf = {e_inf:e}");
        errors = format!(", e_inf = {e_inf:.3e}");
    }
    text.push_str(&report.to_text());

    let artifacts = vec![
        write_file(out_dir.join("report.txt"), |w| w.write_all(text.as_bytes()))?,
        write_file(out_dir.join("coefficients.csv"), |w| {
            report.coefficients.write_csv(w)
        })?,
    ];
    let summary = format!(
        "solve {}: converged = {} after {} iterations ({}), res_inf_I = {:.3e}, res_inf_B = {:.3e}{errors}",
        problem.name,
        report.converged,
        report.iterations,
        report.stop_reason.as_str(),
        report.res_inf_interior,
        report.res_inf_boundary
    );
    Ok(Outcome {
        converged: report.converged,
        summary,
        artifacts,
    })
}

fn converge(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let problem = build_problem(cfg);
    if problem.exact.is_none() {
        return Err(ConfigError::Missing("problem.exact (needed by converge)".into()).into());
    }
    if cfg.study.levels < 2 {
        return Err(ConfigError::Invalid {
            key: "discretization.levels".into(),
            message: "converge needs at least 2 levels".into(),
        }
        .into());
    }
    let rows = convergence_study(&problem, &cfg.study, &cfg.solver)?;
    let path = write_file(out_dir.join("table.csv"), |w| {
        write_convergence_csv(&rows, w)
    })?;
    let converged = rows.iter().all(|r| r.converged);
    let last = rows.last().expect("at least two levels");
    let summary = format!(
        "converge {}: {} levels, {} converged, final e_l2 = {:.3e}, final rate_l2 = {}",
        problem.name,
        rows.len(),
        rows.iter().filter(|r| r.converged).count(),
        last.e_l2,
        last.rate_l2.map_or("n/a".into(), |r| format!("{r:.3}"))
    );
    Ok(Outcome {
        converged,
        summary,
        artifacts: vec![path],
    })
}

fn interp(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let problem = build_problem(cfg);
    let u = problem
        .exact
        .clone()
        .ok_or_else(|| ConfigError::Missing("problem.exact (needed by interp)".into()))?;
    let rows = interpolation_study(&cfg.domain, |p| u(p), &cfg.study)?;
    let path = write_file(out_dir.join("interp.csv"), |w| {
        write_interpolation_csv(&rows, w)
    })?;
    let last = rows.last().expect("at least one level");
    let summary = format!(
        "interp {}: {} levels, final e_l2 = {:.3e}, final e_inf = {:.3e}",
        problem.name,
        rows.len(),
        last.e_l2,
        last.e_inf
    );
    Ok(Outcome {
        converged: true,
        summary,
        artifacts: vec![path],
    })
}

/// `sin(2x) cos(y)` with its derivatives.
fn default_probe_field(p: &Point) -> Jet {
    let (s2, c2) = (2.0 * p.x).sin_cos();
    let (sy, cy) = p.y.sin_cos();
    Jet {
        value: s2 * cy,
        grad: Vector2::new(2.0 * c2 * cy, -s2 * sy),
        hess: mameshfree_core::HessianSample::new(-4.0 * s2 * cy, -2.0 * c2 * sy, -s2 * cy),
    }
}

fn diagnose(cfg: &RunConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    let sigma = cfg.study.family.sobolev_order();
    let mut levels = Vec::with_capacity(cfg.study.levels);
    let mut spaces = Vec::with_capacity(cfg.study.levels);
    for l in 0..cfg.study.levels {
        let lv = build_level(&cfg.domain, &cfg.study, l)?;
        spaces.push(TrialSpace::new(
            &lv.trial,
            ScaledKernel::new(cfg.study.family, lv.delta)?,
        )?);
        levels.push(lv);
    }
    let res = cfg.study.error_resolution;
    let bern = bernstein_probe(&cfg.domain, &spaces, cfg.probe_trials, res, cfg.study.seed)?;
    // catalog problems supply analytic jets; inline expressions only values
    let samp = match cfg.problem {
        ProblemSpec::Catalog(m) => sampling_probe(
            &cfg.domain,
            &spaces,
            |p: &Point| Manufactured::exact_jet(m, p),
            res,
        )?,
        ProblemSpec::Inline { .. } => {
            sampling_probe(&cfg.domain, &spaces, default_probe_field, res)?
        }
    };

    let mut rows = Vec::with_capacity(levels.len());
    for (l, lv) in levels.iter().enumerate() {
        let (h_y, s_x) = (lv.trial_metrics.fill(), lv.test_metrics.fill());
        let (ov, ok) =
            oversampling_check(cfg.study.oversampling_constant, lv.delta, sigma, s_x, h_y)?;
        rows.push(format!(
            "{l},{h_y},{},{s_x},{},{},{},{ov},{ok},{},{},{},{}",
            lv.trial_metrics.separation(),
            lv.delta,
            spaces[l].len(),
            lv.trial_metrics.mesh_ratio(),
            bern.levels[l].max_ratio,
            samp[l].l2,
            samp[l].scaled_h2,
            samp[l].ratio()
        ));
    }
    let path = write_file(out_dir.join("diagnostics.csv"), |w| {
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        rows.iter().try_for_each(|r| writeln!(w, "{r}"))
    })?;
    let fmt_opt = |v: Option<f64>| v.map_or("n/a".into(), |v| format!("{v:.3}"));
    let summary = format!(
        "diagnose: {} levels, inverse-inequality slope = {}, sampling ratio spread = {}",
        levels.len(),
        fmt_opt(bern.slope),
        fmt_opt(sampling_spread(&samp))
    );
    Ok(Outcome {
        converged: true,
        summary,
        artifacts: vec![path],
    })
}
