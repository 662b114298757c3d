//! Error quadrature, empirical convergence rates, and probes of the inverse
//! and sampling inequalities on trial spaces.
//!
//! Sobolev norms are evaluated at integer order 2 (value, gradient and
//! Hessian terms) by midpoint quadrature; fractional orders are not
//! computed.

use std::io::{self, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, generate_points, Domain, MeshMetrics, Role};
use crate::kernel::{Jet, KernelFamily, Point, ScaledKernel};
use crate::operator::Problem;
use crate::solver::{gauss_newton_solve, oversampling_check, SolveReport, SolverConfig};
use crate::trialspace::{Coefficients, TrialSpace};

pub const CONVERGENCE_HEADER: &str =
    "level,h_Y,q_Y,s_X,delta,N,M,iters,res_inf_I,res_inf_B,e_l2,e_inf,rate_l2,oversampling_value,converged";

/// Midpoint rule on the cells of a uniform grid over the bounding box whose
/// centres lie inside the domain.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<Point>,
    pub cell_area: f64,
}

impl Quadrature {
    pub fn new(domain: &Domain, resolution: usize) -> Result<Self> {
        if resolution < 16 {
            return Err(Error::Domain(format!(
                "quadrature resolution must be >= 16, got {resolution}"
            )));
        }
        let (lo, hi) = domain.bounding_box();
        let cell_area = (hi.x - lo.x) * (hi.y - lo.y) / (resolution * resolution) as f64;
        Ok(Quadrature {
            points: geometry::probe_grid(domain, resolution),
            cell_area,
        })
    }

    /// `sqrt(Σ w·v²)` over values sampled at [`Quadrature::points`].
    pub fn l2_norm(&self, values: &[f64]) -> f64 {
        (self.cell_area * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn sample(&self, field: impl Fn(&Point) -> f64 + Sync) -> Vec<f64> {
        self.points.par_iter().map(&field).collect()
    }
}

/// Discrete L² distance between two fields over the domain.
pub fn l2_error(
    domain: &Domain,
    a: impl Fn(&Point) -> f64 + Sync,
    b: impl Fn(&Point) -> f64 + Sync,
    resolution: usize,
) -> Result<f64> {
    let q = Quadrature::new(domain, resolution)?;
    Ok(q.l2_norm(&q.sample(|p| a(p) - b(p))))
}

/// Largest pointwise difference over the same sample points as [`l2_error`].
pub fn linf_error(
    domain: &Domain,
    a: impl Fn(&Point) -> f64 + Sync,
    b: impl Fn(&Point) -> f64 + Sync,
    resolution: usize,
) -> Result<f64> {
    let q = Quadrature::new(domain, resolution)?;
    Ok(q.sample(|p| a(p) - b(p))
        .iter()
        .fold(0.0, |m, v| m.max(v.abs())))
}

/// Empirical order `log(e_prev/e_cur) / log(h_prev/h_cur)`.
pub fn estimate_rate(e_prev: f64, e_cur: f64, h_prev: f64, h_cur: f64) -> Result<f64> {
    if !(e_prev > 0.0 && e_cur > 0.0 && h_prev > 0.0 && h_cur > 0.0) || h_prev == h_cur {
        return Err(Error::Domain(format!(
            "rate needs positive errors and distinct positive spacings, got ({e_prev}, {e_cur}, {h_prev}, {h_cur})"
        )));
    }
    Ok((e_prev / e_cur).ln() / (h_prev / h_cur).ln())
}

/// How the kernel scale follows refinement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaRule {
    /// Non-stationary: the same `δ` on every level.
    Fixed(f64),
    /// Stationary: `δ = factor · h_Y`, capped at 1.
    Proportional(f64),
}

impl DeltaRule {
    pub fn delta(&self, h_y: f64) -> f64 {
        match *self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::Proportional(c) => (c * h_y).min(1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyConfig {
    pub family: KernelFamily,
    pub base_h: f64,
    pub levels: usize,
    pub delta_rule: DeltaRule,
    /// Ratio of trial spacing to test spacing.
    pub test_refinement: f64,
    pub probe_resolution: usize,
    pub error_resolution: usize,
    /// Stand-in for the unknown constant `C·C_b` of the oversampling condition.
    pub oversampling_constant: f64,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            family: KernelFamily::C4,
            base_h: 0.3,
            levels: 3,
            delta_rule: DeltaRule::Fixed(0.7),
            test_refinement: 2.0,
            probe_resolution: 200,
            error_resolution: 256,
            oversampling_constant: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    pub h_y: f64,
    pub q_y: f64,
    pub s_x: f64,
    pub delta: f64,
    pub n: usize,
    pub m: usize,
    pub iterations: usize,
    pub res_inf_interior: f64,
    pub res_inf_boundary: f64,
    pub e_l2: f64,
    pub e_inf: f64,
    pub rate_l2: Option<f64>,
    pub oversampling_value: f64,
    pub converged: bool,
}

/// Trial and test sets of one refinement level with their metrics.
#[derive(Debug, Clone)]
pub struct Level {
    pub trial: geometry::PointSet,
    pub test: geometry::PointSet,
    pub trial_metrics: MeshMetrics,
    pub test_metrics: MeshMetrics,
    pub delta: f64,
}

pub fn build_level(domain: &Domain, study: &StudyConfig, level: usize) -> Result<Level> {
    if !(study.test_refinement > 0.0) {
        return Err(Error::Domain("test refinement must be positive".into()));
    }
    let h = study.base_h / 2f64.powi(level as i32);
    let trial = generate_points(domain, h, Role::Trial, study.seed)?;
    let test = generate_points(domain, h / study.test_refinement, Role::Test, study.seed)?;
    let trial_metrics = geometry::metrics(domain, &trial, study.probe_resolution)?;
    let test_metrics = geometry::metrics(domain, &test, study.probe_resolution)?;
    let delta = study.delta_rule.delta(trial_metrics.fill());
    Ok(Level {
        trial,
        test,
        trial_metrics,
        test_metrics,
        delta,
    })
}

impl Level {
    pub fn oversampling_value(&self, family: KernelFamily, constant: f64) -> Result<f64> {
        oversampling_check(
            constant,
            self.delta,
            family.sobolev_order(),
            self.test_metrics.fill(),
            self.trial_metrics.fill(),
        )
        .map(|(v, _)| v)
    }
}

/// Solve on successively halved spacings and tabulate errors against the
/// exact solution.
pub fn convergence_study(
    problem: &Problem,
    study: &StudyConfig,
    cfg: &SolverConfig,
) -> Result<Vec<ConvergenceRow>> {
    let exact = problem
        .exact
        .clone()
        .ok_or_else(|| Error::Domain("convergence study needs an exact solution".into()))?;
    if study.levels < 2 {
        return Err(Error::Domain(format!(
            "convergence study needs at least 2 levels, got {}",
            study.levels
        )));
    }
    let quad = Quadrature::new(&problem.domain, study.error_resolution)?;
    let exact_values = quad.sample(|p| exact(p));

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(study.levels);
    for level in 0..study.levels {
        let lv = build_level(&problem.domain, study, level)?;
        let kernel = ScaledKernel::new(study.family, lv.delta)?;
        let ts = TrialSpace::new(&lv.trial, kernel)?;
        let report: Option<SolveReport> = gauss_newton_solve(problem, &ts, &lv.test, cfg).ok();

        let (e_l2, e_inf) = match &report {
            Some(r) => {
                let diff: Vec<f64> = ts
                    .eval_many(&r.coefficients, &quad.points)
                    .iter()
                    .zip(&exact_values)
                    .map(|(s, u)| s - u)
                    .collect();
                (
                    quad.l2_norm(&diff),
                    diff.iter().fold(0.0f64, |m, v| m.max(v.abs())),
                )
            }
            None => (f64::NAN, f64::NAN),
        };
        let rate_l2 = rows.last().and_then(|prev| {
            estimate_rate(prev.e_l2, e_l2, prev.h_y, lv.trial_metrics.fill()).ok()
        });
        rows.push(ConvergenceRow {
            level,
            h_y: lv.trial_metrics.fill(),
            q_y: lv.trial_metrics.separation(),
            s_x: lv.test_metrics.fill(),
            delta: lv.delta,
            n: ts.len(),
            m: lv.test.len(),
            iterations: report.as_ref().map_or(0, |r| r.iterations),
            res_inf_interior: report.as_ref().map_or(f64::NAN, |r| r.res_inf_interior),
            res_inf_boundary: report.as_ref().map_or(f64::NAN, |r| r.res_inf_boundary),
            e_l2,
            e_inf,
            rate_l2,
            oversampling_value: lv.oversampling_value(study.family, study.oversampling_constant)?,
            converged: report.as_ref().is_some_and(|r| r.converged),
        });
    }
    Ok(rows)
}

pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        let rate = r.rate_l2.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.level,
            r.h_y,
            r.q_y,
            r.s_x,
            r.delta,
            r.n,
            r.m,
            r.iterations,
            r.res_inf_interior,
            r.res_inf_boundary,
            r.e_l2,
            r.e_inf,
            rate,
            r.oversampling_value,
            r.converged
        )?;
    }
    Ok(())
}

pub const INTERPOLATION_HEADER: &str = "level,h_Y,q_Y,delta,N,jitter,e_l2,e_inf,rate_l2";

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationRow {
    pub level: usize,
    pub h_y: f64,
    pub q_y: f64,
    pub delta: f64,
    pub n: usize,
    pub jitter: f64,
    pub e_l2: f64,
    pub e_inf: f64,
    pub rate_l2: Option<f64>,
}

/// Interpolation errors of `u` on successively refined trial spaces.
pub fn interpolation_study(
    domain: &Domain,
    u: impl Fn(&Point) -> f64 + Sync,
    study: &StudyConfig,
) -> Result<Vec<InterpolationRow>> {
    let quad = Quadrature::new(domain, study.error_resolution)?;
    let exact = quad.sample(&u);
    let mut rows: Vec<InterpolationRow> = Vec::new();
    for level in 0..study.levels {
        let h = study.base_h / 2f64.powi(level as i32);
        let trial = generate_points(domain, h, Role::Trial, study.seed)?;
        let m = geometry::metrics(domain, &trial, study.probe_resolution)?;
        let delta = study.delta_rule.delta(m.fill());
        let ts = TrialSpace::new(&trial, ScaledKernel::new(study.family, delta)?)?;
        let factor = ts.factor_gram()?;
        let values: Vec<f64> = ts.centers().iter().map(&u).collect();
        let c = Coefficients(factor.solve_refined(&values));
        let diff: Vec<f64> = ts
            .eval_many(&c, &quad.points)
            .iter()
            .zip(&exact)
            .map(|(s, e)| s - e)
            .collect();
        let e_l2 = quad.l2_norm(&diff);
        let rate_l2 = rows
            .last()
            .and_then(|p| estimate_rate(p.e_l2, e_l2, p.h_y, m.fill()).ok());
        rows.push(InterpolationRow {
            level,
            h_y: m.fill(),
            q_y: m.separation(),
            delta,
            n: ts.len(),
            jitter: factor.jitter,
            e_l2,
            e_inf: diff.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            rate_l2,
        });
    }
    Ok(rows)
}

pub fn write_interpolation_csv<W: Write>(rows: &[InterpolationRow], mut w: W) -> io::Result<()> {
    writeln!(w, "{INTERPOLATION_HEADER}")?;
    for r in rows {
        let rate = r.rate_l2.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.level, r.h_y, r.q_y, r.delta, r.n, r.jitter, r.e_l2, r.e_inf, rate
        )?;
    }
    Ok(())
}

/// Quadrature L² and order-2 Sobolev norms of a function given by its jets
/// at the quadrature points.
pub fn l2_and_h2_norms(quad: &Quadrature, jets: &[Jet]) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h2 = 0.0;
    for j in jets {
        let v2 = j.value * j.value;
        let h = &j.hess;
        l2 += v2;
        h2 += v2 + j.grad.norm_squared() + h.uxx * h.uxx + 2.0 * h.uxy * h.uxy + h.uyy * h.uyy;
    }
    ((quad.cell_area * l2).sqrt(), (quad.cell_area * h2).sqrt())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinLevel {
    pub h_y: f64,
    pub delta: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinReport {
    pub levels: Vec<BernsteinLevel>,
    /// Slope of `log max_ratio` against `log h_Y`; `None` for a single level.
    pub slope: Option<f64>,
}

/// Largest ratio `‖s‖_{H²} / ‖s‖_{L²}` over `trials` trial functions with
/// standard normal coefficients, per trial space.
pub fn bernstein_probe(
    domain: &Domain,
    spaces: &[TrialSpace],
    trials: usize,
    resolution: usize,
    seed: u64,
) -> Result<BernsteinReport> {
    let quad = Quadrature::new(domain, resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::with_capacity(spaces.len());
    for ts in spaces {
        if ts.kernel().family() == KernelFamily::C2 {
            return Err(Error::Domain(
                "inverse-inequality probe needs a C4 or C6 kernel".into(),
            ));
        }
        let h_y = space_fill_distance(domain, ts, resolution)?;
        let mut max_ratio: f64 = 0.0;
        for _ in 0..trials {
            let c = Coefficients(
                (0..ts.len())
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect(),
            );
            let jets: Vec<Jet> = quad.points.par_iter().map(|x| ts.eval_jet(&c, x)).collect();
            let (l2, h2) = l2_and_h2_norms(&quad, &jets);
            if l2 > 0.0 {
                max_ratio = max_ratio.max(h2 / l2);
            }
        }
        levels.push(BernsteinLevel {
            h_y,
            delta: ts.kernel().delta(),
            max_ratio,
        });
    }
    let hs: Vec<f64> = levels.iter().map(|l| l.h_y).collect();
    let rs: Vec<f64> = levels.iter().map(|l| l.max_ratio).collect();
    Ok(BernsteinReport {
        slope: loglog_slope(&hs, &rs),
        levels,
    })
}

fn space_fill_distance(domain: &Domain, ts: &TrialSpace, resolution: usize) -> Result<f64> {
    let (i, b) = ts.centers().split_at(ts.n_interior());
    let set = geometry::PointSet::new(i.to_vec(), b.to_vec(), Role::Trial);
    Ok(geometry::metrics(domain, &set, resolution)?.fill())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingLevel {
    pub h_y: f64,
    /// `‖u − I_h u‖_{L²}`.
    pub l2: f64,
    /// `h_Y² ‖u − I_h u‖_{H²}`.
    pub scaled_h2: f64,
}

impl SamplingLevel {
    pub fn ratio(&self) -> f64 {
        self.l2 / self.scaled_h2
    }
}

/// Spread `max ratio / min ratio` across levels.
pub fn sampling_spread(levels: &[SamplingLevel]) -> Option<f64> {
    let ratios: Vec<f64> = levels
        .iter()
        .map(SamplingLevel::ratio)
        .filter(|r| r.is_finite())
        .collect();
    if ratios.len() < 2 {
        return None;
    }
    let max = ratios.iter().copied().fold(f64::MIN, f64::max);
    let min = ratios.iter().copied().fold(f64::MAX, f64::min);
    Some(max / min)
}

/// Interpolation residual of `u` measured in L² and (scaled) order-2
/// Sobolev norm on each trial space. `u` returns its value and derivatives.
pub fn sampling_probe(
    domain: &Domain,
    spaces: &[TrialSpace],
    u: impl Fn(&Point) -> Jet + Sync,
    resolution: usize,
) -> Result<Vec<SamplingLevel>> {
    let quad = Quadrature::new(domain, resolution)?;
    let exact: Vec<Jet> = quad.points.par_iter().map(&u).collect();
    let mut out = Vec::with_capacity(spaces.len());
    for ts in spaces {
        if ts.kernel().family() == KernelFamily::C2 {
            return Err(Error::Domain(
                "sampling probe needs a C4 or C6 kernel".into(),
            ));
        }
        let h_y = space_fill_distance(domain, ts, resolution)?;
        let c = ts.interpolate_fn(|p| u(p).value)?;
        let diff: Vec<Jet> = quad
            .points
            .par_iter()
            .zip(&exact)
            .map(|(x, e)| {
                let mut d = *e;
                d.scaled_add(-1.0, &ts.eval_jet(&c, x));
                d
            })
            .collect();
        let (l2, h2) = l2_and_h2_norms(&quad, &diff);
        out.push(SamplingLevel {
            h_y,
            l2,
            scaled_h2: h_y * h_y * h2,
        });
    }
    Ok(out)
}
