//! Damped Gauss–Newton (Levenberg–Marquardt) for the overdetermined
//! collocation system.
//!
//! Each step minimizes `‖J p + r‖² + λ‖p‖²`, i.e. solves
//! `(JᵀJ + λI) p = −Jᵀr`, through a QR factorization of the stacked matrix
//! `[J; √λ I]` so that the normal matrix is never formed. A step is
//! accepted when it lowers the stacked 2-norm of the residual. Iteration
//! stops as soon as both residual blocks are below `tol` in the max norm.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, PointSet, Role};
use crate::kernel::{Point, DIM};
use crate::operator::{
    convexity_indicator, inf_norm, residuals, residuals_and_jacobian, Problem, Residuals,
};
use crate::trialspace::{Coefficients, TrialSpace};

const MAX_RETRIES: usize = 20;
const LAMBDA_FLOOR: f64 = 1e-12;
/// Probe resolution used for fill distances when the tolerance comes from
/// the theoretical rate.
const THEORY_PROBE_RESOLUTION: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// `tol = C · s_B^{1/2} δ^{−σ} h_Y^{σ−3} · norm_u` with a surrogate
    /// `norm_u` for the unknown Sobolev norm of the solution.
    Theory {
        constant: f64,
        norm_u: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: Tolerance,
    pub lm_lambda0: f64,
    pub lm_growth: f64,
    pub step_tol: f64,
    /// Weight of the boundary block in the least-squares objective.
    pub boundary_weight: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50,
            tol: Tolerance::Absolute(1e-8),
            lm_lambda0: 1e-6,
            lm_growth: 10.0,
            step_tol: 1e-14,
            boundary_weight: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tol_ok = match self.tol {
            Tolerance::Absolute(t) => t > 0.0,
            Tolerance::Theory { constant, norm_u } => constant > 0.0 && norm_u > 0.0,
        };
        if !(tol_ok
            && self.lm_lambda0 > 0.0
            && self.lm_growth > 1.0
            && self.step_tol > 0.0
            && self.boundary_weight > 0.0)
        {
            return Err(Error::Domain(format!(
                "invalid solver configuration {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub res_l2: f64,
    pub res_inf_interior: f64,
    pub res_inf_boundary: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    StepTolerance,
    NoDescent,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIterations => "max_iters",
            StopReason::StepTolerance => "step_tol",
            StopReason::NoDescent => "no_descent",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub coefficients: Coefficients,
    pub iterations: usize,
    pub res_inf_interior: f64,
    pub res_inf_boundary: f64,
    pub res_l2: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub tol: f64,
    pub boundary_weight: f64,
    /// Fraction of interior collocation sites where `D²s` is positive definite.
    pub convex_fraction: f64,
    /// One entry for the initial guess, then one per accepted step.
    pub history: Vec<IterationRecord>,
    pub warnings: Vec<String>,
}

impl SolveReport {
    /// `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "stop_reason = {}", self.stop_reason.as_str());
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "tol = {:e}", self.tol);
        let _ = writeln!(s, "res_inf_interior = {:e}", self.res_inf_interior);
        let _ = writeln!(s, "res_inf_boundary = {:e}", self.res_inf_boundary);
        let _ = writeln!(s, "res_l2 = {:e}", self.res_l2);
        let _ = writeln!(s, "convex_fraction = {}", self.convex_fraction);
        let _ = writeln!(s, "boundary_weight = {}", self.boundary_weight);
        let _ = writeln!(s, "n_coefficients = {}", self.coefficients.len());
        for (k, h) in self.history.iter().enumerate() {
            let _ = writeln!(
                s,
                "history.{k} = {:e} {:e} {:e} {:e}",
                h.res_l2, h.res_inf_interior, h.res_inf_boundary, h.lambda
            );
        }
        for (k, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(s, "warning.{k} = {w}");
        }
        s
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Domain(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// `C · s_B^{1/2} · δ^{−σ} · h_Y^{σ−2−d/2} · norm_u`.
pub fn tol_from_theory(
    c: f64,
    s_b: f64,
    delta: f64,
    sigma: f64,
    h_y: f64,
    norm_u: f64,
) -> Result<f64> {
    for (name, v) in [
        ("C", c),
        ("s_B", s_b),
        ("delta", delta),
        ("sigma", sigma),
        ("h_Y", h_y),
        ("norm_u", norm_u),
    ] {
        require_positive(name, v)?;
    }
    let d = DIM as f64;
    Ok(c * s_b.sqrt() * delta.powf(-sigma) * h_y.powf(sigma - 2.0 - d / 2.0) * norm_u)
}

/// Left side of the oversampling condition,
/// `C·C_b · δ^σ · s_X^{σ−2} · h_Y^{−σ+d/2}`, and whether it is below 1/2.
pub fn oversampling_check(
    ccb: f64,
    delta: f64,
    sigma: f64,
    s_x: f64,
    h_y: f64,
) -> Result<(f64, bool)> {
    for (name, v) in [
        ("C*C_b", ccb),
        ("delta", delta),
        ("sigma", sigma),
        ("s_X", s_x),
        ("h_Y", h_y),
    ] {
        require_positive(name, v)?;
    }
    let d = DIM as f64;
    let value = ccb * delta.powf(sigma) * s_x.powf(sigma - 2.0) * h_y.powf(-sigma + d / 2.0);
    Ok((value, value < 0.5))
}

/// Interpolant of `v₀ = μ|x|²/2 + ℓ(x)`, where `μ² = mean f` over interior
/// centers and `ℓ` is the least-squares affine fit of `g − μ|x|²/2` over
/// boundary centers. `v₀` has Hessian `μI`.
pub fn initial_guess(problem: &Problem, ts: &TrialSpace) -> Result<Coefficients> {
    let centers = ts.centers();
    let (interior, boundary) = centers.split_at(ts.n_interior());
    let mu = if interior.is_empty() {
        1.0
    } else {
        let mut sum = 0.0;
        for y in interior {
            sum += problem.source(y)?;
        }
        (sum / interior.len() as f64).sqrt()
    };
    let quad = |p: &Point| 0.5 * mu * (p.x * p.x + p.y * p.y);
    let affine = affine_fit(boundary.iter().map(|p| (*p, (problem.g)(p) - quad(p))));
    let values: Vec<f64> = centers
        .iter()
        .map(|p| quad(p) + affine[0] + affine[1] * p.x + affine[2] * p.y)
        .collect();
    ts.interpolate(&values)
}

/// Least-squares `a + b x + c y`; falls back to the mean (or zero) when the
/// sample does not determine a plane.
fn affine_fit(samples: impl Iterator<Item = (Point, f64)>) -> [f64; 3] {
    let mut ata = Matrix3::zeros();
    let mut atb = Vector3::zeros();
    let mut count = 0usize;
    for (p, v) in samples {
        let row = Vector3::new(1.0, p.x, p.y);
        ata += row * row.transpose();
        atb += row * v;
        count += 1;
    }
    if count == 0 {
        return [0.0; 3];
    }
    if count >= 3 {
        if let Some(chol) = ata.cholesky() {
            let sol = chol.solve(&atb);
            if sol.iter().all(|v| v.is_finite()) {
                return [sol[0], sol[1], sol[2]];
            }
        }
    }
    [atb[0] / count as f64, 0.0, 0.0]
}

fn trial_point_set(ts: &TrialSpace) -> PointSet {
    let (i, b) = ts.centers().split_at(ts.n_interior());
    PointSet::new(i.to_vec(), b.to_vec(), Role::Trial)
}

fn resolve_tol(
    cfg: &SolverConfig,
    problem: &Problem,
    ts: &TrialSpace,
    sites: &PointSet,
) -> Result<f64> {
    match cfg.tol {
        Tolerance::Absolute(t) => Ok(t),
        Tolerance::Theory { constant, norm_u } => {
            let domain = &problem.domain;
            let trial = geometry::metrics(domain, &trial_point_set(ts), THEORY_PROBE_RESOLUTION)?;
            let s_b = geometry::boundary_fill_distance(domain, &sites.boundary)?;
            let k = ts.kernel();
            tol_from_theory(
                constant,
                s_b,
                k.delta(),
                k.family().sobolev_order(),
                trial.fill(),
                norm_u,
            )
        }
    }
}

fn convex_fraction(ts: &TrialSpace, c: &Coefficients, sites: &PointSet) -> f64 {
    if sites.interior.is_empty() {
        return 0.0;
    }
    let count = sites
        .interior
        .par_iter()
        .filter(|x| convexity_indicator(&ts.eval_jet(c, x).hess))
        .count();
    count as f64 / sites.interior.len() as f64
}

fn record(r: &Residuals, weight: f64, lambda: f64) -> IterationRecord {
    IterationRecord {
        res_l2: r.l2(weight),
        res_inf_interior: r.inf_interior(),
        res_inf_boundary: r.inf_boundary(),
        lambda,
    }
}

/// Minimizer of `‖J p + r‖² + λ‖p‖²`.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let (m, n) = jac.shape();
    let mut stacked = DMatrix::zeros(m + n, n);
    stacked.rows_mut(0, m).copy_from(jac);
    stacked.rows_mut(m, n).fill_diagonal(lambda.sqrt());
    let mut rhs = DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from(&(-r));
    let qr = stacked.qr();
    qr.q_tr_mul(&mut rhs);
    let step = qr.r().solve_upper_triangular(&rhs.rows(0, n))?;
    step.iter().all(|v| v.is_finite()).then_some(step)
}

fn weighted(r: &Residuals, jac: &mut DMatrix<f64>, weight: f64) -> DVector<f64> {
    let m_i = r.interior.len();
    if weight != 1.0 {
        let m = jac.nrows();
        jac.rows_mut(m_i, m - m_i).scale_mut(weight);
    }
    DVector::from_iterator(
        r.interior.len() + r.boundary.len(),
        r.interior
            .iter()
            .copied()
            .chain(r.boundary.iter().map(|v| weight * v)),
    )
}

pub fn gauss_newton_solve(
    problem: &Problem,
    ts: &TrialSpace,
    sites: &PointSet,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    if sites.role != Role::Test {
        return Err(Error::Domain(
            "collocation sites must be a test-role point set".into(),
        ));
    }
    let mut warnings = Vec::new();
    if sites.len() < ts.len() {
        warnings.push(format!(
            "fewer collocation sites ({}) than trial centers ({})",
            sites.len(),
            ts.len()
        ));
    }
    if cfg.boundary_weight != 1.0 {
        warnings.push(format!(
            "boundary block weighted by {}",
            cfg.boundary_weight
        ));
    }
    let tol = resolve_tol(cfg, problem, ts, sites)?;
    let weight = cfg.boundary_weight;
    let meets_tol = |r: &Residuals| r.inf_interior().max(r.inf_boundary()) <= tol;

    let mut c = initial_guess(problem, ts)?;
    let mut lambda = cfg.lm_lambda0;
    let (mut res, mut jac) = residuals_and_jacobian(problem, ts, &c, sites)?;
    let mut history = vec![record(&res, weight, lambda)];
    let mut iterations = 0;

    let stop_reason = loop {
        if meets_tol(&res) {
            break StopReason::Converged;
        }
        if iterations >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        let current_l2 = res.l2(weight);
        let rhs = weighted(&res, &mut jac, weight);

        let mut accepted = None;
        let mut tiny_step = false;
        let mut any_solved = false;
        for _ in 0..=MAX_RETRIES {
            let Some(step) = damped_step(&jac, &rhs, lambda) else {
                lambda *= cfg.lm_growth;
                continue;
            };
            any_solved = true;
            if step.amax() < cfg.step_tol {
                tiny_step = true;
                break;
            }
            let trial = Coefficients(c.0.iter().zip(step.iter()).map(|(a, b)| a + b).collect());
            let trial_res = residuals(problem, ts, &trial, sites)?;
            if trial_res.l2(weight) < current_l2 {
                accepted = Some(trial);
                lambda = (lambda / cfg.lm_growth).max(LAMBDA_FLOOR);
                break;
            }
            lambda *= cfg.lm_growth;
        }
        if !any_solved {
            return Err(Error::SolverStalled(format!(
                "damped system singular up to lambda = {lambda:e}"
            )));
        }
        if tiny_step {
            break StopReason::StepTolerance;
        }
        let Some(next) = accepted else {
            break StopReason::NoDescent;
        };
        c = next;
        iterations += 1;
        (res, jac) = residuals_and_jacobian(problem, ts, &c, sites)?;
        history.push(record(&res, weight, lambda));
    };

    Ok(SolveReport {
        res_inf_interior: res.inf_interior(),
        res_inf_boundary: res.inf_boundary(),
        res_l2: res.l2(weight),
        converged: meets_tol(&res),
        stop_reason,
        tol,
        boundary_weight: weight,
        convex_fraction: convex_fraction(ts, &c, sites),
        coefficients: c,
        iterations,
        history,
        warnings,
    })
}

/// Stacked max-norm of the collocation residual, as used by the stopping rule.
pub fn collocation_error(
    problem: &Problem,
    ts: &TrialSpace,
    c: &Coefficients,
    sites: &PointSet,
) -> Result<f64> {
    let r = residuals(problem, ts, c, sites)?;
    Ok(inf_norm(&r.interior).max(inf_norm(&r.boundary)))
}
