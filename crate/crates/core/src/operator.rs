//! The Monge-Ampère operator `det D²u`, its linearization, and the stacked
//! collocation residual and Jacobian.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Domain, PointSet};
use crate::kernel::{Jet, Point};
use crate::trialspace::{Coefficients, TrialSpace};

/// Second partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HessianSample {
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
}

impl HessianSample {
    pub fn new(uxx: f64, uxy: f64, uyy: f64) -> Self {
        HessianSample { uxx, uxy, uyy }
    }
}

pub fn ma_det(h: &HessianSample) -> f64 {
    h.uxx * h.uyy - h.uxy * h.uxy
}

/// Linearization of `det D²` at `hu` applied to `hv`:
/// `u_yy v_xx + u_xx v_yy − 2 u_xy v_xy`.
pub fn frechet_apply(hu: &HessianSample, hv: &HessianSample) -> f64 {
    hu.uyy * hv.uxx + hu.uxx * hv.uyy - 2.0 * hu.uxy * hv.uxy
}

/// Positive definiteness of the 2×2 Hessian.
pub fn convexity_indicator(h: &HessianSample) -> bool {
    h.uxx > 0.0 && ma_det(h) > 0.0
}

pub type ScalarField = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// `det D²u = f` in the domain, `u = g` on its boundary.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Domain,
    pub f: ScalarField,
    pub g: ScalarField,
    /// Exact solution, when known, for error reporting.
    pub exact: Option<ScalarField>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        g: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Problem {
            name: name.into(),
            domain,
            f: Arc::new(f),
            g: Arc::new(g),
            exact: None,
        }
    }

    pub fn with_exact(mut self, u: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(u));
        self
    }

    /// Evaluates `f` at `x`, rejecting nonpositive values.
    pub fn source(&self, x: &Point) -> Result<f64> {
        let v = (self.f)(x);
        if !(v > 0.0) {
            return Err(Error::NonPositiveSource {
                x: x.x,
                y: x.y,
                value: v,
            });
        }
        Ok(v)
    }
}

/// Collocation residuals split into the interior (PDE) and boundary blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl Residuals {
    pub fn inf_interior(&self) -> f64 {
        inf_norm(&self.interior)
    }

    pub fn inf_boundary(&self) -> f64 {
        inf_norm(&self.boundary)
    }

    /// Euclidean norm of the stacked vector with the boundary block scaled
    /// by `boundary_weight`.
    pub fn l2(&self, boundary_weight: f64) -> f64 {
        let i: f64 = self.interior.iter().map(|v| v * v).sum();
        let b: f64 = self.boundary.iter().map(|v| v * v).sum();
        (i + boundary_weight * boundary_weight * b).sqrt()
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Residual, Hessian of `s`, and the basis jets at one interior site.
type InteriorRow = (f64, HessianSample, Vec<(usize, Jet)>);

fn interior_row(
    problem: &Problem,
    ts: &TrialSpace,
    c: &Coefficients,
    x: &Point,
) -> Result<InteriorRow> {
    let f = problem.source(x)?;
    let basis = ts.basis_jets(x);
    let mut s = Jet::ZERO;
    for (j, jet) in &basis {
        s.scaled_add(c.0[*j], jet);
    }
    Ok((ma_det(&s.hess) - f, s.hess, basis))
}

/// `rI[i] = det D²s(x_i) − f(x_i)` on interior sites and
/// `rB[i] = s(x_i) − g(x_i)` on boundary sites.
pub fn residuals(
    problem: &Problem,
    ts: &TrialSpace,
    c: &Coefficients,
    sites: &PointSet,
) -> Result<Residuals> {
    check_len(ts, c)?;
    let interior = sites
        .interior
        .par_iter()
        .map(|x| interior_row(problem, ts, c, x).map(|r| r.0))
        .collect::<Result<Vec<f64>>>()?;
    let boundary = sites
        .boundary
        .par_iter()
        .map(|x| ts.eval(c, x) - (problem.g)(x))
        .collect();
    Ok(Residuals { interior, boundary })
}

/// Residuals together with their exact Jacobian with respect to `c`
/// (rows interior then boundary).
pub fn residuals_and_jacobian(
    problem: &Problem,
    ts: &TrialSpace,
    c: &Coefficients,
    sites: &PointSet,
) -> Result<(Residuals, DMatrix<f64>)> {
    check_len(ts, c)?;
    let n = ts.len();
    let m_i = sites.interior.len();
    let m = sites.len();

    let interior_rows = sites
        .interior
        .par_iter()
        .map(|x| {
            let (r, hs, basis) = interior_row(problem, ts, c, x)?;
            let row: Vec<(usize, f64)> = basis
                .iter()
                .map(|(j, jet)| (*j, frechet_apply(&hs, &jet.hess)))
                .collect();
            Ok((r, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let boundary_rows: Vec<(f64, Vec<(usize, f64)>)> = sites
        .boundary
        .par_iter()
        .map(|x| {
            let row: Vec<(usize, f64)> = ts
                .support(x)
                .map(|j| (j, ts.kernel().eval(x, &ts.centers()[j])))
                .collect();
            let s: f64 = row.iter().map(|(j, v)| c.0[*j] * v).sum();
            (s - (problem.g)(x), row)
        })
        .collect();

    let mut jac = DMatrix::zeros(m, n);
    let mut res = Residuals {
        interior: Vec::with_capacity(m_i),
        boundary: Vec::with_capacity(m - m_i),
    };
    for (i, (r, row)) in interior_rows.into_iter().enumerate() {
        res.interior.push(r);
        for (j, v) in row {
            jac[(i, j)] = v;
        }
    }
    for (i, (r, row)) in boundary_rows.into_iter().enumerate() {
        res.boundary.push(r);
        for (j, v) in row {
            jac[(m_i + i, j)] = v;
        }
    }
    Ok((res, jac))
}

pub fn jacobian(
    problem: &Problem,
    ts: &TrialSpace,
    c: &Coefficients,
    sites: &PointSet,
) -> Result<DMatrix<f64>> {
    residuals_and_jacobian(problem, ts, c, sites).map(|(_, j)| j)
}

fn check_len(ts: &TrialSpace, c: &Coefficients) -> Result<()> {
    if c.len() != ts.len() {
        return Err(Error::DimensionMismatch {
            expected: ts.len(),
            got: c.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_points, Role};
    use crate::kernel::{KernelFamily, ScaledKernel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn h(uxx: f64, uxy: f64, uyy: f64) -> HessianSample {
        HessianSample::new(uxx, uxy, uyy)
    }

    #[test]
    fn det_examples() {
        assert_eq!(ma_det(&h(1.0, 0.0, 1.0)), 1.0);
        assert_eq!(ma_det(&h(0.0, 1.0, 0.0)), -1.0);
        assert_eq!(ma_det(&h(2.0, 1.0, 3.0)), 5.0);
    }

    #[test]
    fn frechet_examples() {
        assert_eq!(
            frechet_apply(&h(1.0, 0.0, 1.0), &h(0.7, -3.0, 1.1)),
            0.7 + 1.1
        );
        assert_eq!(frechet_apply(&h(2.0, 1.0, 3.0), &h(2.0, 1.0, 3.0)), 10.0);
        assert_eq!(frechet_apply(&h(2.0, 1.0, 3.0), &h(4.0, 0.0, 5.0)), 22.0);
    }

    #[test]
    fn convexity_examples() {
        assert!(convexity_indicator(&h(1.0, 0.0, 1.0)));
        assert!(!convexity_indicator(&h(0.0, 1.0, 0.0)));
        assert!(convexity_indicator(&h(1.0, 0.9, 1.0)));
        assert!(!convexity_indicator(&h(-1.0, 0.0, -1.0)));
    }

    fn small_instance(family: KernelFamily) -> (Problem, TrialSpace, PointSet) {
        let domain = Domain::UnitDisk;
        let problem = Problem::new("t", domain, |_| 1.0, |p| 0.5 * (p.x * p.x + p.y * p.y));
        let y = generate_points(&domain, 0.7, Role::Trial, 0).unwrap();
        let x = generate_points(&domain, 0.45, Role::Test, 0).unwrap();
        let ts = TrialSpace::new(&y, ScaledKernel::new(family, 0.9).unwrap()).unwrap();
        (problem, ts, x)
    }

    #[test]
    fn zero_coefficients() {
        let (mut problem, ts, x) = small_instance(KernelFamily::C4);
        problem.g = Arc::new(|_| 0.0);
        let c = Coefficients::zeros(ts.len());
        let r = residuals(&problem, &ts, &c, &x).unwrap();
        assert!(r.interior.iter().all(|&v| v == -1.0));
        assert!(r.boundary.iter().all(|&v| v == 0.0));
        problem.g = Arc::new(|_| 2.0);
        let r = residuals(&problem, &ts, &c, &x).unwrap();
        assert!(r.boundary.iter().all(|&v| v == -2.0));

        let jac = jacobian(&problem, &ts, &c, &x).unwrap();
        let m_i = x.interior.len();
        assert!(jac.rows(0, m_i).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_rows_vanish_outside_support() {
        let (problem, ts, x) = small_instance(KernelFamily::C4);
        let c = Coefficients(vec![0.3; ts.len()]);
        let jac = jacobian(&problem, &ts, &c, &x).unwrap();
        let delta = ts.kernel().delta();
        for (i, xi) in x.boundary.iter().enumerate() {
            for (j, yj) in ts.centers().iter().enumerate() {
                if (xi - yj).norm() >= delta {
                    assert_eq!(jac[(x.interior.len() + i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn nonpositive_source_rejected() {
        let (mut problem, ts, x) = small_instance(KernelFamily::C4);
        problem.f = Arc::new(|p| p.x);
        let err = residuals(&problem, &ts, &Coefficients::zeros(ts.len()), &x).unwrap_err();
        assert!(err.to_string().contains("f not strictly positive"));
    }

    /// Reference assembly visiting every center in index order.
    fn dense_reference(
        problem: &Problem,
        ts: &TrialSpace,
        c: &Coefficients,
        x: &PointSet,
    ) -> (Vec<f64>, DMatrix<f64>) {
        let k = ts.kernel();
        let n = ts.len();
        let mut r = Vec::new();
        let mut jac = DMatrix::zeros(x.len(), n);
        for (i, xi) in x.interior.iter().enumerate() {
            let mut s = Jet::ZERO;
            for (j, yj) in ts.centers().iter().enumerate() {
                s.scaled_add(c.0[j], &k.jet(xi, yj));
            }
            r.push(ma_det(&s.hess) - (problem.f)(xi));
            for (j, yj) in ts.centers().iter().enumerate() {
                jac[(i, j)] = frechet_apply(&s.hess, &k.jet(xi, yj).hess);
            }
        }
        for (i, xi) in x.boundary.iter().enumerate() {
            let row = x.interior.len() + i;
            let mut s = 0.0;
            for (j, yj) in ts.centers().iter().enumerate() {
                jac[(row, j)] = k.eval(xi, yj);
                s += c.0[j] * jac[(row, j)];
            }
            r.push(s - (problem.g)(xi));
        }
        (r, jac)
    }

    #[test]
    fn matches_dense_reference() {
        let (problem, ts, x) = small_instance(KernelFamily::C6);
        assert!(ts.len() <= 20, "{}", ts.len());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = Coefficients((0..ts.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
        let (res, jac) = residuals_and_jacobian(&problem, &ts, &c, &x).unwrap();
        let (r_ref, j_ref) = dense_reference(&problem, &ts, &c, &x);
        let stacked: Vec<f64> = res.interior.iter().chain(&res.boundary).copied().collect();
        for (a, b) in stacked.iter().zip(&r_ref) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
        for (a, b) in jac.iter().zip(j_ref.iter()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}
