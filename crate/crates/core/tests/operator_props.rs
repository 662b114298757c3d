use mameshfree_core::geometry::{generate_points, PointSet};
use mameshfree_core::operator::{frechet_apply, jacobian, ma_det, residuals};
use mameshfree_core::{
    Coefficients, Domain, HessianSample, KernelFamily, Problem, Role, ScaledKernel, TrialSpace,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn euler_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let h = HessianSample::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let d = ma_det(&h);
        assert!(
            rel(frechet_apply(&h, &h), 2.0 * d) <= 1e-13
                || (frechet_apply(&h, &h) - 2.0 * d).abs() <= 1e-13
        );
    }
}

/// Twelve centers and twenty collocation sites on the unit disk.
fn small_instance() -> (Problem, TrialSpace, PointSet) {
    let domain = Domain::UnitDisk;
    let problem = Problem::new("q", domain, |p| 1.0 + p.x * p.x, |p| p.x - 0.5 * p.y);
    let y = generate_points(&domain, 0.6, Role::Trial, 0).unwrap();
    let x = generate_points(&domain, 0.5, Role::Test, 0).unwrap();
    let y = truncate(y, 12);
    let x = truncate(x, 20);
    let ts = TrialSpace::new(&y, ScaledKernel::new(KernelFamily::C4, 0.9).unwrap()).unwrap();
    (problem, ts, x)
}

/// Keeps all interior points (up to `n`) and fills the rest from the boundary.
fn truncate(set: PointSet, n: usize) -> PointSet {
    let k = set.interior.len().min(n);
    let b = (n - k).min(set.boundary.len());
    PointSet::new(
        set.interior[..k].to_vec(),
        set.boundary[..b].to_vec(),
        set.role,
    )
}

fn stacked(problem: &Problem, ts: &TrialSpace, c: &Coefficients, x: &PointSet) -> Vec<f64> {
    let r = residuals(problem, ts, c, x).unwrap();
    r.interior.into_iter().chain(r.boundary).collect()
}

#[test]
fn jacobian_matches_finite_differences() {
    let (problem, ts, x) = small_instance();
    assert_eq!((ts.len(), x.len()), (12, 20));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let c = Coefficients((0..ts.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
    let jac = jacobian(&problem, &ts, &c, &x).unwrap();
    let cmax = c.0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let step = 1e-6 * (1.0 + cmax);
    let scale = jac.amax();
    for j in 0..ts.len() {
        let mut plus = c.clone();
        let mut minus = c.clone();
        plus.0[j] += step;
        minus.0[j] -= step;
        let rp = stacked(&problem, &ts, &plus, &x);
        let rm = stacked(&problem, &ts, &minus, &x);
        for i in 0..x.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * step);
            assert!(
                (fd - jac[(i, j)]).abs() <= 1e-5 * scale,
                "({i},{j}): fd {fd} vs {}",
                jac[(i, j)]
            );
        }
    }
}

#[test]
fn taylor_remainder_is_quadratic() {
    let (problem, ts, x) = small_instance();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = Coefficients((0..ts.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
    let e: Vec<f64> = (0..ts.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let base = residuals(&problem, &ts, &c, &x).unwrap().interior;
    let jac = jacobian(&problem, &ts, &c, &x).unwrap();
    let m_i = x.interior.len();
    let remainder = |t: f64| {
        let shifted = Coefficients(c.0.iter().zip(&e).map(|(a, b)| a + t * b).collect());
        let r = residuals(&problem, &ts, &shifted, &x).unwrap().interior;
        (0..m_i)
            .map(|i| {
                let lin: f64 = (0..ts.len()).map(|j| jac[(i, j)] * t * e[j]).sum();
                (r[i] - base[i] - lin).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    };
    for t in [1e-1, 5e-2, 1e-2] {
        let ratio = remainder(t) / remainder(t / 2.0);
        assert!((ratio - 4.0).abs() <= 0.2, "t = {t}: ratio {ratio}");
    }
}

proptest! {
    #[test]
    fn det_is_rotation_invariant(
        uxx in -10.0f64..10.0,
        uxy in -10.0f64..10.0,
        uyy in -10.0f64..10.0,
        theta in 0.0f64..std::f64::consts::TAU,
    ) {
        let (s, c) = theta.sin_cos();
        // Rᵀ H R for R the rotation by θ
        let rxx = c * c * uxx + 2.0 * c * s * uxy + s * s * uyy;
        let ryy = s * s * uxx - 2.0 * c * s * uxy + c * c * uyy;
        let rxy = -c * s * uxx + (c * c - s * s) * uxy + c * s * uyy;
        let d = ma_det(&HessianSample::new(uxx, uxy, uyy));
        let dr = ma_det(&HessianSample::new(rxx, rxy, ryy));
        let scale = uxx.abs().max(uxy.abs()).max(uyy.abs()).powi(2);
        prop_assert!((d - dr).abs() <= 1e-12 * scale.max(d.abs()));
    }

    #[test]
    fn frechet_is_symmetric_bilinear(
        a in proptest::array::uniform3(-3.0f64..3.0),
        b in proptest::array::uniform3(-3.0f64..3.0),
    ) {
        let ha = HessianSample::new(a[0], a[1], a[2]);
        let hb = HessianSample::new(b[0], b[1], b[2]);
        prop_assert_eq!(frechet_apply(&ha, &hb), frechet_apply(&hb, &ha));
        let sum = HessianSample::new(a[0] + b[0], a[1] + b[1], a[2] + b[2]);
        let expansion = ma_det(&ha) + frechet_apply(&ha, &hb) + ma_det(&hb);
        prop_assert!((ma_det(&sum) - expansion).abs() <= 1e-12 * (1.0 + expansion.abs()));
    }
}
