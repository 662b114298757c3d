use mameshfree_core::analysis::{
    bernstein_probe, convergence_study, l2_error, write_convergence_csv, DeltaRule, Quadrature,
    StudyConfig,
};
use mameshfree_core::geometry::generate_points;
use mameshfree_core::{
    Domain, KernelFamily, Manufactured, Point, Role, ScaledKernel, SolverConfig, TrialSpace,
};
use proptest::prelude::*;

#[test]
fn quadrature_converges_beyond_128() {
    let sq = Domain::UnitSquare;
    let mut prev = l2_error(&sq, |p| p.x, |_| 0.0, 128).unwrap();
    for res in [256, 512] {
        let next = l2_error(&sq, |p| p.x, |_| 0.0, res).unwrap();
        assert!((next - prev).abs() <= 0.01 * prev);
        prev = next;
    }
    assert!((prev - 1.0 / 3f64.sqrt()).abs() <= 1e-3);
}

#[test]
fn constant_field_gives_sqrt_area() {
    for domain in [
        Domain::UnitDisk,
        Domain::UnitSquare,
        Domain::ellipse(1.0, 0.5).unwrap(),
    ] {
        let q = Quadrature::new(&domain, 256).unwrap();
        let norm = q.l2_norm(&q.sample(|_| 1.0));
        assert!(
            (norm - domain.area().sqrt()).abs() <= 1e-2,
            "{domain:?}: {norm}"
        );
    }
}

#[test]
fn study_is_deterministic() {
    let problem = Manufactured::Ma2.problem(Domain::UnitDisk);
    let study = StudyConfig {
        base_h: 0.5,
        levels: 2,
        probe_resolution: 64,
        error_resolution: 64,
        ..StudyConfig::default()
    };
    let cfg = SolverConfig {
        max_iters: 4,
        ..SolverConfig::default()
    };
    let table = |_| {
        let mut out = Vec::new();
        write_convergence_csv(
            &convergence_study(&problem, &study, &cfg).unwrap(),
            &mut out,
        )
        .unwrap();
        out
    };
    let (a, b) = (table(0), table(1));
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
}

#[test]
fn fixed_delta_study_error_is_nonincreasing() {
    let problem = Manufactured::Ma2.problem(Domain::UnitDisk);
    let study = StudyConfig {
        delta_rule: DeltaRule::Fixed(0.7),
        ..StudyConfig::default()
    };
    let rows = convergence_study(&problem, &study, &SolverConfig::default()).unwrap();
    let e: Vec<f64> = rows.iter().map(|r| r.e_l2).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "e_l2 = {e:?}");
    let rate = rows.last().unwrap().rate_l2.unwrap();
    assert!(
        rate >= KernelFamily::C4.sobolev_order() - 3.0,
        "rate {rate}"
    );
}

#[test]
fn bernstein_ratio_grows_as_delta_shrinks() {
    let domain = Domain::UnitSquare;
    let y = generate_points(&domain, 0.1, Role::Trial, 0).unwrap();
    let spaces: Vec<TrialSpace> = [0.8, 0.4]
        .iter()
        .map(|&d| TrialSpace::new(&y, ScaledKernel::new(KernelFamily::C4, d).unwrap()).unwrap())
        .collect();
    let report = bernstein_probe(&domain, &spaces, 10, 96, 1).unwrap();
    assert!(
        report.levels[1].max_ratio > report.levels[0].max_ratio,
        "{report:?}"
    );
    assert!(report.levels.iter().all(|l| l.max_ratio > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn l2_error_is_metric_like(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, k in 0.5f64..4.0) {
        let d = Domain::UnitDisk;
        let fa = move |p: &Point| a * p.x + (k * p.y).sin();
        let fb = move |p: &Point| b * p.y * p.y;
        let fc = move |p: &Point| c + p.x * p.y;
        let ab = l2_error(&d, fa, fb, 64).unwrap();
        let ba = l2_error(&d, fb, fa, 64).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(l2_error(&d, fa, fa, 64).unwrap(), 0.0);
        let bc = l2_error(&d, fb, fc, 64).unwrap();
        let ac = l2_error(&d, fa, fc, 64).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }
}
