use frontlab::boundary::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn curve(case: CaseId, edit: impl FnOnce(&mut CaseSpec)) -> BoundaryCurve {
    let mut s = CaseSpec::new(case);
    edit(&mut s);
    make_boundary(&s).unwrap()
}

fn all_curves() -> Vec<BoundaryCurve> {
    let t: Vec<f64> = (0..=10).map(|i| i as f64 * 10.0).collect();
    let r: Vec<f64> = t.iter().map(|x| -3.0 / (1.0 + x).sqrt()).collect();
    vec![
        BoundaryCurve::linear(2.0),
        curve(CaseId::A, |s| s.nu = Some(1.5)),
        curve(CaseId::B, |s| s.nu = Some(0.0)),
        curve(CaseId::C, |_| {}),
        curve(CaseId::D, |s| s.nu = Some(-3.0)),
        curve(CaseId::Theorem2, |_| {}),
        curve(CaseId::Theorem2, |s| s.c = Some(-3.0 * PI.sqrt())),
        curve(CaseId::Theorem2, |s| s.power = Some((0.75, 2.0))),
        curve(CaseId::Theorem2, |s| s.table = Some((t, r))),
    ]
}

#[test]
fn case_b_derivatives_match_finite_differences() {
    let c = curve(CaseId::B, |s| s.nu = Some(0.0));
    assert_eq!(c.m1(0.0), 1.5);
    let h = 1e-4;
    for t in [0.5, 2.0, 40.0] {
        let fd1 = (c.m(t + h) - c.m(t - h)) / (2.0 * h);
        let fd2 = (c.m(t + h) - 2.0 * c.m(t) + c.m(t - h)) / (h * h);
        assert!((fd1 - (2.0 - 0.5 / (1.0 + t))).abs() < 1e-8);
        assert!((fd2 - 0.5 / (1.0 + t).powi(2)).abs() < 1e-5);
    }
}

#[test]
fn theorem2_curves_start_at_zero() {
    let c = curve(CaseId::Theorem2, |s| s.c = Some(0.0));
    assert_eq!(c.m(0.0), 0.0);
    assert!((c.m(3.0) - (6.0 - 1.5 * 4f64.ln())).abs() < 1e-13);
    let e = curve(CaseId::Theorem2, |s| s.c = Some(-3.0 * PI.sqrt()));
    assert!((-3.0 * PI.sqrt() - -5.31736).abs() < 1e-5);
    assert!((e.r(0.0) + e.a).abs() < 1e-14);
    assert!(e.m(0.0).abs() < 1e-14);
}

#[test]
fn theorem2_curves_approach_the_bramson_form() {
    for c in all_curves()
        .into_iter()
        .filter(|c| c.case == CaseId::Theorem2)
    {
        let gap = |t: f64| (c.m(t) - (2.0 * t - 1.5 * (t + 1.0).ln() + c.a)).abs();
        assert!(gap(1e4) <= gap(1e3) + 1e-15, "{}", c.label());
        assert!(gap(1e4) < 0.1, "{}: {}", c.label(), gap(1e4));
    }
}

#[test]
fn delta_examples() {
    assert_eq!(
        compute_delta(&BoundaryCurve::linear(2.0), 1e-8)
            .unwrap()
            .value,
        0.0
    );
    let plain = compute_delta(&curve(CaseId::Theorem2, |_| {}), 1e-8).unwrap();
    assert!((plain.value - 0.5625).abs() < 1e-8);
    let ebert = curve(CaseId::Theorem2, |s| s.c = Some(-3.0 * PI.sqrt()));
    let a = compute_delta(&ebert, 1e-6).unwrap();
    let b = compute_delta(&ebert, 5e-7).unwrap();
    assert!(a.value.is_finite());
    assert!((a.value - b.value).abs() < 1e-6);
    // the −3√π/√(1+t) correction pushes m′ − 2 towards zero early on, so Δ drops below 9/16
    assert!(a.value < 0.5625);
}

#[test]
fn halving_tolerance_halves_truncation_bound() {
    for c in all_curves().into_iter().filter(|c| !c.is_linear()) {
        let a = compute_delta(&c, 1e-5).unwrap();
        let b = compute_delta(&c, 5e-6).unwrap();
        assert!(
            b.truncation_bound <= 0.5 * a.truncation_bound * (1.0 + 1e-9),
            "{}",
            c.label()
        );
        assert!(a.truncation_bound + a.quad_error < 1e-5);
    }
}

#[test]
fn regularity_of_spliced_power_fails() {
    let grid: Vec<f64> = (0..=400)
        .map(|i| 10f64.powf(i as f64 / 100.0) - 1.0)
        .collect();
    let good = verify_regularity(&curve(CaseId::Theorem2, |s| s.c = Some(-1.0)), &grid, 0.5);
    assert!(good.pass(), "{good:?}");
    let bad = verify_regularity(
        &curve(CaseId::Theorem2, |s| s.power = Some((0.25, 1.0))),
        &grid,
        0.5,
    );
    assert!(!bad.r2_bounded);
    let b = verify_regularity(&curve(CaseId::B, |s| s.nu = Some(0.0)), &grid, 0.5);
    assert!((b.sup_m2 - 0.5).abs() < 1e-12);
}

#[test]
fn relaxed_mode_flags_nonzero_start() {
    let mut s = CaseSpec::new(CaseId::D);
    s.a = Some(0.7);
    assert!(matches!(
        make_boundary(&s),
        Err(BoundaryError::NonzeroStart { .. })
    ));
    s.relaxed = true;
    let c = make_boundary(&s).unwrap();
    assert!(c.start_flagged);
    assert!(!verify_regularity(&c, &[0.0, 1.0, 10.0], 0.5).anchored);
}

#[test]
fn config_keys_are_parsed() {
    let mut s = CaseSpec::new(CaseId::Linear);
    for (k, v) in [
        ("case", "thm2"),
        ("r_table", "0:1,10:0.5,20:0.2"),
        ("relaxed", "yes"),
    ] {
        assert!(s.apply(k, v).unwrap());
    }
    assert!(!s.apply("unrelated", "1").unwrap());
    assert!(s.apply("gamma", "x").is_err());
    assert_eq!(s.case, CaseId::Theorem2);
    assert!(s.relaxed);
    let c = make_boundary(&s).unwrap();
    assert!(c.m(0.0).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]
    #[test]
    fn derivatives_match_centered_differences(t in 0.05f64..500.0, k in 0usize..9) {
        let c = &all_curves()[k];
        let (m, m1, m2) = c.eval3(t);
        let err = |h: f64| {
            let fd1 = (c.m(t + h) - c.m(t - h)) / (2.0 * h);
            let fd2 = (c.m(t + h) - 2.0 * m + c.m(t - h)) / (h * h);
            ((fd1 - m1).abs(), (fd2 - m2).abs())
        };
        let h = 0.02 * (1.0 + t).min(2.0);
        let (e1, e2) = err(h);
        let (f1, f2) = err(h / 2.0);
        // O(h²): halving the step cuts the error by ~4, up to rounding
        prop_assert!(f1 <= 0.3 * e1 + 1e-9, "{}: m' {e1} -> {f1}", c.label());
        prop_assert!(f2 <= 0.3 * e2 + 1e-6, "{}: m'' {e2} -> {f2}", c.label());
    }
}
