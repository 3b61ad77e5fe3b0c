use frontlab::bessel::{bridge_time, mean_displacement, sample_bessel_path, sample_bridge_to_zero};
use frontlab::boundary::{compute_delta, make_boundary, BoundaryCurve, CaseId, CaseSpec};
use frontlab::functionals::*;
use frontlab::numerics::quad;
use frontlab::numerics::stats::mean_stderr;
use proptest::prelude::*;

fn spec_for(case: CaseId) -> FunctionalSpec {
    FunctionalSpec::new(make_boundary(&CaseSpec::new(case)).unwrap())
}

fn i_samples(spec: &FunctionalSpec, y: f64, n: u64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let p = sample_bessel_path(y, &spec.grid(), 1000 + k).unwrap();
            integral_i(spec, &p, y).unwrap().value
        })
        .collect()
}

#[test]
fn linear_boundary_gives_trivial_functionals() {
    let spec = FunctionalSpec::new(BoundaryCurve::linear(2.0));
    assert!(i_samples(&spec, 1.0, 20).iter().all(|v| *v == 0.0));
    let b = sample_bridge_to_zero(1.0, 5.0, &[0.0, 1.0, 2.0, 4.0], 3).unwrap();
    assert_eq!(integral_i_t(&spec, &b, 1.0, 0.0, 5.0).unwrap().value, 0.0);
    assert_eq!(estimate_psi_infinity(&spec, 3.0, 200, 1).unwrap().mean, 1.0);
    let w = estimate_w(&spec, 1.0, 0.5, 200, 1).unwrap();
    assert!(w.mean.abs() <= 3.0 * w.stderr + 1e-15);
}

#[test]
fn mean_of_i_matches_fubini_quadrature() {
    // E[I(1)] = ½∫ m″(s) E[ξ¹_s − 1] ds with the closed-form mean displacement
    let mut cs = CaseSpec::new(CaseId::B);
    cs.nu = Some(0.0);
    let curve = make_boundary(&cs).unwrap();
    let spec = FunctionalSpec::new(curve.clone());
    let (mean, se) = mean_stderr(&i_samples(&spec, 1.0, 4000));
    let mut breaks = vec![0.0];
    let mut b = 1e-3;
    while b < spec.horizon {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(spec.horizon);
    let oracle = quad::simpson_breaks(
        |s| 0.5 * curve.m2(s) * mean_displacement(1.0, s),
        &breaks,
        1e-9,
    )
    .value;
    assert!(
        (mean - oracle).abs() < 3.0 * se,
        "{mean} ± {se} vs {oracle}"
    );
}

#[test]
fn doubling_horizon_moves_mean_less_than_tail_bound() {
    let spec = spec_for(CaseId::Theorem2);
    let mut wide = spec.clone();
    wide.horizon *= 2.0;
    let (a, _) = mean_stderr(&i_samples(&spec, 1.0, 500));
    let (b, _) = mean_stderr(&i_samples(&wide, 1.0, 500));
    assert!(
        (a - b).abs() < spec.tail_bound(),
        "{a} vs {b}, bound {}",
        spec.tail_bound()
    );
}

#[test]
fn time_change_identity_on_one_driver() {
    let spec = spec_for(CaseId::Theorem2);
    let t = 50.0;
    let s_grid: Vec<f64> = (0..=4990).map(|k| k as f64 * 0.01).collect();
    let u_grid: Vec<f64> = s_grid.iter().map(|&s| bridge_time(s, t)).collect();
    for seed in 0..5 {
        let bridge = sample_bridge_to_zero(1.0, t, &s_grid, seed).unwrap();
        let bessel = sample_bessel_path(1.0, &u_grid, seed).unwrap();
        let a = integral_i_t(&spec, &bridge, 1.0, 0.0, t).unwrap();
        let b = integral_i_t_time_changed(&spec, &bessel, 1.0, t).unwrap();
        let tol = a.quad_error + b.quad_error + b.tail_bound + 1e-3;
        assert!(
            (a.value - b.value).abs() < tol,
            "{} vs {} (tol {tol})",
            a.value,
            b.value
        );
    }
}

#[test]
fn finite_time_functional_approaches_infinite_one() {
    let spec = spec_for(CaseId::Theorem2);
    let (mut it, mut i) = (Vec::new(), Vec::new());
    for k in 0..2000 {
        let p = sample_bessel_path(1.0, &spec.grid(), 50_000 + k).unwrap();
        it.push(
            integral_i_t_time_changed(&spec, &p, 1.0, 1e4)
                .unwrap()
                .value,
        );
        i.push(integral_i(&spec, &p, 1.0).unwrap().value);
    }
    let (a, sa) = mean_stderr(&it);
    let (b, sb) = mean_stderr(&i);
    assert!(
        (a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(),
        "{a} vs {b}"
    );
}

#[test]
fn psi_bounded_away_from_zero_and_infinity() {
    let spec = spec_for(CaseId::Theorem2);
    let mut all = Vec::new();
    for y in [0.0, 1.0, 10.0, 100.0] {
        for t in [10.0, 100.0] {
            all.push(estimate_psi(&spec, y, 0.0, t, 2000, 5).unwrap().mean);
        }
    }
    let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = all.iter().cloned().fold(0.0, f64::max);
    // near y = 0, Jensen gives ψ ≥ e^{E I(0)} = e^{1.5√π} ≈ 14
    assert!(lo > 0.5 && hi < 50.0, "{all:?}");
}

#[test]
fn psi_infinity_approaches_its_large_y_limit() {
    let spec = spec_for(CaseId::Theorem2);
    let limit = compute_delta(&spec.curve, 1e-8).unwrap().value.exp();
    let est: Vec<(f64, f64)> = [1.0, 4.0, 16.0, 64.0]
        .iter()
        .map(|&y| {
            let e = estimate_psi_infinity(&spec, y, 20_000, 9).unwrap();
            ((e.mean - limit).abs(), e.stderr)
        })
        .collect();
    for w in est.windows(2) {
        assert!(w[1].0 < w[0].0 + 3.0 * (w[0].1 + w[1].1), "{est:?}");
    }
    assert!(est[3].0 < est[0].0);
}

#[test]
fn endpoint_dependence_decays_with_time() {
    // |ψₜ(y,1) − ψₜ(y,0)| ≤ C log t / t: fitted C at t and 2t within a factor 2
    let spec = spec_for(CaseId::Theorem2);
    let c: Vec<f64> = [10.0f64, 20.0]
        .iter()
        .map(|&t| {
            let d = estimate_psi_x_dependence(&spec, 1.0, 1.0, t, 4000, 2).unwrap();
            assert!(
                d.mean.abs() > 3.0 * d.stderr,
                "t={t}: {} ± {}",
                d.mean,
                d.stderr
            );
            d.mean.abs() * t / t.ln()
        })
        .collect();
    let r = c[1] / c[0];
    assert!((0.5..=2.0).contains(&r), "{c:?}");
}

#[test]
fn w_at_origin_shows_no_growth() {
    let spec = spec_for(CaseId::Theorem2);
    let w: Vec<_> = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&s| estimate_w(&spec, 0.0, s, 20_000, 4).unwrap())
        .collect();
    let (a, b) = (&w[0], &w[2]);
    assert!(
        b.mean.abs() <= a.mean.abs() + 3.0 * (a.stderr + b.stderr),
        "{w:?}"
    );
}

#[test]
fn psi_invariant_under_path_grid_refinement() {
    let spec = spec_for(CaseId::Theorem2);
    let mut fine = spec.clone();
    fine.ratio = 1.02;
    fine.first_node = 5e-4;
    let a = estimate_psi_infinity(&spec, 1.0, 20_000, 6).unwrap();
    let b = estimate_psi_infinity(&fine, 1.0, 20_000, 7).unwrap();
    assert!(
        (a.mean - b.mean).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(),
        "{a:?} vs {b:?}"
    );
}

#[test]
fn sample_variance_is_stable_as_n_doubles() {
    let spec = spec_for(CaseId::Theorem2);
    let a = estimate_psi_infinity(&spec, 1.0, 10_000, 8).unwrap();
    let b = estimate_psi_infinity(&spec, 1.0, 20_000, 8).unwrap();
    let va = a.stderr.powi(2) * 10_000.0;
    let vb = b.stderr.powi(2) * 20_000.0;
    assert!((vb / va - 1.0).abs() < 0.25, "{va} vs {vb}");
}

#[test]
fn antithetic_pairs_agree_with_plain_sampling() {
    let spec = spec_for(CaseId::Theorem2);
    let mut anti = spec.clone();
    anti.antithetic = true;
    let a = estimate_psi_infinity(&spec, 1.0, 4000, 3).unwrap();
    let b = estimate_psi_infinity(&anti, 1.0, 4000, 3).unwrap();
    assert!((a.mean - b.mean).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt());
    assert!(b.stderr > 0.0 && b.stderr.is_finite());
}

#[test]
fn estimates_are_reproducible_and_exported() {
    let spec = spec_for(CaseId::Theorem2);
    let a = estimate_psi(&spec, 2.0, 0.0, 30.0, 500, 11).unwrap();
    let b = estimate_psi(&spec, 2.0, 0.0, 30.0, 500, 11).unwrap();
    assert_eq!(a, b);
    let row = a.csv_row("thm2", 2.0, 0.0, 30.0);
    assert_eq!(
        row.split(',').count(),
        McEstimate::CSV_HEADER.split(',').count()
    );
    assert!(matches!(
        estimate_psi(&spec, -1.0, 0.0, 30.0, 500, 11),
        Err(FunctionalError::InvalidParameter { name: "y", .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn paired_residual_stderr_is_finite(y in 0.0f64..5.0, t in 5.0f64..200.0, seed in 0u64..1000) {
        let spec = spec_for(CaseId::Theorem2);
        let p = paired_psi(&spec, y, t, 200, seed).unwrap();
        prop_assert!(p.residual_stderr.is_finite() && p.residual_stderr >= 0.0);
        prop_assert!(p.psi_t.mean > 0.0 && p.psi_inf.mean > 0.0);
    }
}
