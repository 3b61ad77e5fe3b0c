use frontlab::bessel::*;
use frontlab::numerics::rng::task_rng;
use frontlab::numerics::stats::{ks_two_sample, linear_fit, mean_stderr};
use rand::Rng;
use rand_distr::StandardNormal;

fn at(path: &Path, s: f64) -> f64 {
    let i = path
        .grid
        .iter()
        .position(|g| (*g - s).abs() < 1e-12)
        .expect("grid point");
    path.values[i]
}

#[test]
fn mean_of_bessel_from_zero_at_one() {
    let n = 100_000;
    let vals: Vec<f64> = (0..n)
        .map(|i| {
            sample_bessel_path(0.0, &[0.0, 1.0], 1_000 + i)
                .unwrap()
                .values[1]
        })
        .collect();
    let (m, se) = mean_stderr(&vals);
    assert!((m - 2.256_758_334_191_025).abs() < 3.0 * se, "{m} ± {se}");
}

#[test]
fn far_from_origin_looks_brownian() {
    let vals: Vec<f64> = (0..20_000)
        .map(|i| sample_bessel_path(1e3, &[0.0, 1.0], i).unwrap().values[1] - 1e3)
        .collect();
    let (m, se) = mean_stderr(&vals);
    assert!(m.abs() < 3.0 * se);
    let var = se * se * vals.len() as f64;
    assert!((var - 2.0).abs() < 0.1);
}

#[test]
fn bridge_to_zero_matches_direct_time_change() {
    let (y, t, s) = (2.0, 10.0, 5.0);
    let grid = [0.0, 2.5, 5.0];
    let n = 20_000;
    let bridge: Vec<f64> = (0..n)
        .map(|i| at(&sample_bridge_to_zero(y, t, &grid, i).unwrap(), s))
        .collect();
    // (t−s)/t · ξ^y at u = st/(t−s) = 10, from independent seeds.
    let direct: Vec<f64> = (0..n)
        .map(|i| {
            0.5 * sample_bessel_path(y, &[0.0, 10.0], 10_000_000 + i)
                .unwrap()
                .values[1]
        })
        .collect();
    let (a, sa) = mean_stderr(&bridge);
    let (b, sb) = mean_stderr(&direct);
    assert!(
        (a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(),
        "{a} vs {b}"
    );
}

#[test]
fn time_change_values_and_positivity() {
    let t = 4.0;
    let grid = bridge_grid(t, 0.01, 1.1, 0.01);
    let p = sample_bridge_to_zero(0.0, t, &grid, 5).unwrap();
    let u: Vec<f64> = grid.iter().map(|&s| bridge_time(s, t)).collect();
    let q = sample_bessel_path(0.0, &u, 5).unwrap();
    for ((s, b), x) in grid.iter().zip(&p.values).zip(&q.values).skip(1) {
        assert_eq!(*b, (t - s) / t * x);
        assert!(*b >= 0.0);
    }
}

#[test]
fn euler_bridge_agrees_in_law_with_exact_bridge() {
    let (y, t) = (1.0, 4.0);
    let grid = [0.0, 1.0, 2.0];
    let n = 10_000;
    let euler: Vec<f64> = (0..n)
        .map(|i| sample_bridge(y, 0.0, t, &grid, i, 0.01).unwrap().values[2])
        .collect();
    let exact: Vec<f64> = (0..n)
        .map(|i| {
            sample_bridge_to_zero(y, t, &grid, 500_000 + i)
                .unwrap()
                .values[2]
        })
        .collect();
    let (d, p) = ks_two_sample(&euler, &exact);
    assert!(p > 0.01, "KS D={d} p={p}");
}

#[test]
fn zero_to_zero_bridge_is_time_symmetric() {
    let grid = [0.0, 0.5, 1.0, 1.5];
    let n = 20_000;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..n {
        let p = sample_bridge(0.0, 0.0, 2.0, &grid, i, 0.005).unwrap();
        a.push(p.values[1]);
        b.push(p.values[3]);
    }
    let (ma, sa) = mean_stderr(&a);
    let (mb, sb) = mean_stderr(&b);
    assert!(
        (ma - mb).abs() < 3.0 * (sa * sa + sb * sb).sqrt(),
        "{ma} vs {mb}"
    );
}

#[test]
fn euler_bridges_ordered_in_endpoint() {
    let dt: f64 = 0.01;
    let tol = 1e-3 * dt.sqrt();
    let t = 5.0;
    let grid = bridge_grid(t, 0.01, 1.1, dt);
    let mut worst: f64 = 0.0;
    for seed in 0..2_000 {
        let fam = coupled_family(
            &[
                Member::Bridge { y: 1.0, x: 0.0, t },
                Member::Bridge { y: 1.0, x: 1.0, t },
            ],
            &grid,
            seed,
            dt,
        )
        .unwrap();
        let (lo, hi) = (&fam.members[0], &fam.members[1]);
        for (k, &s) in grid.iter().enumerate() {
            let d = hi.values[k] - lo.values[k];
            worst = worst.max(-d).max(d - s / t);
        }
    }
    assert!(worst < tol, "violation {worst}");
}

#[test]
fn single_member_family_reproduces_direct_sampler() {
    let grid = geometric_grid(10.0, 0.01, 1.2);
    let fam = coupled_family(&[Member::Bessel { y: 2.0 }], &grid, 17, 0.01).unwrap();
    assert_eq!(fam.members[0], sample_bessel_path(2.0, &grid, 17).unwrap());
    let fam = coupled_family(&[Member::BridgeToZero { y: 2.0, t: 20.0 }], &grid, 17, 0.01).unwrap();
    assert_eq!(
        fam.members[0],
        sample_bridge_to_zero(2.0, 20.0, &grid, 17).unwrap()
    );
}

#[test]
fn incompatible_family_is_rejected() {
    let grid = [0.0, 1.0, 5.0];
    let r = coupled_family(
        &[
            Member::Bessel { y: 0.0 },
            Member::BridgeToZero { y: 0.0, t: 5.0 },
        ],
        &grid,
        1,
        0.01,
    );
    assert!(matches!(r, Err(BesselError::IncompatibleCoupling(_))));
}

#[test]
fn bridge_approaches_bessel_as_horizon_grows() {
    let grid = [0.0, 0.25, 0.5, 1.0];
    let mut means = Vec::new();
    for &t in &[1e2, 1e3, 1e4] {
        let diffs: Vec<f64> = (0..4_000)
            .map(|seed| {
                let fam = coupled_family(
                    &[
                        Member::BridgeToZero { y: 0.0, t },
                        Member::Bessel { y: 0.0 },
                    ],
                    &grid,
                    seed,
                    0.005,
                )
                .unwrap();
                (fam.members[0].values[3] - fam.members[1].values[3]).abs()
            })
            .collect();
        means.push(mean_stderr(&diffs).0);
    }
    assert!(means[0] > means[1] && means[1] > means[2], "{means:?}");
}

/// Slope of log P(G > z) against z², and the largest chord slope (all must be < 0).
fn tail_slope(g: &[f64]) -> (f64, f64) {
    let mut sorted = g.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for q in [0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99] {
        let z = sorted[(q * n) as usize];
        x.push(z * z);
        y.push((1.0 - q).ln());
    }
    let fit = linear_fit(&x, &y).unwrap();
    let steepest_chord = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0]))
        .fold(f64::NEG_INFINITY, f64::max);
    (fit.slope, steepest_chord)
}

#[test]
fn fluctuation_statistic_has_gaussian_tail() {
    let grid = geometric_grid(100.0, 0.01, 1.1);
    let g: Vec<f64> = (0..10_000)
        .map(|i| fluctuation_statistic(&sample_bessel_path(0.0, &grid, i).unwrap(), 0.1).unwrap())
        .collect();
    let (slope, chord) = tail_slope(&g);
    assert!(slope < 0.0 && chord < 0.0, "slope {slope}, chord {chord}");

    let t = 50.0;
    let bgrid = bridge_grid(t, 0.01, 1.1, 0.01);
    let gb: Vec<f64> = (0..4_000)
        .map(|i| {
            let p = sample_bridge(2.0, 1.0, t, &bgrid, i, 0.01).unwrap();
            fluctuation_statistic(&p, 0.1).unwrap()
        })
        .collect();
    let (slope_b, chord_b) = tail_slope(&gb);
    assert!(
        slope_b < 0.0 && chord_b < 0.0,
        "bridge slope {slope_b}, chord {chord_b}"
    );
}

#[test]
fn csv_export() {
    let p = sample_bessel_path(1.0, &[0.0, 1.0], 3).unwrap();
    let csv = p.to_csv();
    assert!(csv.starts_with("s,value\n0,1\n1,"));
    assert_eq!(csv.lines().count(), 3);
}

/// Euler bridge to 0 against the exact bridge built from the same
/// three-dimensional Brownian motion, with the scalar driver taken as the
/// radial projection of its increments on a much finer grid.
#[test]
fn euler_bridge_strong_order_half() {
    let (y, t, s_end) = (1.0, 2.0, 1.0);
    let hs = [0.04, 0.02];
    let sub = 256usize;
    let hf = hs[1] / sub as f64;
    let nf = (s_end / hf).round() as usize;
    let n_paths = 2_000;
    let mut sq = [0.0; 2];
    for p in 0..n_paths {
        let mut rng = task_rng(77, p as u64);
        let mut pos: [f64; 3] = [y, 0.0, 0.0];
        let mut dbt = Vec::with_capacity(nf);
        for k in 0..nf {
            let (s0, s1) = (k as f64 * hf, (k + 1) as f64 * hf);
            let du = bridge_time(s1, t) - bridge_time(s0, t);
            let r = (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
            let mut proj = 0.0;
            for x in pos.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                let dw = (2.0 * du).sqrt() * z;
                proj += *x / r * dw;
                *x += dw;
            }
            dbt.push((t - s0) / t * proj);
        }
        let exact = (t - s_end) / t * (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt();
        for (j, &h) in hs.iter().enumerate() {
            let block = (h / hf).round() as usize;
            let n = nf / block;
            let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
            let db: Vec<f64> = (0..n)
                .map(|k| dbt[k * block..(k + 1) * block].iter().sum())
                .collect();
            let v = euler_bridge_from_driver(y, 0.0, t, &grid, &db);
            sq[j] += (v[n] - exact).powi(2);
        }
    }
    let ratio = (sq[0] / sq[1]).sqrt();
    assert!(
        (1.2..=1.7).contains(&ratio),
        "error ratio under step halving: {ratio}"
    );
}

/// Largest violation of `lhs <= rhs` over a pair of series.
fn excess(lhs: &[f64], rhs: &[f64]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn coupling_inequalities_hold_exactly() {
    let t = 100.0;
    let grid = geometric_grid(20.0, 0.01, 1.1);
    let mut worst = [f64::NEG_INFINITY; 6];
    for seed in 0..10_000 {
        let fam = coupled_family(
            &[
                Member::Bessel { y: 0.0 },
                Member::Bessel { y: 1.0 },
                Member::Brownian { y: 1.0 },
                Member::BridgeToZero { y: 1.0, t },
                Member::BridgeToZero { y: 3.0, t },
            ],
            &grid,
            seed,
            0.01,
        )
        .unwrap();
        let m = &fam.members;
        let shifted: Vec<f64> = m[0].values.iter().map(|v| v + 1.0).collect();
        let slack: Vec<f64> = grid
            .iter()
            .zip(&m[3].values)
            .map(|(s, v)| v + 2.0 * (t - s) / t)
            .collect();
        let diffs: Vec<f64> = m[1]
            .values
            .iter()
            .zip(&m[0].values)
            .map(|(a, b)| a - b)
            .collect();
        let checks = [
            excess(&m[2].values, &m[1].values),
            excess(&m[1].values, &shifted),
            excess(&m[0].values, &m[1].values),
            excess(&m[3].values, &m[4].values),
            excess(&m[4].values, &slack),
            diffs
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::NEG_INFINITY, f64::max),
        ];
        for (w, c) in worst.iter_mut().zip(checks) {
            *w = w.max(c);
        }
    }
    for (i, w) in worst.iter().enumerate() {
        assert!(*w <= 0.0, "check {i}: violation {w}");
    }
}

#[test]
fn samplers_are_deterministic() {
    let grid = bridge_grid(3.0, 0.01, 1.1, 0.01);
    assert_eq!(
        sample_bridge(1.0, 2.0, 3.0, &grid, 8, 0.01),
        sample_bridge(1.0, 2.0, 3.0, &grid, 8, 0.01)
    );
    assert_eq!(
        sample_bridge_to_zero(1.0, 3.0, &grid, 8),
        sample_bridge_to_zero(1.0, 3.0, &grid, 8)
    );
    let members = [
        Member::Bessel { y: 0.0 },
        Member::Bridge {
            y: 1.0,
            x: 0.5,
            t: 3.0,
        },
    ];
    assert_eq!(
        coupled_family(&members, &grid, 2, 0.01),
        coupled_family(&members, &grid, 2, 0.01)
    );
}
