//! Monte Carlo estimation of the path functionals
//! I(y) = ½∫₀^∞ m″(s)(ξ^y_s − y) ds and its bridge analogue Iₜ(y, x).
//!
//! Bridges to 0 are never simulated directly: with u = st/(t−s),
//! Iₜ(y, 0) = ½∫₀^∞ m″(ut/(t+u)) (t/(t+u))³ (ξ^y_u − y) du,
//! so I and Iₜ are read off the same exact Bessel path with two weight vectors.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bessel::{self, BesselError, Path, RadialWalker};
use crate::boundary::BoundaryCurve;
use crate::numerics::quad;
use crate::numerics::rng::{map_indexed, task_rng};
use crate::numerics::stats::{covariance_stderr, mean_stderr};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("path ends at {end} but the horizon is {horizon}")]
    PathTooShort { end: f64, horizon: f64 },
    #[error("path quadrature error {error:.3e} exceeds tolerance {tol:.3e}; refine the grid")]
    GridTooCoarse { error: f64, tol: f64 },
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("bridge path targets {found:?}, expected {expected:?}")]
    WrongTarget {
        found: Option<(f64, f64)>,
        expected: (f64, f64),
    },
    #[error("invalid parameter {name}={value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error(transparent)]
    Bessel(#[from] BesselError),
}

/// Minimum ensemble size for the expectation estimators.
pub const MIN_SAMPLES: usize = 100;

/// Settings shared by all functionals of one boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    pub curve: BoundaryCurve,
    /// C in |m″(s)| ≤ C/(1+s)².
    pub m2_bound: f64,
    /// Integration horizon S_max for I.
    pub horizon: f64,
    /// First positive node and ratio of the geometric path grid.
    pub first_node: f64,
    pub ratio: f64,
    /// Per-path tolerance on the fine-vs-coarsened trapezoid difference.
    pub quad_tol: f64,
    /// Step cap for Euler bridges (x > 0).
    pub dt_max: f64,
    /// Pair each path with its reflection in the driving noise.
    pub antithetic: bool,
}

impl FunctionalSpec {
    /// Horizon chosen so the analytic tail bound on I is below 10⁻³.
    pub fn new(curve: BoundaryCurve) -> Self {
        Self::with_tail_target(curve, 1e-3)
    }

    pub fn with_tail_target(curve: BoundaryCurve, target: f64) -> Self {
        let c = curve.m2_bound();
        let horizon = horizon_for(c, target);
        Self {
            curve,
            m2_bound: c,
            horizon,
            first_node: 1e-3,
            ratio: 1.04,
            quad_tol: 0.05,
            dt_max: 0.01,
            antithetic: false,
        }
    }

    /// Bound on ½∫_{S_max}^∞ |m″(s)| E|ξ^y_s − y| ds.
    pub fn tail_bound(&self) -> f64 {
        i_tail_bound(self.m2_bound, self.horizon)
    }

    /// Geometric grid 0, first, first·ratio, …, horizon.
    pub fn grid(&self) -> Vec<f64> {
        bessel::geometric_grid(self.horizon, self.first_node, self.ratio)
    }

    /// The path grid with extra points merged in.
    pub fn grid_with(&self, extra: &[f64]) -> Vec<f64> {
        let mut g = self.grid();
        g.extend(extra.iter().filter(|&&s| s > 0.0 && s < self.horizon));
        g.sort_by(|a, b| a.total_cmp(b));
        g.dedup();
        g
    }
}

/// ½·C·(4/√π)·∫_S^∞ √s/(1+s)² ds, using E[ξ⁰_s] = 4√(s/π).
pub fn i_tail_bound(c: f64, s: f64) -> f64 {
    let r = s.sqrt();
    0.5 * c * 4.0 / PI.sqrt() * (0.5 * PI - r.atan() + r / (1.0 + s))
}

fn horizon_for(c: f64, target: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (1.0f64, 1e18f64);
    if i_tail_bound(c, lo) <= target {
        return lo;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if i_tail_bound(c, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Value of a path functional with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathIntegral {
    pub value: f64,
    pub tail_bound: f64,
    /// |fine − coarsened| trapezoid difference.
    pub quad_error: f64,
}

/// Trapezoid weights on a grid, for the full and the every-other-node rule.
fn trapezoid_weights(grid: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let mut fine = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (grid[k + 1] - grid[k]);
        fine[k] += h;
        fine[k + 1] += h;
    }
    let mut coarse = vec![0.0; n];
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    for w in idx.windows(2) {
        let h = 0.5 * (grid[w[1]] - grid[w[0]]);
        coarse[w[0]] += h;
        coarse[w[1]] += h;
    }
    (fine, coarse)
}

/// Per-node weights for I and for Iₜ(·, 0) on a u-grid.
#[derive(Debug, Clone)]
struct Weights {
    fine: Vec<f64>,
    coarse: Vec<f64>,
}

impl Weights {
    fn new(grid: &[f64], kernel: impl Fn(f64) -> f64) -> Self {
        let (f, c) = trapezoid_weights(grid);
        let k: Vec<f64> = grid.iter().map(|&u| kernel(u)).collect();
        Self {
            fine: f.iter().zip(&k).map(|(a, b)| a * b).collect(),
            coarse: c.iter().zip(&k).map(|(a, b)| a * b).collect(),
        }
    }

    fn for_i(curve: &BoundaryCurve, grid: &[f64]) -> Self {
        Self::new(grid, |s| 0.5 * curve.m2(s))
    }

    fn for_it(curve: &BoundaryCurve, grid: &[f64], t: f64) -> Self {
        Self::new(grid, |u| {
            let r = t / (t + u);
            0.5 * curve.m2(u * r) * r * r * r
        })
    }
}

/// I(y) on an exact Bessel path, by the trapezoid rule on the path grid up to the horizon.
pub fn integral_i(
    spec: &FunctionalSpec,
    path: &Path,
    y: f64,
) -> Result<PathIntegral, FunctionalError> {
    let end = *path.grid.last().unwrap();
    if end < spec.horizon * (1.0 - 1e-12) {
        return Err(FunctionalError::PathTooShort {
            end,
            horizon: spec.horizon,
        });
    }
    let n = path
        .grid
        .iter()
        .take_while(|&&s| s <= spec.horizon * (1.0 + 1e-12))
        .count();
    let grid = &path.grid[..n];
    let w = Weights::for_i(&spec.curve, grid);
    let (fine, coarse) = dot2(&w, &path.values[..n], y);
    finish(fine, coarse, spec.tail_bound(), spec.quad_tol)
}

fn dot2(w: &Weights, values: &[f64], y: f64) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for ((wf, wc), v) in w.fine.iter().zip(&w.coarse).zip(values) {
        a += wf * (v - y);
        b += wc * (v - y);
    }
    (a, b)
}

fn finish(fine: f64, coarse: f64, tail: f64, tol: f64) -> Result<PathIntegral, FunctionalError> {
    let err = (fine - coarse).abs();
    if err > tol {
        return Err(FunctionalError::GridTooCoarse { error: err, tol });
    }
    Ok(PathIntegral {
        value: fine,
        tail_bound: tail,
        quad_error: err,
    })
}

/// Iₜ(y, x) on a bridge path: trapezoid of ½m″(s)(ξ_s − (y + (x−y)s/t)) over [0, t].
pub fn integral_i_t(
    spec: &FunctionalSpec,
    bridge: &Path,
    y: f64,
    x: f64,
    t: f64,
) -> Result<PathIntegral, FunctionalError> {
    match bridge.target {
        Some((bx, bt)) if (bx - x).abs() < 1e-12 && (bt - t).abs() < 1e-12 => {}
        found => {
            return Err(FunctionalError::WrongTarget {
                found,
                expected: (x, t),
            })
        }
    }
    let mut grid = bridge.grid.clone();
    let mut vals = bridge.values.clone();
    if *grid.last().unwrap() < t {
        grid.push(t);
        vals.push(x);
    }
    let centred: Vec<f64> = grid
        .iter()
        .zip(&vals)
        .map(|(&s, &v)| v - (y + (x - y) * s / t))
        .collect();
    let w = Weights::for_i(&spec.curve, &grid);
    let (fine, coarse) = dot2(&w, &centred, 0.0);
    finish(fine, coarse, 0.0, spec.quad_tol)
}

/// Iₜ(y, 0) from the Bessel path behind the bridge, integrated in the Bessel time u.
pub fn integral_i_t_time_changed(
    spec: &FunctionalSpec,
    path: &Path,
    y: f64,
    t: f64,
) -> Result<PathIntegral, FunctionalError> {
    let w = Weights::for_it(&spec.curve, &path.grid, t);
    let (fine, coarse) = dot2(&w, &path.values, y);
    let end = *path.grid.last().unwrap();
    finish(fine, coarse, it_tail_bound(spec, t, end), spec.quad_tol)
}

/// Tail of the time-changed Iₜ integral past `u0`, with the same E|ξ − y| ≤ 4√(u/π) bound.
fn it_tail_bound(spec: &FunctionalSpec, t: f64, u0: f64) -> f64 {
    let c = spec.m2_bound;
    if c == 0.0 {
        return 0.0;
    }
    let f = |u: f64| {
        let r = t / (t + u);
        let s = u * r;
        0.5 * c / ((1.0 + s) * (1.0 + s)) * r * r * r * 4.0 * (u / PI).sqrt()
    };
    quad::simpson_to_infinity(f, u0, u0.max(1.0), 1e-12).value
}

/// Monte Carlo estimate with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Analytic bound on the horizon-truncation bias.
    pub truncation_bound: f64,
    /// |fine − coarsened| difference of the ensemble means.
    pub quad_error: f64,
}

impl McEstimate {
    pub const CSV_HEADER: &'static str = "curve,y,x,t,n,mean,stderr,bound,seed";

    fn exact(value: f64, n: usize, seed: u64) -> Self {
        Self {
            mean: value,
            stderr: 0.0,
            n_samples: n,
            seed,
            truncation_bound: 0.0,
            quad_error: 0.0,
        }
    }

    pub fn csv_row(&self, curve: &str, y: f64, x: f64, t: f64) -> String {
        format!(
            "{curve},{y},{x},{t},{},{:.10e},{:.10e},{:.10e},{}",
            self.n_samples, self.mean, self.stderr, self.truncation_bound, self.seed
        )
    }
}

fn check_n(n: usize) -> Result<(), FunctionalError> {
    if n < MIN_SAMPLES {
        return Err(FunctionalError::TooFewSamples {
            n,
            min: MIN_SAMPLES,
        });
    }
    Ok(())
}

fn check_nonneg(name: &'static str, value: f64) -> Result<(), FunctionalError> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(FunctionalError::InvalidParameter { name, value });
    }
    Ok(())
}

/// Generator and noise sign for ensemble member `i`.
fn member_rng(spec: &FunctionalSpec, seed: u64, i: usize) -> (ChaCha8Rng, f64) {
    if spec.antithetic {
        (
            task_rng(seed, (i / 2) as u64),
            if i % 2 == 1 { -1.0 } else { 1.0 },
        )
    } else {
        (task_rng(seed, i as u64), 1.0)
    }
}

/// Walk an exact Bessel path over `grid`, calling `visit(k, ξ)` at every node.
fn walk(y: f64, grid: &[f64], rng: &mut ChaCha8Rng, sign: f64, mut visit: impl FnMut(usize, f64)) {
    if sign > 0.0 {
        let mut w = RadialWalker::new(y);
        visit(0, y);
        for k in 1..grid.len() {
            visit(k, w.advance(grid[k] - grid[k - 1], rng));
        }
    } else {
        let mut pos = [y, 0.0, 0.0];
        visit(0, y);
        for k in 1..grid.len() {
            let sd = (2.0 * (grid[k] - grid[k - 1])).sqrt();
            for p in &mut pos {
                let z: f64 = rng.sample(StandardNormal);
                *p -= sd * z;
            }
            visit(
                k,
                (pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2]).sqrt(),
            );
        }
    }
}

/// Per-path values from one ensemble; reduced into estimates by the callers.
struct Ensemble {
    /// samples[i] = per-path tuple of functionals.
    samples: Vec<Vec<f64>>,
}

impl Ensemble {
    fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    /// Mean and stderr of a column, averaging antithetic pairs first.
    fn estimate(&self, spec: &FunctionalSpec, j: usize) -> (f64, f64) {
        let col = self.column(j);
        if spec.antithetic {
            let pairs: Vec<f64> = col
                .chunks(2)
                .map(|c| c.iter().sum::<f64>() / c.len() as f64)
                .collect();
            mean_stderr(&pairs)
        } else {
            mean_stderr(&col)
        }
    }
}

fn run_ensemble<F>(
    spec: &FunctionalSpec,
    y: f64,
    grid: &[f64],
    n: usize,
    seed: u64,
    per_path: F,
) -> Ensemble
where
    F: Fn(&[f64]) -> Vec<f64> + Sync + Send,
{
    let samples = map_indexed(n, seed, |i, _| {
        let (mut rng, sign) = member_rng(spec, seed, i);
        let mut xi = Vec::with_capacity(grid.len());
        walk(y, grid, &mut rng, sign, |_, v| xi.push(v));
        per_path(&xi)
    });
    Ensemble { samples }
}

/// ψ_∞(y) = E[e^{I(y)}].
pub fn estimate_psi_infinity(
    spec: &FunctionalSpec,
    y: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate, FunctionalError> {
    check_n(n)?;
    check_nonneg("y", y)?;
    if spec.curve.is_linear() {
        return Ok(McEstimate::exact(1.0, n, seed));
    }
    let grid = spec.grid();
    let w = Weights::for_i(&spec.curve, &grid);
    let ens = run_ensemble(spec, y, &grid, n, seed, |xi| {
        let (f, c) = dot2(&w, xi, y);
        vec![f.exp(), c.exp()]
    });
    let (mean, stderr) = ens.estimate(spec, 0);
    let (coarse, _) = ens.estimate(spec, 1);
    Ok(McEstimate {
        mean,
        stderr,
        n_samples: n,
        seed,
        truncation_bound: mean * spec.tail_bound(),
        quad_error: (mean - coarse).abs(),
    })
}

/// ψₜ(y, x) = E[e^{Iₜ(y,x)}]: exact time change for x = 0, Euler bridges otherwise.
pub fn estimate_psi(
    spec: &FunctionalSpec,
    y: f64,
    x: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate, FunctionalError> {
    check_n(n)?;
    check_nonneg("y", y)?;
    check_nonneg("x", x)?;
    if !(t > 0.0) {
        return Err(FunctionalError::InvalidParameter {
            name: "t",
            value: t,
        });
    }
    if spec.curve.is_linear() {
        return Ok(McEstimate::exact(1.0, n, seed));
    }
    if x == 0.0 {
        let grid = spec.grid();
        let w = Weights::for_it(&spec.curve, &grid, t);
        let tail = it_tail_bound(spec, t, spec.horizon);
        let ens = run_ensemble(spec, y, &grid, n, seed, |xi| {
            let (f, c) = dot2(&w, xi, y);
            vec![f.exp(), c.exp()]
        });
        let (mean, stderr) = ens.estimate(spec, 0);
        let (coarse, _) = ens.estimate(spec, 1);
        return Ok(McEstimate {
            mean,
            stderr,
            n_samples: n,
            seed,
            truncation_bound: mean * tail,
            quad_error: (mean - coarse).abs(),
        });
    }
    let vals = euler_ensemble(spec, y, &[x], t, n, seed)?;
    let col: Vec<f64> = vals.iter().map(|v| v[0].exp()).collect();
    let coarse: Vec<f64> = vals.iter().map(|v| v[1].exp()).collect();
    let (mean, stderr) = mean_stderr(&col);
    Ok(McEstimate {
        mean,
        stderr,
        n_samples: n,
        seed,
        truncation_bound: 0.0,
        quad_error: (mean - mean_stderr(&coarse).0).abs(),
    })
}

/// ψₜ(y, x) − ψₜ(y, 0) from Euler bridges to x and to 0 on one driver per path.
pub fn estimate_psi_x_dependence(
    spec: &FunctionalSpec,
    y: f64,
    x: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate, FunctionalError> {
    check_n(n)?;
    check_nonneg("y", y)?;
    check_nonneg("x", x)?;
    if spec.curve.is_linear() {
        return Ok(McEstimate::exact(0.0, n, seed));
    }
    let vals = euler_ensemble(spec, y, &[x, 0.0], t, n, seed)?;
    let d: Vec<f64> = vals.iter().map(|v| v[0].exp() - v[2].exp()).collect();
    let (mean, stderr) = mean_stderr(&d);
    Ok(McEstimate {
        mean,
        stderr,
        n_samples: n,
        seed,
        truncation_bound: 0.0,
        quad_error: 0.0,
    })
}

/// Bridge grid used for Euler-based functionals.
pub fn euler_grid(spec: &FunctionalSpec, t: f64) -> Vec<f64> {
    bessel::bridge_grid(t, spec.first_node, 1.1, spec.dt_max)
}

/// For each path, Iₜ(y, x) (fine, coarse) for every endpoint in `xs`, all on one driver.
fn euler_ensemble(
    spec: &FunctionalSpec,
    y: f64,
    xs: &[f64],
    t: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, FunctionalError> {
    if !(t > 2.0 * spec.dt_max) {
        return Err(FunctionalError::InvalidParameter {
            name: "t",
            value: t,
        });
    }
    let grid = euler_grid(spec, t);
    // Refine to dt_max, as the direct sampler does.
    let mut fine = vec![0.0];
    for w in grid.windows(2) {
        let k = ((w[1] - w[0]) / spec.dt_max).ceil().max(1.0) as usize;
        for j in 1..=k {
            fine.push(w[0] + (w[1] - w[0]) * j as f64 / k as f64);
        }
    }
    let mut full = fine.clone();
    full.push(t);
    let (wf, wc) = trapezoid_weights(&full);
    let m2: Vec<f64> = full.iter().map(|&s| 0.5 * spec.curve.m2(s)).collect();
    let out = map_indexed(n, seed, |i, _| {
        let (mut rng, sign) = member_rng(spec, seed, i);
        let db: Vec<f64> = fine
            .windows(2)
            .map(|w| sign * (2.0 * (w[1] - w[0])).sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut row = Vec::with_capacity(2 * xs.len());
        for &x in xs {
            let mut vals = bessel::euler_bridge_from_driver(y, x, t, &fine, &db);
            vals.push(x);
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..full.len() {
                let c = m2[k] * (vals[k] - (y + (x - y) * full[k] / t));
                a += wf[k] * c;
                b += wc[k] * c;
            }
            row.push(a);
            row.push(b);
        }
        row
    });
    Ok(out)
}

/// E[I(y) − Iₜ(y)], both functionals evaluated on the same Bessel path.
pub fn estimate_drift_gap(
    spec: &FunctionalSpec,
    y: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate, FunctionalError> {
    Ok(paired_psi(spec, y, t, n, seed)?.gap)
}

/// ψₜ(y), ψ_∞(y) and E[I − Iₜ] from one ensemble, with the residual of
/// ψₜ ≈ ψ_∞(1 − E[I − Iₜ]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedPsi {
    pub psi_t: McEstimate,
    pub psi_inf: McEstimate,
    pub gap: McEstimate,
    /// ψₜ − ψ_∞(1 − gap), stderr by the delta method.
    pub residual: f64,
    pub residual_stderr: f64,
}

pub fn paired_psi(
    spec: &FunctionalSpec,
    y: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<PairedPsi, FunctionalError> {
    check_n(n)?;
    check_nonneg("y", y)?;
    if !(t > 0.0) {
        return Err(FunctionalError::InvalidParameter {
            name: "t",
            value: t,
        });
    }
    if spec.curve.is_linear() {
        let one = McEstimate::exact(1.0, n, seed);
        return Ok(PairedPsi {
            psi_t: one,
            psi_inf: one,
            gap: McEstimate::exact(0.0, n, seed),
            residual: 0.0,
            residual_stderr: 0.0,
        });
    }
    let grid = spec.grid();
    let wi = Weights::for_i(&spec.curve, &grid);
    let wt = Weights::for_it(&spec.curve, &grid, t);
    let ens = run_ensemble(spec, y, &grid, n, seed, |xi| {
        let (i_f, i_c) = dot2(&wi, xi, y);
        let (t_f, t_c) = dot2(&wt, xi, y);
        vec![
            t_f.exp(),
            i_f.exp(),
            i_f - t_f,
            t_c.exp(),
            i_c.exp(),
            i_c - t_c,
        ]
    });
    let tail_i = spec.tail_bound();
    let tail_t = it_tail_bound(spec, t, spec.horizon);
    let est = |j: usize, jc: usize, bound: f64, scale: bool| {
        let (mean, stderr) = ens.estimate(spec, j);
        let (coarse, _) = ens.estimate(spec, jc);
        McEstimate {
            mean,
            stderr,
            n_samples: n,
            seed,
            truncation_bound: if scale { mean * bound } else { bound },
            quad_error: (mean - coarse).abs(),
        }
    };
    let psi_t = est(0, 3, tail_t, true);
    let psi_inf = est(1, 4, tail_i, true);
    let gap = est(2, 5, tail_i + tail_t, false);
    let (a, b, d) = (psi_t.mean, psi_inf.mean, gap.mean);
    let infl: Vec<f64> = ens
        .samples
        .iter()
        .map(|s| s[0] - s[1] * (1.0 - d) + b * s[2])
        .collect();
    let infl = if spec.antithetic {
        infl.chunks(2)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect()
    } else {
        infl
    };
    Ok(PairedPsi {
        psi_t,
        psi_inf,
        gap,
        residual: a - b * (1.0 - d),
        residual_stderr: mean_stderr(&infl).1,
    })
}

/// w(y, s) = Cov(e^{I(y)}, ξ^y_s − y) from one ensemble.
pub fn estimate_w(
    spec: &FunctionalSpec,
    y: f64,
    s: f64,
    n: usize,
    seed: u64,
) -> Result<McEstimate, FunctionalError> {
    check_n(n)?;
    check_nonneg("y", y)?;
    if !(s > 0.0 && s < spec.horizon) {
        return Err(FunctionalError::InvalidParameter {
            name: "s",
            value: s,
        });
    }
    let grid = spec.grid_with(&[s]);
    let ks = grid.iter().position(|&g| g == s).unwrap();
    let w = Weights::for_i(&spec.curve, &grid);
    let ens = run_ensemble(spec, y, &grid, n, seed, |xi| {
        let (f, _) = dot2(&w, xi, y);
        vec![f.exp(), xi[ks] - y]
    });
    let (cov, stderr) = covariance_stderr(&ens.column(0), &ens.column(1));
    Ok(McEstimate {
        mean: cov,
        stderr,
        n_samples: n,
        seed,
        truncation_bound: 0.0,
        quad_error: 0.0,
    })
}
