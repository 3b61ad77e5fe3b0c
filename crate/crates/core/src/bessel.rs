//! Bessel-3 processes and bridges under the normalization E[(ΔB)²] = 2Δs,
//! so that dξ = dB + 2/ξ ds.
//!
//! Single paths are exact in law: ξ^y_s = |y e₁ + W_s| for a 3-dimensional
//! Brownian motion W with per-coordinate variance 2s, and bridges to 0 are the
//! time change ((t−s)/t)·ξ^y_{st/(t−s)}. Bridges to x > 0 and coupled families
//! use a drift-implicit Euler scheme driven by one scalar Brownian motion. That
//! scheme is monotone in the start and the endpoint, so the pathwise
//! comparisons between coupled members hold at every step.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::rng::task_rng;
use crate::numerics::special::coth;

/// Lower guard for the singular 2/ξ and coth drifts.
pub const FLOOR: f64 = 1e-12;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("start must be >= 0, got {0}")]
    NegativeStart(f64),
    #[error("endpoint must be >= 0, got {0}")]
    NegativeEndpoint(f64),
    #[error("bridge horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("grid point {s} is not before the bridge horizon {t}")]
    GridBeyondHorizon { s: f64, t: f64 },
    #[error("dt_max must be positive, got {0}")]
    InvalidStep(f64),
    #[error("incompatible coupling: {0}")]
    IncompatibleCoupling(String),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    InvalidEpsilon(f64),
    #[error("fluctuation statistic needs a grid point with s > 0")]
    NoPositiveTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Radial part of 3-dimensional Brownian motion.
    ExactBessel,
    /// Time-changed exact Bessel process (bridge to 0).
    TimechangeBridge,
    /// Drift-implicit Euler on the coth-drift bridge equation.
    EulerBridge,
    /// y + B for the scalar driver B.
    Brownian,
    /// Drift-implicit Euler on dξ = dB + 2/ξ ds.
    ImplicitBessel,
    /// Time change of an implicit-Euler Bessel path.
    ImplicitTimechangeBridge,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::ExactBessel => "exact_bessel",
            Construction::TimechangeBridge => "timechange_bridge",
            Construction::EulerBridge => "euler_bridge",
            Construction::Brownian => "brownian",
            Construction::ImplicitBessel => "implicit_bessel",
            Construction::ImplicitTimechangeBridge => "implicit_timechange_bridge",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub construction: Construction,
    pub start: f64,
    /// Bridge endpoint (x, t).
    pub target: Option<(f64, f64)>,
    pub seed: u64,
}

impl Path {
    /// Trend the path fluctuates around: y, or the chord y + (x − y)s/t for bridges.
    pub fn trend(&self, s: f64) -> f64 {
        match self.target {
            None => self.start,
            Some((x, t)) => self.start + (x - self.start) * s / t,
        }
    }

    /// `s,value` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,value\n");
        for (s, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{s},{v}\n"));
        }
        out
    }
}

fn check_grid(grid: &[f64]) -> Result<(), BesselError> {
    if grid.is_empty() {
        return Err(BesselError::InvalidGrid("empty"));
    }
    if grid[0] != 0.0 {
        return Err(BesselError::InvalidGrid("grid must start at 0"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(BesselError::InvalidGrid("grid must be strictly increasing"));
    }
    if grid.iter().any(|s| !s.is_finite()) {
        return Err(BesselError::InvalidGrid("non-finite grid point"));
    }
    Ok(())
}

/// Exact sampler for the radial part of y e₁ + W.
#[derive(Debug, Clone)]
pub(crate) struct RadialWalker {
    pos: [f64; 3],
}

impl RadialWalker {
    pub(crate) fn new(y: f64) -> Self {
        Self { pos: [y, 0.0, 0.0] }
    }

    /// Advance by `dt` and return the new radius.
    #[inline]
    pub(crate) fn advance(&mut self, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
        let sd = (2.0 * dt).sqrt();
        for p in &mut self.pos {
            let z: f64 = rng.sample(StandardNormal);
            *p += sd * z;
        }
        self.radius()
    }

    #[inline]
    pub(crate) fn radius(&self) -> f64 {
        (self.pos[0] * self.pos[0] + self.pos[1] * self.pos[1] + self.pos[2] * self.pos[2]).sqrt()
    }
}

/// Exact Bessel-3 path from `y` at the grid times.
pub fn sample_bessel_path(y: f64, grid: &[f64], seed: u64) -> Result<Path, BesselError> {
    if !(y >= 0.0) {
        return Err(BesselError::NegativeStart(y));
    }
    check_grid(grid)?;
    let mut rng = task_rng(seed, 0);
    Ok(Path {
        grid: grid.to_vec(),
        values: exact_values(y, grid, &mut rng),
        construction: Construction::ExactBessel,
        start: y,
        target: None,
        seed,
    })
}

fn exact_values(y: f64, grid: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w = RadialWalker::new(y);
    let mut values = Vec::with_capacity(grid.len());
    values.push(y);
    for win in grid.windows(2) {
        values.push(w.advance(win[1] - win[0], rng));
    }
    values
}

/// u = st/(t−s), the Bessel time behind bridge time s.
#[inline]
pub fn bridge_time(s: f64, t: f64) -> f64 {
    s * t / (t - s)
}

/// Exact Bessel bridge from `y` to 0 over `[0, t]` via the time change.
pub fn sample_bridge_to_zero(y: f64, t: f64, grid: &[f64], seed: u64) -> Result<Path, BesselError> {
    if !(y >= 0.0) {
        return Err(BesselError::NegativeStart(y));
    }
    if !(t > 0.0) {
        return Err(BesselError::InvalidHorizon(t));
    }
    check_grid(grid)?;
    if let Some(&s) = grid.iter().find(|&&s| s >= t) {
        return Err(BesselError::GridBeyondHorizon { s, t });
    }
    let u: Vec<f64> = grid.iter().map(|&s| bridge_time(s, t)).collect();
    let mut rng = task_rng(seed, 0);
    let xi = exact_values(y, &u, &mut rng);
    let values = grid
        .iter()
        .zip(xi)
        .map(|(&s, v)| if s == 0.0 { y } else { (t - s) / t * v })
        .collect();
    Ok(Path {
        grid: grid.to_vec(),
        values,
        construction: Construction::TimechangeBridge,
        start: y,
        target: Some((0.0, t)),
        seed,
    })
}

/// One drift-implicit step of dξ = dB + 2/ξ ds.
#[inline]
pub fn implicit_bessel_step(xi: f64, db: f64, h: f64) -> f64 {
    let a = xi + db;
    (0.5 * (a + (a * a + 8.0 * h).sqrt())).max(FLOOR)
}

/// One drift-implicit step of the bridge equation
/// dξ = dB̃ + (x/τ coth(xξ/2τ) − ξ/τ) ds, where `tau` = t − s at the new time.
pub fn implicit_bridge_step(xi: f64, db: f64, h: f64, x: f64, tau: f64) -> f64 {
    let a = xi + db;
    let k = 1.0 + h / tau;
    // Root of k ξ² − b ξ − 2h = 0.
    let quad_root = |b: f64| (b + (b * b + 8.0 * h * k).sqrt()) / (2.0 * k);
    let lo = quad_root(a);
    if x == 0.0 {
        return lo.max(FLOOR);
    }
    let c = h * x / tau;
    let f = |z: f64| k * z - c * coth(x * z / (2.0 * tau)) - a;
    let (mut lo, mut hi) = (lo, quad_root(a + c));
    let mut z = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fz = f(z);
        if fz > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let u = x * z / (2.0 * tau);
        let sh = u.sinh();
        let df = k + c * x / (2.0 * tau) / (sh * sh);
        let mut next = z - fz / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs().max(1e-300) || hi - lo <= 1e-15 * hi {
            z = next;
            break;
        }
        z = next;
    }
    z.max(FLOOR)
}

/// Run the implicit bridge scheme from given driver increments on `grid`
/// (grid[0] = 0, all points < t). Returns values at the grid points.
pub fn euler_bridge_from_driver(y: f64, x: f64, t: f64, grid: &[f64], db: &[f64]) -> Vec<f64> {
    debug_assert_eq!(db.len() + 1, grid.len());
    let mut out = Vec::with_capacity(grid.len());
    let mut xi = y;
    out.push(xi);
    for (k, win) in grid.windows(2).enumerate() {
        let h = win[1] - win[0];
        xi = implicit_bridge_step(xi, db[k], h, x, t - win[1]);
        out.push(xi);
    }
    out
}

/// Fine s-grid for an Euler bridge: the requested points below t − ε_end plus
/// substeps of at most `dt_max`, and the point t − ε_end itself.
fn refine_bridge_grid(grid: &[f64], t: f64, dt_max: f64) -> Vec<f64> {
    let stop = t - dt_max;
    let mut marks: Vec<f64> = grid.iter().cloned().filter(|&s| s < stop).collect();
    if stop > 0.0 {
        marks.push(stop);
    }
    let mut fine = vec![0.0];
    for w in marks.windows(2) {
        let n = ((w[1] - w[0]) / dt_max).ceil().max(1.0) as usize;
        for j in 1..n {
            fine.push(w[0] + (w[1] - w[0]) * j as f64 / n as f64);
        }
        fine.push(w[1]);
    }
    fine
}

/// Read values of a fine bridge path off at `grid`, interpolating linearly to
/// `x` on the last segment [t − ε_end, t].
fn read_bridge(grid: &[f64], fine: &[f64], vals: &[f64], x: f64, t: f64) -> Vec<f64> {
    let last_s = *fine.last().unwrap();
    let last_v = *vals.last().unwrap();
    let mut j = 0;
    grid.iter()
        .map(|&s| {
            if s > last_s {
                let w = (s - last_s) / (t - last_s);
                return last_v + w * (x - last_v);
            }
            while fine[j] < s {
                j += 1;
            }
            vals[j]
        })
        .collect()
}

/// Approximate Bessel bridge from `y` to `x` over `[0, t]`.
///
/// Drift-implicit Euler with steps at most `dt_max`; the final stretch of
/// length ε_end = dt_max is linear interpolation to `x`.
pub fn sample_bridge(
    y: f64,
    x: f64,
    t: f64,
    grid: &[f64],
    seed: u64,
    dt_max: f64,
) -> Result<Path, BesselError> {
    if !(y >= 0.0) {
        return Err(BesselError::NegativeStart(y));
    }
    if !(x >= 0.0) {
        return Err(BesselError::NegativeEndpoint(x));
    }
    if !(t > 0.0) {
        return Err(BesselError::InvalidHorizon(t));
    }
    if !(dt_max > 0.0) || dt_max >= t {
        return Err(BesselError::InvalidStep(dt_max));
    }
    check_grid(grid)?;
    if let Some(&s) = grid.iter().find(|&&s| s > t) {
        return Err(BesselError::GridBeyondHorizon { s, t });
    }
    let fine = refine_bridge_grid(grid, t, dt_max);
    let mut rng = task_rng(seed, 0);
    let db: Vec<f64> = fine
        .windows(2)
        .map(|w| (2.0 * (w[1] - w[0])).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let vals = euler_bridge_from_driver(y, x, t, &fine, &db);
    Ok(Path {
        grid: grid.to_vec(),
        values: read_bridge(grid, &fine, &vals, x, t),
        construction: Construction::EulerBridge,
        start: y,
        target: Some((x, t)),
        seed,
    })
}

/// A member of a coupled family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Member {
    Bessel { y: f64 },
    BridgeToZero { y: f64, t: f64 },
    Bridge { y: f64, x: f64, t: f64 },
    Brownian { y: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPaths {
    pub seed: u64,
    /// Driver B on the common grid.
    pub driver: Path,
    pub members: Vec<Path>,
}

/// Build every member from one scalar Brownian driver B.
///
/// Bessel members follow the implicit scheme on B; bridges to 0 are their time
/// changes; bridges to x > 0 use B̃_{t,s} with dB̃ = ((t−s)/t) dB_{st/(t−s)}.
/// Any combination of kinds is accepted, with one restriction: the grid must
/// stay strictly before the horizon of every bridge to 0 and not beyond the
/// horizon of any other bridge. A single non-Brownian member is delegated to
/// its direct sampler, so it reproduces that sampler bit for bit.
///
/// Internal steps are refined to at most `dt_max · max(1, u)` in driver time u.
pub fn coupled_family(
    members: &[Member],
    grid: &[f64],
    seed: u64,
    dt_max: f64,
) -> Result<CoupledPaths, BesselError> {
    if members.is_empty() {
        return Err(BesselError::IncompatibleCoupling("empty family".into()));
    }
    if !(dt_max > 0.0) {
        return Err(BesselError::InvalidStep(dt_max));
    }
    check_grid(grid)?;
    let s_end = *grid.last().unwrap();
    for m in members {
        match *m {
            Member::Bessel { y } | Member::Brownian { y } if y < 0.0 => {
                return Err(BesselError::NegativeStart(y))
            }
            Member::BridgeToZero { y, t } => {
                if y < 0.0 {
                    return Err(BesselError::NegativeStart(y));
                }
                if s_end >= t {
                    return Err(BesselError::IncompatibleCoupling(format!(
                        "grid reaches {s_end} but a bridge to 0 ends at {t}"
                    )));
                }
            }
            Member::Bridge { y, x, t } => {
                if y < 0.0 {
                    return Err(BesselError::NegativeStart(y));
                }
                if x < 0.0 {
                    return Err(BesselError::NegativeEndpoint(x));
                }
                if s_end > t || dt_max >= t {
                    return Err(BesselError::IncompatibleCoupling(format!(
                        "grid reaches {s_end} but a bridge ends at {t}"
                    )));
                }
            }
            _ => {}
        }
    }

    if let [single] = members {
        let direct = match *single {
            Member::Bessel { y } => Some(sample_bessel_path(y, grid, seed)?),
            Member::BridgeToZero { y, t } => Some(sample_bridge_to_zero(y, t, grid, seed)?),
            Member::Bridge { y, x, t } => Some(sample_bridge(y, x, t, grid, seed, dt_max)?),
            Member::Brownian { .. } => None,
        };
        if let Some(path) = direct {
            let driver = radial_driver(&path);
            return Ok(CoupledPaths {
                seed,
                driver,
                members: vec![path],
            });
        }
    }

    // Driver times needed by each member.
    let mut needed: Vec<f64> = grid.to_vec();
    let mut fine_grids: Vec<Option<Vec<f64>>> = Vec::with_capacity(members.len());
    for m in members {
        match *m {
            Member::BridgeToZero { t, .. } => {
                needed.extend(grid.iter().map(|&s| bridge_time(s, t)));
                fine_grids.push(None);
            }
            Member::Bridge { t, .. } => {
                let fine = refine_bridge_grid(grid, t, dt_max);
                needed.extend(fine.iter().map(|&s| bridge_time(s, t)));
                fine_grids.push(Some(fine));
            }
            _ => fine_grids.push(None),
        }
    }
    needed.sort_by(|a, b| a.total_cmp(b));
    needed.dedup();
    let mut master = vec![0.0];
    for w in needed.windows(2) {
        let cap = dt_max * w[0].max(1.0);
        let n = ((w[1] - w[0]) / cap).ceil().max(1.0) as usize;
        for j in 1..n {
            master.push(w[0] + (w[1] - w[0]) * j as f64 / n as f64);
        }
        master.push(w[1]);
    }

    let mut rng = task_rng(seed, 0);
    let mut b = Vec::with_capacity(master.len());
    b.push(0.0);
    let mut acc = 0.0;
    for w in master.windows(2) {
        let z: f64 = rng.sample(StandardNormal);
        acc += (2.0 * (w[1] - w[0])).sqrt() * z;
        b.push(acc);
    }
    let index_of = |u: f64| -> usize {
        master
            .binary_search_by(|p| p.total_cmp(&u))
            .expect("driver time present in master grid")
    };
    let b_at = |u: f64| b[index_of(u)];

    let bessel_on_master = |y: f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(master.len());
        let mut xi = y;
        out.push(xi);
        for k in 1..master.len() {
            xi = implicit_bessel_step(xi, b[k] - b[k - 1], master[k] - master[k - 1]);
            out.push(xi);
        }
        out
    };

    let mut paths = Vec::with_capacity(members.len());
    for (m, fine) in members.iter().zip(&fine_grids) {
        let path = match *m {
            Member::Bessel { y } => {
                let xi = bessel_on_master(y);
                Path {
                    grid: grid.to_vec(),
                    values: grid.iter().map(|&s| xi[index_of(s)]).collect(),
                    construction: Construction::ImplicitBessel,
                    start: y,
                    target: None,
                    seed,
                }
            }
            Member::Brownian { y } => Path {
                grid: grid.to_vec(),
                values: grid.iter().map(|&s| y + b_at(s)).collect(),
                construction: Construction::Brownian,
                start: y,
                target: None,
                seed,
            },
            Member::BridgeToZero { y, t } => {
                let xi = bessel_on_master(y);
                Path {
                    grid: grid.to_vec(),
                    values: grid
                        .iter()
                        .map(|&s| {
                            if s == 0.0 {
                                y
                            } else {
                                (t - s) / t * xi[index_of(bridge_time(s, t))]
                            }
                        })
                        .collect(),
                    construction: Construction::ImplicitTimechangeBridge,
                    start: y,
                    target: Some((0.0, t)),
                    seed,
                }
            }
            Member::Bridge { y, x, t } => {
                let fine = fine.as_ref().unwrap();
                let db: Vec<f64> = fine
                    .windows(2)
                    .map(|w| {
                        (t - w[0]) / t * (b_at(bridge_time(w[1], t)) - b_at(bridge_time(w[0], t)))
                    })
                    .collect();
                let vals = euler_bridge_from_driver(y, x, t, fine, &db);
                Path {
                    grid: grid.to_vec(),
                    values: read_bridge(grid, fine, &vals, x, t),
                    construction: Construction::EulerBridge,
                    start: y,
                    target: Some((x, t)),
                    seed,
                }
            }
        };
        paths.push(path);
    }
    let driver = Path {
        grid: grid.to_vec(),
        values: grid.iter().map(|&s| b_at(s)).collect(),
        construction: Construction::Brownian,
        start: 0.0,
        target: None,
        seed,
    };
    Ok(CoupledPaths {
        seed,
        driver,
        members: paths,
    })
}

/// Discretised driver of a directly sampled path: increments minus the drift
/// evaluated at the right end of each grid interval.
fn radial_driver(path: &Path) -> Path {
    let drift = |xi: f64, s: f64| -> f64 {
        let xi = xi.max(FLOOR);
        match path.target {
            None => 2.0 / xi,
            Some((x, t)) => {
                let tau = (t - s).max(FLOOR);
                if x == 0.0 {
                    2.0 / xi - xi / tau
                } else {
                    x / tau * coth(x * xi / (2.0 * tau)) - xi / tau
                }
            }
        }
    };
    let mut values = vec![0.0];
    let mut acc = 0.0;
    for k in 1..path.grid.len() {
        let h = path.grid[k] - path.grid[k - 1];
        acc += path.values[k] - path.values[k - 1] - h * drift(path.values[k], path.grid[k]);
        values.push(acc);
    }
    Path {
        grid: path.grid.clone(),
        values,
        construction: Construction::Brownian,
        start: 0.0,
        target: None,
        seed: path.seed,
    }
}

/// G = max over s > 0 of |value − trend| / max(s^{1/2−ε}, s^{1/2+ε}).
pub fn fluctuation_statistic(path: &Path, eps: f64) -> Result<f64, BesselError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(BesselError::InvalidEpsilon(eps));
    }
    let mut any = false;
    let mut g: f64 = 0.0;
    for (&s, &v) in path.grid.iter().zip(&path.values) {
        if s <= 0.0 {
            continue;
        }
        any = true;
        let scale = s.powf(0.5 - eps).max(s.powf(0.5 + eps));
        g = g.max((v - path.trend(s)).abs() / scale);
    }
    if any {
        Ok(g)
    } else {
        Err(BesselError::NoPositiveTime)
    }
}

/// E[ξ^y_s − y] in closed form: σ[√(2/π)e^{−a²/2} + (a + 1/a)erf(a/√2)] − y,
/// with σ = √(2s), a = y/σ; equals 4√(s/π) at y = 0.
pub fn mean_displacement(y: f64, s: f64) -> f64 {
    use crate::numerics::special::erf;
    use std::f64::consts::{FRAC_2_PI, PI};
    if s <= 0.0 {
        return 0.0;
    }
    let sigma = (2.0 * s).sqrt();
    let a = y / sigma;
    if a < 1e-6 {
        return 4.0 * (s / PI).sqrt() + y * y / (3.0 * sigma) * (2.0 / PI).sqrt() - y;
    }
    sigma * (FRAC_2_PI.sqrt() * (-0.5 * a * a).exp() + (a + 1.0 / a) * erf(a / 2f64.sqrt())) - y
}

/// 0, first, first·ratio, … up to `end` (included).
pub fn geometric_grid(end: f64, first: f64, ratio: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut s = first;
    while s < end {
        g.push(s);
        s *= ratio;
    }
    g.push(end);
    g
}

/// Grid on [0, t − eps_end], geometric with the given ratio away from both ends.
pub fn bridge_grid(t: f64, first: f64, ratio: f64, eps_end: f64) -> Vec<f64> {
    let half = 0.5 * t;
    let mut left = vec![0.0];
    let mut s = first;
    while s < half {
        left.push(s);
        s *= ratio;
    }
    let mut right = Vec::new();
    let mut d = eps_end;
    while d < half {
        right.push(t - d);
        d *= ratio;
    }
    right.reverse();
    left.push(half);
    left.extend(right);
    left.dedup();
    left
}
