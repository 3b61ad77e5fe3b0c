//! Finite-difference solution of ∂ₜh = ∂ₓ²h + h on x > m(t), h(m(t), t) = 0,
//! in the front frame z = x − m(t).
//!
//! The solver advances w = e^{κz}u, which obeys
//! w_t = w_zz + (m′ − 2κ) w_z + (κ² − κm′ + 1) w.
//! With κ matched to the front decay the unknown stays O(z) instead of
//! O(z e^{−z}), so the discretisation error does not swamp the profile tail.

use std::fmt::Write as _;

use crate::boundary::BoundaryCurve;
use crate::kernel::{integrate_log, InitialCondition, KernelError};
use crate::numerics::special::ln_sinh;
use crate::numerics::tridiag;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite value at t = {t}, z = {z} after step {step}")]
    NonFinite { t: f64, z: f64, step: usize },
    #[error("probe band [{z1}, {z2}] must lie in (0, {half_length})")]
    InvalidBand { z1: f64, z2: f64, half_length: f64 },
    #[error("alpha_ref must be positive, got {0}")]
    InvalidReference(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dz: f64,
    pub length: f64,
    pub dt: f64,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    /// Weight exponent; `None` picks the decay rate of the slowest travelling wave for v.
    pub kappa: Option<f64>,
    /// Number of leading steps replaced by two backward-Euler half steps.
    pub rannacher_steps: usize,
}

impl GridSpec {
    /// dt = min(dz, 0.02), L = max(40, 8√t_end).
    pub fn new(dz: f64, t_end: f64, snapshots: Vec<f64>) -> Self {
        Self {
            dz,
            length: 40f64.max(8.0 * t_end.sqrt()),
            dt: dz.min(0.02),
            t_end,
            snapshots,
            kappa: None,
            rannacher_steps: 2,
        }
    }

    pub fn validate(&self) -> Result<(), PdeError> {
        let bad = |m: String| Err(PdeError::InvalidGrid(m));
        if !(self.dz > 0.0 && self.dt > 0.0 && self.t_end >= 0.0) {
            return bad(format!(
                "need dz, dt > 0 and t_end >= 0 (dz={}, dt={}, t_end={})",
                self.dz, self.dt, self.t_end
            ));
        }
        if !(self.length >= 20.0) {
            return bad(format!("domain length {} < 20", self.length));
        }
        if self.length / self.dz < 4.0 {
            return bad("fewer than 4 cells".into());
        }
        if let Some(s) = self
            .snapshots
            .iter()
            .find(|s| !(**s >= 0.0 && **s <= self.t_end))
        {
            return bad(format!("snapshot time {s} outside [0, {}]", self.t_end));
        }
        if let Some(k) = self.kappa {
            if !k.is_finite() || k < 0.0 {
                return bad(format!("kappa {k} must be finite and >= 0"));
            }
        }
        Ok(())
    }

    /// Number of cells; the last node sits at z = cells·dz ≈ L.
    pub fn cells(&self) -> usize {
        (self.length / self.dz).round() as usize
    }
}

/// Decay rate γ of the slowest wave for speed v ≥ 2 (v = γ + 1/γ), and v/2 below.
pub fn default_kappa(v: f64) -> f64 {
    if v >= 2.0 {
        0.5 * (v - (v * v - 4.0).sqrt())
    } else {
        0.5 * v.max(0.0)
    }
}

/// u(z, t) = h(m(t) + z, t) on the grid z_i = i·dz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontSnapshot {
    pub t: f64,
    pub dz: f64,
    pub u: Vec<f64>,
    /// Most negative value (0 if none).
    pub undershoot: f64,
}

impl FrontSnapshot {
    pub fn z(&self, i: usize) -> f64 {
        i as f64 * self.dz
    }

    pub fn length(&self) -> f64 {
        (self.u.len() - 1) as f64 * self.dz
    }

    /// Linear interpolation; 0 outside the domain.
    pub fn value_at(&self, z: f64) -> f64 {
        if z <= 0.0 || z >= self.length() {
            return 0.0;
        }
        let p = z / self.dz;
        let i = p.floor() as usize;
        let w = p - i as f64;
        self.u[i] * (1.0 - w) + self.u[i + 1] * w
    }

    /// u(z)/(z e^{−z}).
    pub fn alpha_hat_at(&self, z: f64) -> f64 {
        self.value_at(z) / (z * (-z).exp())
    }

    /// Undershoot below −1e-10.
    pub fn flagged(&self) -> bool {
        self.undershoot < -1e-10
    }
}

pub const SNAPSHOT_HEADER: &str = "t,z,u";

/// CSV of snapshots, preceded by `# ` manifest lines.
pub fn snapshots_csv(snaps: &[FrontSnapshot], manifest: &[String]) -> String {
    let mut out = String::new();
    for line in manifest {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for s in snaps {
        for (i, u) in s.u.iter().enumerate() {
            let _ = writeln!(out, "{},{:.6},{:.12e}", s.t, s.z(i), u);
        }
    }
    out
}

fn coefficients(curve: &BoundaryCurve, kappa: f64, t: f64) -> (f64, f64) {
    let m1 = curve.m1(t);
    (m1 - 2.0 * kappa, kappa * kappa - kappa * m1 + 1.0)
}

struct Stepper {
    n: usize,
    dz: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl Stepper {
    fn new(n: usize, dz: f64) -> Self {
        Self {
            n,
            dz,
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
            scratch: vec![0.0; n],
        }
    }

    /// One θ-step of length h on the interior unknowns `w` with coefficients (b, c).
    fn step(&mut self, w: &mut [f64], h: f64, theta: f64, b: f64, c: f64) {
        let dz2 = self.dz * self.dz;
        let lo = 1.0 / dz2 - b / (2.0 * self.dz);
        let up = 1.0 / dz2 + b / (2.0 * self.dz);
        let di = -2.0 / dz2 + c;
        let n = self.n;
        let ex = (1.0 - theta) * h;
        for i in 0..n {
            let left = if i > 0 { w[i - 1] } else { 0.0 };
            let right = if i + 1 < n { w[i + 1] } else { 0.0 };
            self.rhs[i] = w[i] + ex * (lo * left + di * w[i] + up * right);
        }
        let im = theta * h;
        self.lower.fill(-im * lo);
        self.upper.fill(-im * up);
        self.diag.fill(1.0 - im * di);
        tridiag::solve_in_place(
            &self.lower,
            &self.diag,
            &self.upper,
            &mut self.rhs,
            &mut self.scratch,
        );
        w.copy_from_slice(&self.rhs);
    }
}

/// Crank–Nicolson in the weighted front frame, with Rannacher start-up.
/// Snapshots are returned in increasing time order, each landing exactly on its requested time.
pub fn solve_front_frame(
    h0: &InitialCondition,
    curve: &BoundaryCurve,
    grid: &GridSpec,
) -> Result<Vec<FrontSnapshot>, PdeError> {
    grid.validate()?;
    h0.validate()?;
    let kappa = grid.kappa.unwrap_or_else(|| default_kappa(curve.v));
    let cells = grid.cells();
    let dz = grid.dz;
    let n = cells - 1;
    let m0 = curve.m(0.0);
    // point values, except cells straddling a jump of h₀, which get piecewise-midpoint averages
    let breaks: Vec<f64> = h0.breakpoints().iter().map(|b| b - m0).collect();
    let weighted = |z: f64| h0.eval(z + m0) * (kappa * z).exp();
    let mut w: Vec<f64> = (1..cells)
        .map(|i| {
            let z = i as f64 * dz;
            let (lo, hi) = (z - 0.5 * dz, z + 0.5 * dz);
            let mut cuts: Vec<f64> = breaks
                .iter()
                .cloned()
                .filter(|b| *b > lo && *b < hi)
                .collect();
            if cuts.is_empty() {
                return weighted(z);
            }
            cuts.insert(0, lo);
            cuts.push(hi);
            cuts.windows(2)
                .map(|c| (c[1] - c[0]) * weighted(0.5 * (c[0] + c[1])))
                .sum::<f64>()
                / dz
        })
        .collect();
    let mut times = grid.snapshots.clone();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();

    let cfl = (0..=8)
        .map(|k| curve.m1(grid.t_end * k as f64 / 8.0).abs())
        .fold(curve.m1(0.0).abs(), f64::max)
        * grid.dt
        / dz;
    if cfl > 2.0 {
        log::warn!("|m'| dt/dz = {cfl:.2} > 2: advection is under-resolved in time");
    }

    let snapshot = |w: &[f64], t: f64| -> FrontSnapshot {
        let mut u = Vec::with_capacity(cells + 1);
        u.push(0.0);
        u.extend(
            w.iter()
                .enumerate()
                .map(|(i, v)| v * (-kappa * (i + 1) as f64 * dz).exp()),
        );
        u.push(0.0);
        let undershoot = u.iter().cloned().fold(0.0, f64::min);
        FrontSnapshot {
            t,
            dz,
            u,
            undershoot,
        }
    };

    let mut stepper = Stepper::new(n, dz);
    let mut out = Vec::with_capacity(times.len());
    let mut t = 0.0;
    let mut step = 0usize;
    let mut next = 0usize;
    while next < times.len() && times[next] <= 0.0 {
        out.push(snapshot(&w, 0.0));
        next += 1;
    }
    while next < times.len() {
        let target = times[next];
        let remaining = target - t;
        let h = if remaining <= grid.dt * (1.0 + 1e-9) {
            remaining
        } else {
            grid.dt
        };
        if step < grid.rannacher_steps {
            for half in 0..2 {
                let tm = t + (half + 1) as f64 * h / 2.0;
                let (b, c) = coefficients(curve, kappa, tm);
                stepper.step(&mut w, h / 2.0, 1.0, b, c);
            }
        } else {
            let (b, c) = coefficients(curve, kappa, t + h / 2.0);
            stepper.step(&mut w, h, 0.5, b, c);
        }
        step += 1;
        t = if h == remaining { target } else { t + h };
        if let Some(i) = w.iter().position(|v| !v.is_finite()) {
            return Err(PdeError::NonFinite {
                t,
                z: (i + 1) as f64 * dz,
                step,
            });
        }
        while next < times.len() && times[next] <= t {
            out.push(snapshot(&w, times[next]));
            next += 1;
        }
    }
    Ok(out)
}

/// h(vt + x, t) for the straight boundary m(t) = vt, by quadrature of the explicit kernel.
pub fn exact_linear_boundary_solution(
    h0: &InitialCondition,
    v: f64,
    x: f64,
    t: f64,
) -> Result<f64, PdeError> {
    exact_linear_refined(h0, v, x, t, 0)
}

/// As `exact_linear_boundary_solution` with node spacing divided by 2^refine.
pub fn exact_linear_refined(
    h0: &InitialCondition,
    v: f64,
    x: f64,
    t: f64,
    refine: u32,
) -> Result<f64, PdeError> {
    h0.validate()?;
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t).into());
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let c = -0.5 * (std::f64::consts::PI * t).ln() - 0.5 * v * x - x * x / (4.0 * t) + t
        - v * v * t / 4.0;
    let g =
        |y: f64| h0.ln_eval(y) + ln_sinh(x * y / (2.0 * t)) + c + 0.5 * v * y - y * y / (4.0 * t);
    let scale = t.sqrt().min(1.0);
    let cap = x + 50.0 + 4.0 * v.abs() * t + 60.0 * t.sqrt();
    let breaks = h0.breakpoints();
    let r = integrate_log(&g, &breaks, scale, cap, 1e-11, refine)?;
    Ok(r.value * r.ln_scale.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRatio {
    pub t: f64,
    pub alpha_hat: f64,
    /// max/min − 1 of u/(z e^{−z}) over the band.
    pub flatness: f64,
    /// Flatness above 0.2.
    pub pre_asymptotic: bool,
}

/// Band average of u/(z e^{−z}) over [z1, z2] (trapezoid on the grid nodes plus the band ends).
pub fn extract_profile_ratio(
    snap: &FrontSnapshot,
    z1: f64,
    z2: f64,
) -> Result<ProfileRatio, PdeError> {
    extract_ratio_to(snap, z1, z2, &|z: f64| z * (-z).exp())
}

/// Band average and flatness of u/ω for an arbitrary reference shape ω.
pub fn extract_ratio_to(
    snap: &FrontSnapshot,
    z1: f64,
    z2: f64,
    omega: &dyn Fn(f64) -> f64,
) -> Result<ProfileRatio, PdeError> {
    let half = snap.length() / 2.0;
    if !(z1 > 0.0 && z2 > z1 && z2 < half) {
        return Err(PdeError::InvalidBand {
            z1,
            z2,
            half_length: half,
        });
    }
    let pts = band_points(snap, z1, z2);
    let vals: Vec<f64> = pts.iter().map(|&z| snap.value_at(z) / omega(z)).collect();
    let integral = trapezoid(&pts, &vals);
    let max = vals.iter().cloned().fold(f64::MIN, f64::max);
    let min = vals.iter().cloned().fold(f64::MAX, f64::min);
    let flatness = max / min - 1.0;
    Ok(ProfileRatio {
        t: snap.t,
        alpha_hat: integral / (z2 - z1),
        flatness,
        pre_asymptotic: !(flatness <= 0.2),
    })
}

/// Least-squares amplitude of ω fitted to u on [z1, z2], and the relative L² misfit ‖u − Âω‖/‖u‖.
pub fn fit_shape(snap: &FrontSnapshot, z1: f64, z2: f64, omega: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let pts = band_points(snap, z1, z2);
    let u: Vec<f64> = pts.iter().map(|&z| snap.value_at(z)).collect();
    let w: Vec<f64> = pts.iter().map(|&z| omega(z)).collect();
    let uw: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a * b).collect();
    let ww: Vec<f64> = w.iter().map(|b| b * b).collect();
    let amp = trapezoid(&pts, &uw) / trapezoid(&pts, &ww);
    let res: Vec<f64> = u
        .iter()
        .zip(&w)
        .map(|(a, b)| (a - amp * b).powi(2))
        .collect();
    let uu: Vec<f64> = u.iter().map(|a| a * a).collect();
    (amp, (trapezoid(&pts, &res) / trapezoid(&pts, &uu)).sqrt())
}

fn band_points(snap: &FrontSnapshot, z1: f64, z2: f64) -> Vec<f64> {
    let mut pts = vec![z1];
    let mut i = (z1 / snap.dz).floor() as usize + 1;
    while snap.z(i) < z2 {
        if snap.z(i) > z1 {
            pts.push(snap.z(i));
        }
        i += 1;
    }
    pts.push(z2);
    pts
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    (1..x.len())
        .map(|k| 0.5 * (y[k] + y[k - 1]) * (x[k] - x[k - 1]))
        .sum()
}

/// (t, α̂(t)/alpha_ref − 1) over the snapshots, α̂ taken on the band [z1, z2].
pub fn convergence_series(
    snaps: &[FrontSnapshot],
    alpha_ref: f64,
    z1: f64,
    z2: f64,
) -> Result<Vec<(f64, f64)>, PdeError> {
    if !(alpha_ref > 0.0) {
        return Err(PdeError::InvalidReference(alpha_ref));
    }
    snaps
        .iter()
        .map(|s| extract_profile_ratio(s, z1, z2).map(|p| (s.t, p.alpha_hat / alpha_ref - 1.0)))
        .collect()
}
