//! Scenario harness: Theorem-1 amplitude and shape checks, Theorem-2 rate fits,
//! the c-scan for the optimal 1/√t correction, ψ tables, and report files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::boundary::{
    self, BoundaryCurve, BoundaryError, CaseId, CaseSpec, DeltaEstimate, RegularityReport,
};
use crate::functionals::{self, FunctionalError, FunctionalSpec, MIN_SAMPLES};
use crate::kernel::{self, AlphaEstimate, InitialCondition, KernelError, PsiTable};
use crate::numerics::special::gamma;
use crate::numerics::stats::linear_fit;
use crate::pde::{self, FrontSnapshot, GridSpec, PdeError};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("rate fit rejected: {0}")]
    Fit(String),
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// Initial-condition family selected in a config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum H0Family {
    /// Power-exponential for cases a–c, indicator of [0, 1] otherwise.
    Auto,
    PowerExp,
    Indicator,
}

/// Everything one scenario needs; parsed from `key=value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub case: CaseSpec,
    pub h0: H0Family,
    pub h0_end: f64,
    pub h0_x0: f64,
    pub h0_cut: bool,
    pub dz: f64,
    pub dt: Option<f64>,
    pub length: Option<f64>,
    pub t_end: f64,
    pub snapshots: Option<Vec<f64>>,
    pub band: (f64, f64),
    pub shape_band: (f64, f64),
    pub window: Option<(f64, f64)>,
    pub n_mc: usize,
    pub seed: u64,
    /// y values for the ψ suite; a negative entry −k stands for k·√t.
    pub psi_y: Vec<f64>,
    pub psi_t: Vec<f64>,
    pub c_min: f64,
    pub c_max: f64,
    pub c_steps: usize,
    pub eta: f64,
    pub delta_tol: f64,
    /// ψ_∞ table nodes across the support of h₀ for the α reference.
    pub alpha_nodes: usize,
    pub alpha_n: usize,
    pub outdir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            case: CaseSpec::new(CaseId::Theorem2),
            h0: H0Family::Auto,
            h0_end: 1.0,
            h0_x0: 1.0,
            h0_cut: false,
            dz: 0.05,
            dt: None,
            length: None,
            t_end: 400.0,
            snapshots: None,
            band: (1.0, 3.0),
            shape_band: (0.5, 8.0),
            window: None,
            n_mc: 20_000,
            seed: 1,
            psi_y: vec![1.0, -1.0],
            psi_t: vec![100.0, 400.0],
            c_min: -8.0,
            c_max: -2.0,
            c_steps: 13,
            eta: 0.5,
            delta_tol: 1e-6,
            alpha_nodes: 17,
            alpha_n: 20_000,
            outdir: PathBuf::from("out"),
        }
    }
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect()
}

fn parse_pair(v: &str) -> Option<(f64, f64)> {
    let l = parse_list(&v.replace(':', ","))?;
    (l.len() == 2).then(|| (l[0], l[1]))
}

impl ScenarioConfig {
    /// Apply one setting. Unknown keys are an error.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.trim();
        let value = value.trim();
        if self.case.apply(key, value).map_err(|e| e.to_string())? {
            return Ok(());
        }
        let bad = || format!("bad value for {key}: {value:?}");
        let num = || value.parse::<f64>().map_err(|_| bad());
        let int = || value.parse::<usize>().map_err(|_| bad());
        match key {
            "name" => self.name = value.to_string(),
            "h0" => {
                self.h0 = match value {
                    "auto" => H0Family::Auto,
                    "power_exp" => H0Family::PowerExp,
                    "indicator" | "compact" => H0Family::Indicator,
                    _ => return Err(bad()),
                }
            }
            "h0_end" => self.h0_end = num()?,
            "h0_x0" => self.h0_x0 = num()?,
            "h0_cut" => self.h0_cut = matches!(value, "1" | "true" | "yes"),
            "dz" => self.dz = num()?,
            "dt" => self.dt = Some(num()?),
            "L" | "length" => self.length = Some(num()?),
            "t_end" => self.t_end = num()?,
            "snapshots" => self.snapshots = Some(parse_list(value).ok_or_else(bad)?),
            "band" => self.band = parse_pair(value).ok_or_else(bad)?,
            "shape_band" => self.shape_band = parse_pair(value).ok_or_else(bad)?,
            "window" => self.window = Some(parse_pair(value).ok_or_else(bad)?),
            "n_mc" => self.n_mc = int()?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "psi_y" => self.psi_y = parse_list(value).ok_or_else(bad)?,
            "psi_t" => self.psi_t = parse_list(value).ok_or_else(bad)?,
            "c_min" => self.c_min = num()?,
            "c_max" => self.c_max = num()?,
            "c_steps" => self.c_steps = int()?,
            "eta" => self.eta = num()?,
            "delta_tol" => self.delta_tol = num()?,
            "alpha_nodes" => self.alpha_nodes = int()?,
            "alpha_n" => self.alpha_n = int()?,
            "outdir" => self.outdir = PathBuf::from(value),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Parse `key=value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ExperimentError::Config {
                    line: i + 1,
                    msg: format!("expected key=value, got {line:?}"),
                })?;
            cfg.set(k, v)
                .map_err(|msg| ExperimentError::Config { line: i + 1, msg })?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Invalid(m));
        if self.n_mc < MIN_SAMPLES || self.alpha_n < MIN_SAMPLES {
            return bad(format!("MC budgets must be >= {MIN_SAMPLES}"));
        }
        if !(self.t_end > 0.0) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        let (w0, w1) = self.fit_window();
        if !(w0 > 0.0 && w0 < w1 && w1 <= self.t_end) {
            return bad(format!(
                "fit window [{w0}, {w1}] must lie inside (0, {}]",
                self.t_end
            ));
        }
        if self.c_steps < 3 || !(self.c_min < self.c_max) {
            return bad("c scan needs c_min < c_max and at least 3 steps".into());
        }
        if self.alpha_nodes < 3 {
            return bad("alpha_nodes must be >= 3".into());
        }
        Ok(())
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.window.unwrap_or((self.t_end / 4.0, self.t_end))
    }

    /// Snapshot times: configured, or t_end·2^{−k/4} down to 1.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if let Some(s) = &self.snapshots {
            let mut s = s.clone();
            s.sort_by(|a, b| a.total_cmp(b));
            return s;
        }
        let mut out = Vec::new();
        let mut k = 0;
        loop {
            let t = self.t_end * 2f64.powf(-(k as f64) / 4.0);
            if t < 1.0 {
                break;
            }
            out.push((t * 1e6).round() / 1e6);
            k += 1;
        }
        out.reverse();
        out
    }

    /// ν of the initial condition; defaults per case.
    pub fn nu(&self) -> f64 {
        self.case.nu.unwrap_or(match self.case.case {
            CaseId::C => -2.0,
            _ => 0.0,
        })
    }

    pub fn initial_condition(&self) -> InitialCondition {
        let family = match self.h0 {
            H0Family::Auto => match self.case.case {
                CaseId::A | CaseId::B | CaseId::C | CaseId::Linear => H0Family::PowerExp,
                CaseId::D | CaseId::Theorem2 if self.case.nu.is_some() => H0Family::PowerExp,
                _ => H0Family::Indicator,
            },
            f => f,
        };
        match family {
            H0Family::Indicator => InitialCondition::indicator(self.h0_end),
            _ => InitialCondition::PowerExp {
                amplitude: self.case.amplitude,
                nu: self.nu(),
                gamma: if self.case.case == CaseId::A {
                    self.case.gamma
                } else {
                    1.0
                },
                x0: self.h0_x0,
                cut_below: self.h0_cut,
            },
        }
    }

    pub fn curve(&self) -> Result<BoundaryCurve, ExperimentError> {
        Ok(boundary::make_boundary(&self.case)?)
    }

    /// Grid with the domain long enough for the weighted unknown to decay before z = L.
    pub fn grid(&self, curve: &BoundaryCurve, snapshots: Vec<f64>) -> GridSpec {
        let mut g = GridSpec::new(self.dz, self.t_end, snapshots);
        let kappa = pde::default_kappa(curve.v);
        let drift = (curve.v - 2.0 * kappa).max(0.0);
        g.length = self
            .length
            .unwrap_or(g.length.max(drift * self.t_end + 10.0 * self.t_end.sqrt()));
        if let Some(dt) = self.dt {
            g.dt = dt;
        }
        g
    }

    /// Canonical text: every setting on its own line, fixed order.
    pub fn to_text(&self) -> String {
        let c = &self.case;
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("name", self.name.clone());
        kv("case", c.case.name().to_string());
        kv("gamma", c.gamma.to_string());
        kv("nu", opt(c.nu));
        kv("A", c.amplitude.to_string());
        kv("a", opt(c.a));
        kv("v", opt(c.v));
        kv("c", opt(c.c));
        kv(
            "power",
            c.power.map_or("none".into(), |(p, k)| format!("{p}:{k}")),
        );
        kv(
            "r_table",
            c.table.as_ref().map_or("none".into(), |(t, r)| {
                t.iter()
                    .zip(r)
                    .map(|(a, b)| format!("{a}:{b}"))
                    .collect::<Vec<_>>()
                    .join(",")
            }),
        );
        kv("relaxed", c.relaxed.to_string());
        kv("h0", self.initial_condition().label());
        kv("dz", self.dz.to_string());
        kv("dt", opt(self.dt));
        kv("L", opt(self.length));
        kv("t_end", self.t_end.to_string());
        kv("snapshots", list(&self.snapshot_times()));
        kv("band", format!("{}:{}", self.band.0, self.band.1));
        kv(
            "shape_band",
            format!("{}:{}", self.shape_band.0, self.shape_band.1),
        );
        let w = self.fit_window();
        kv("window", format!("{}:{}", w.0, w.1));
        kv("n_mc", self.n_mc.to_string());
        kv("seed", self.seed.to_string());
        kv("psi_y", list(&self.psi_y));
        kv("psi_t", list(&self.psi_t));
        kv(
            "c_scan",
            format!("{}:{}:{}", self.c_min, self.c_max, self.c_steps),
        );
        kv("eta", self.eta.to_string());
        kv("delta_tol", self.delta_tol.to_string());
        kv("alpha_nodes", self.alpha_nodes.to_string());
        kv("alpha_n", self.alpha_n.to_string());
        s
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Closed-form α of the limit profile for cases a–c.
pub fn predicted_alpha(case: CaseId, amplitude: f64, nu: f64, gamma_: f64, a: f64) -> Option<f64> {
    match case {
        CaseId::A => Some(amplitude * (-gamma_ * a).exp() * (1.0 / gamma_ - gamma_).powf(nu)),
        CaseId::B => {
            Some(amplitude * (-a).exp() / PI.sqrt() * 2f64.powf(nu) * gamma(1.0 + nu / 2.0))
        }
        CaseId::C => Some(amplitude * (-a).exp() / (4.0 * PI.sqrt())),
        _ => None,
    }
}

/// b = −A/√(4π)·e^{−a}·2^{ν+1}·Γ(ν/2 + 1), positive for −4 < ν < −2.
pub fn coefficient_b(amplitude: f64, nu: f64, a: f64) -> f64 {
    -amplitude / (4.0 * PI).sqrt() * (-a).exp() * 2f64.powf(nu + 1.0) * gamma(nu / 2.0 + 1.0)
}

/// Limit shape ω/α: e^{−γx} − e^{−x/γ} for case a, x e^{−x} otherwise.
pub fn limit_shape(case: CaseId, gamma_: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| {
        if case == CaseId::A {
            (-gamma_ * x).exp() - (-x / gamma_).exp()
        } else {
            x * (-x).exp()
        }
    }
}

/// α from the ψ_∞ representation, with ψ_∞ tabulated by Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaReference {
    pub alpha: AlphaEstimate,
    pub delta: DeltaEstimate,
    pub table: PsiTable,
}

/// ψ_∞ nodes: uniform on [0, end] of the support (or [0, x₀]), then geometric to 64 for unbounded data.
fn alpha_nodes(h0: &InitialCondition, n: usize) -> Vec<f64> {
    let (end, unbounded) = match h0 {
        InitialCondition::PowerExp { x0, .. } => (*x0, true),
        other => (other.support_end().unwrap_or(1.0), false),
    };
    let mut ys: Vec<f64> = (0..n).map(|i| end * i as f64 / (n - 1) as f64).collect();
    if unbounded {
        let mut y = end * 1.25;
        while y <= 64.0 {
            ys.push(y);
            y *= 1.25;
        }
    }
    ys
}

pub fn alpha_reference(
    curve: &BoundaryCurve,
    h0: &InitialCondition,
    nodes: usize,
    n: usize,
    seed: u64,
    delta_tol: f64,
) -> Result<AlphaReference, ExperimentError> {
    let delta = boundary::compute_delta(curve, delta_tol)?;
    let spec = FunctionalSpec::new(curve.clone());
    let table = PsiTable::psi_infinity(&spec, &alpha_nodes(h0, nodes), n, seed, &delta)?;
    let alpha = kernel::alpha_case_d(h0, curve.a, &delta, &table)?;
    Ok(AlphaReference {
        alpha,
        delta,
        table,
    })
}

/// Smoothness checks of m on a geometric grid reaching max(t_end, 10³); failures are logged, not fatal.
pub fn check_regularity(cfg: &ScenarioConfig, curve: &BoundaryCurve) -> RegularityReport {
    let end = cfg.t_end.max(1e3);
    let grid: Vec<f64> = (0..=120)
        .map(|k| end * 10f64.powf(-4.0 * (120 - k) as f64 / 120.0))
        .collect();
    let r = boundary::verify_regularity(curve, &grid, cfg.eta);
    if !r.pass() {
        log::warn!(
            "boundary {} fails the regularity checks: {r:?}",
            curve.label()
        );
    }
    r
}

/// One amplitude sample of a Theorem-1 run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudePoint {
    pub t: f64,
    pub alpha_hat: f64,
    pub flatness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub case: CaseId,
    pub curve: String,
    pub h0: String,
    /// Closed form (cases a–c) or the ψ_∞ representation (case d).
    pub alpha_pred: f64,
    pub alpha_pred_stderr: f64,
    pub alpha_source: &'static str,
    pub series: Vec<AmplitudePoint>,
    /// Least-squares amplitude and relative L² misfit of the last snapshot on the shape band.
    pub shape_amplitude: f64,
    pub shape_error: f64,
    /// Flatness never dropped below 0.1.
    pub pre_asymptotic: bool,
    pub regularity: RegularityReport,
}

impl Theorem1Report {
    pub fn final_alpha_hat(&self) -> f64 {
        self.series.last().map_or(f64::NAN, |p| p.alpha_hat)
    }

    pub fn relative_deviation(&self) -> f64 {
        self.final_alpha_hat() / self.alpha_pred - 1.0
    }
}

pub fn run_theorem1_case(
    cfg: &ScenarioConfig,
) -> Result<(Theorem1Report, Vec<FrontSnapshot>), ExperimentError> {
    cfg.validate()?;
    let curve = cfg.curve()?;
    let h0 = cfg.initial_condition();
    let case = cfg.case.case;
    let nu = cfg.nu();
    let (alpha_pred, alpha_pred_stderr, alpha_source) =
        match predicted_alpha(case, cfg.case.amplitude, nu, cfg.case.gamma, curve.a) {
            Some(a) => (a, 0.0, "closed form"),
            None => {
                let r = alpha_reference(
                    &curve,
                    &h0,
                    cfg.alpha_nodes,
                    cfg.alpha_n,
                    cfg.seed,
                    cfg.delta_tol,
                )?;
                (
                    r.alpha.value,
                    r.alpha.stderr + r.alpha.delta_bound,
                    "psi_inf representation",
                )
            }
        };
    let grid = cfg.grid(&curve, cfg.snapshot_times());
    let snaps = pde::solve_front_frame(&h0, &curve, &grid)?;
    let omega = limit_shape(case, cfg.case.gamma);
    let mut series = Vec::new();
    for s in snaps.iter().filter(|s| s.t > 0.0) {
        let p = pde::extract_ratio_to(s, cfg.band.0, cfg.band.1, &omega)?;
        series.push(AmplitudePoint {
            t: s.t,
            alpha_hat: p.alpha_hat,
            flatness: p.flatness,
        });
    }
    let last = snaps
        .last()
        .ok_or_else(|| ExperimentError::Invalid("no snapshots".into()))?;
    let (shape_amplitude, shape_error) =
        pde::fit_shape(last, cfg.shape_band.0, cfg.shape_band.1, &omega);
    let pre_asymptotic = !series.iter().any(|p| p.flatness < 0.1);
    let regularity = check_regularity(cfg, &curve);
    Ok((
        Theorem1Report {
            case,
            curve: curve.label(),
            h0: h0.label(),
            alpha_pred,
            alpha_pred_stderr,
            alpha_source,
            series,
            shape_amplitude,
            shape_error,
            pre_asymptotic,
            regularity,
        },
        snaps,
    ))
}

/// |d(t)| ≈ prefactor · t^{−p} fitted on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub p: f64,
    pub p_stderr: f64,
    pub prefactor: f64,
    pub prefactor_stderr: f64,
    /// Sign of d(t) over the window.
    pub sign: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub residual_norm: f64,
}

/// Log-log least squares of |d| against t over the window.
/// Rejects windows with fewer than 4 points, a sign change, or non-monotone |d|.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit, ExperimentError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .cloned()
        .filter(|(t, _)| *t >= window.0 * (1.0 - 1e-9) && *t <= window.1 * (1.0 + 1e-9))
        .collect();
    let diag = || {
        pts.iter()
            .map(|(t, d)| format!("({t}, {d:.4e})"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if pts.len() < 4 {
        return Err(ExperimentError::Fit(format!(
            "{} points in window {window:?}, need 4",
            pts.len()
        )));
    }
    let sign = pts[0].1.signum();
    if pts.iter().any(|(_, d)| d.signum() != sign || *d == 0.0) {
        return Err(ExperimentError::Fit(format!(
            "d(t) changes sign in window: {}",
            diag()
        )));
    }
    if pts.windows(2).any(|w| w[1].1.abs() >= w[0].1.abs()) {
        return Err(ExperimentError::Fit(format!(
            "|d(t)| not decreasing in window: {}",
            diag()
        )));
    }
    let x: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|(_, d)| d.abs().ln()).collect();
    let f =
        linear_fit(&x, &y).ok_or_else(|| ExperimentError::Fit("degenerate regression".into()))?;
    let prefactor = f.intercept.exp();
    Ok(RateFit {
        p: -f.slope,
        p_stderr: f.slope_stderr,
        prefactor,
        prefactor_stderr: prefactor * f.intercept_stderr,
        sign,
        window,
        n_points: pts.len(),
        residual_norm: f.residual_norm,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    pub curve: String,
    pub h0: String,
    pub c: f64,
    pub alpha_ref: AlphaReference,
    /// (t, α̂(t), d(t)).
    pub series: Vec<(f64, f64, f64)>,
    pub fit: Result<RateFit, String>,
    /// −r(t) − 3√π/√t at the snapshot times.
    pub model: Vec<(f64, f64)>,
    /// b of the t^{1+ν/2} term when h₀ is power-exponential with −4 < ν < −2.
    pub b: Option<f64>,
    pub regularity: RegularityReport,
}

fn amplitude_series(
    snaps: &[FrontSnapshot],
    band: (f64, f64),
) -> Result<Vec<(f64, f64)>, ExperimentError> {
    snaps
        .iter()
        .filter(|s| s.t > 0.0)
        .map(|s| {
            Ok((
                s.t,
                pde::extract_profile_ratio(s, band.0, band.1)?.alpha_hat,
            ))
        })
        .collect()
}

pub fn run_theorem2_rates(
    cfg: &ScenarioConfig,
) -> Result<(Theorem2Report, Vec<FrontSnapshot>), ExperimentError> {
    cfg.validate()?;
    if !matches!(cfg.case.case, CaseId::Theorem2 | CaseId::D) {
        return Err(ExperimentError::Invalid(
            "rate fits need a case-d type scenario".into(),
        ));
    }
    let curve = cfg.curve()?;
    let h0 = cfg.initial_condition();
    if let InitialCondition::PowerExp { nu, .. } = h0 {
        if nu >= -2.0 {
            return Err(ExperimentError::Invalid(format!(
                "rate fits need nu < -2, got {nu}"
            )));
        }
    }
    let alpha_ref = alpha_reference(
        &curve,
        &h0,
        cfg.alpha_nodes,
        cfg.alpha_n,
        cfg.seed,
        cfg.delta_tol,
    )?;
    let grid = cfg.grid(&curve, cfg.snapshot_times());
    let snaps = pde::solve_front_frame(&h0, &curve, &grid)?;
    let amps = amplitude_series(&snaps, cfg.band)?;
    let alpha = alpha_ref.alpha.value;
    if !(alpha > 0.0) || alpha_ref.alpha.zero_flag {
        return Err(ExperimentError::Invalid(format!(
            "alpha reference {alpha} is not positive"
        )));
    }
    let series: Vec<(f64, f64, f64)> = amps.iter().map(|&(t, a)| (t, a, a / alpha - 1.0)).collect();
    let d: Vec<(f64, f64)> = series.iter().map(|&(t, _, d)| (t, d)).collect();
    let fit = fit_rate(&d, cfg.fit_window()).map_err(|e| e.to_string());
    let model = amps
        .iter()
        .map(|&(t, _)| (t, -curve.r(t) - 3.0 * PI.sqrt() / t.sqrt()))
        .collect();
    let regularity = check_regularity(cfg, &curve);
    let b = match h0 {
        InitialCondition::PowerExp { amplitude, nu, .. } if nu > -4.0 && nu < -2.0 => {
            Some(coefficient_b(amplitude, nu, curve.a))
        }
        _ => None,
    };
    Ok((
        Theorem2Report {
            curve: curve.label(),
            h0: h0.label(),
            c: cfg.case.c.unwrap_or(0.0),
            alpha_ref,
            series,
            fit,
            model,
            b,
            regularity,
        },
        snaps,
    ))
}

/// Mean of (d(t)√t)² over the window.
pub fn ebert_objective(series: &[(f64, f64)], window: (f64, f64)) -> f64 {
    let v: Vec<f64> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 * (1.0 - 1e-9) && *t <= window.1 * (1.0 + 1e-9))
        .map(|(t, d)| d * d * t)
        .collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Vertex and curvature of the parabola through the scan minimum and its neighbours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanMinimum {
    pub c_hat: f64,
    pub curvature: f64,
    /// Minimum on the scan edge or curvature below threshold.
    pub inconclusive: bool,
}

pub const MIN_CURVATURE: f64 = 1e-6;

pub fn scan_minimum(scan: &[(f64, f64)]) -> ScanMinimum {
    let k = (0..scan.len())
        .min_by(|&a, &b| scan[a].1.total_cmp(&scan[b].1))
        .unwrap_or(0);
    if k == 0 || k + 1 >= scan.len() {
        return ScanMinimum {
            c_hat: scan.get(k).map_or(f64::NAN, |p| p.0),
            curvature: 0.0,
            inconclusive: true,
        };
    }
    let (x0, y0) = scan[k - 1];
    let (x1, y1) = scan[k];
    let (x2, y2) = scan[k + 1];
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    let b = d01 - a * (x0 + x1);
    let curvature = 2.0 * a;
    let c_hat = if a > 0.0 { -b / (2.0 * a) } else { x1 };
    ScanMinimum {
        c_hat,
        curvature,
        inconclusive: !(curvature > MIN_CURVATURE),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EbertFit {
    /// (c, objective, α reference) per scanned c.
    pub scan: Vec<(f64, f64, f64)>,
    pub minimum: ScanMinimum,
    /// Half-width from shifting every α reference by ±1 standard error.
    pub c_halfwidth: f64,
    pub window: (f64, f64),
}

pub fn fit_ebert_coefficient(cfg: &ScenarioConfig) -> Result<EbertFit, ExperimentError> {
    cfg.validate()?;
    let window = cfg.fit_window();
    let h0 = cfg.initial_condition();
    let mut runs = Vec::new();
    for k in 0..cfg.c_steps {
        let c = cfg.c_min + (cfg.c_max - cfg.c_min) * k as f64 / (cfg.c_steps - 1) as f64;
        let mut spec = cfg.case.clone();
        spec.case = CaseId::Theorem2;
        spec.c = Some(c);
        spec.a = None;
        spec.power = None;
        spec.table = None;
        let curve = boundary::make_boundary(&spec)?;
        let r = alpha_reference(
            &curve,
            &h0,
            cfg.alpha_nodes,
            cfg.alpha_n,
            cfg.seed,
            cfg.delta_tol,
        )?;
        let times: Vec<f64> = cfg
            .snapshot_times()
            .into_iter()
            .filter(|t| *t >= window.0 * (1.0 - 1e-9))
            .collect();
        let snaps = pde::solve_front_frame(&h0, &curve, &cfg.grid(&curve, times))?;
        let amps = amplitude_series(&snaps, cfg.band)?;
        log::info!(
            "c = {c:.4}: alpha_ref = {:.6e} ± {:.1e}",
            r.alpha.value,
            r.alpha.stderr
        );
        runs.push((c, r.alpha, amps));
    }
    let objective = |shift: f64| -> Vec<(f64, f64)> {
        runs.iter()
            .map(|(c, al, amps)| {
                let a = al.value + shift * al.stderr;
                let d: Vec<(f64, f64)> = amps.iter().map(|&(t, x)| (t, x / a - 1.0)).collect();
                (*c, ebert_objective(&d, window))
            })
            .collect()
    };
    let base = objective(0.0);
    let minimum = scan_minimum(&base);
    let c_halfwidth = [-1.0, 1.0]
        .iter()
        .map(|&s| (scan_minimum(&objective(s)).c_hat - minimum.c_hat).abs())
        .fold(0.0, f64::max);
    Ok(EbertFit {
        scan: base
            .iter()
            .zip(&runs)
            .map(|(&(c, o), r)| (c, o, r.1.value))
            .collect(),
        minimum,
        c_halfwidth,
        window,
    })
}

/// One row of the ψ suite.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiRow {
    pub y: f64,
    pub t: f64,
    pub paired: functionals::PairedPsi,
    /// 3√π/√t.
    pub gap_pred: f64,
    /// max(3 combined SE, 5/t).
    pub envelope: f64,
}

pub fn run_psi_suite(cfg: &ScenarioConfig) -> Result<Vec<PsiRow>, ExperimentError> {
    cfg.validate()?;
    let curve = cfg.curve()?;
    let spec = FunctionalSpec::new(curve);
    let mut rows = Vec::new();
    for &t in &cfg.psi_t {
        for &yy in &cfg.psi_y {
            let y = if yy < 0.0 { -yy * t.sqrt() } else { yy };
            let paired = functionals::paired_psi(&spec, y, t, cfg.n_mc, cfg.seed)?;
            let envelope = (3.0 * paired.residual_stderr).max(5.0 / t);
            rows.push(PsiRow {
                y,
                t,
                paired,
                gap_pred: 3.0 * PI.sqrt() / t.sqrt(),
                envelope,
            });
        }
    }
    Ok(rows)
}

/// Results of one CLI invocation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub theorem1: Option<Theorem1Report>,
    pub theorem2: Option<Theorem2Report>,
    pub ebert: Option<EbertFit>,
    pub psi: Vec<PsiRow>,
    pub snapshots: Vec<FrontSnapshot>,
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, ExperimentError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| ExperimentError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    Ok(path)
}

fn e(x: f64) -> String {
    format!("{x:.10e}")
}

/// Write the manifest and every non-empty table. Returns the written paths in order.
pub fn emit_report(
    cfg: &ScenarioConfig,
    report: &Report,
    outdir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(outdir).map_err(|err| ExperimentError::Io {
        path: outdir.display().to_string(),
        msg: err.to_string(),
    })?;
    let hash = cfg.hash();
    let mut files = Vec::new();

    let mut manifest = String::new();
    let _ = writeln!(manifest, "scenario_hash={hash}");
    manifest.push_str(&cfg.to_text());
    let _ = writeln!(manifest, "tolerance_theorem1_amplitude=0.05");
    let _ = writeln!(manifest, "tolerance_theorem1_case_c=0.15");
    let _ = writeln!(manifest, "tolerance_shape_l2=0.03");
    let _ = writeln!(manifest, "tolerance_rate_p=0.07");
    let _ = writeln!(manifest, "tolerance_prefactor=0.15");
    let _ = writeln!(
        manifest,
        "determinism=outputs depend only on the settings above"
    );
    let mut names = Vec::new();

    if let Some(r) = &report.theorem1 {
        let mut s = String::new();
        let formula = match r.case {
            CaseId::A => "omega(x) = alpha (e^{-gamma x} - e^{-x/gamma}), alpha = A e^{-gamma a} (1/gamma - gamma)^nu",
            CaseId::B => "omega(x) = alpha x e^{-x}, alpha = A e^{-a} 2^nu Gamma(1 + nu/2) / sqrt(pi)",
            CaseId::C => "omega(x) = alpha x e^{-x}, alpha = A e^{-a} / (4 sqrt(pi))",
            _ => "omega(x) = alpha x e^{-x}, alpha = e^{-a-Delta} / (2 sqrt(pi)) int h0(y) y e^y psi_inf(y) dy",
        };
        let _ = writeln!(s, "# case {}: {formula}", r.case.name());
        let _ = writeln!(
            s,
            "# curve={} h0={} alpha_pred={} alpha_pred_stderr={} source={} shape_amplitude={} shape_error={} pre_asymptotic={} regular={}",
            r.curve,
            r.h0,
            e(r.alpha_pred),
            e(r.alpha_pred_stderr),
            r.alpha_source,
            e(r.shape_amplitude),
            e(r.shape_error),
            r.pre_asymptotic,
            r.regularity.pass()
        );
        s.push_str("scenario,case,t,alpha_hat,alpha_pred,rel_dev,flatness\n");
        for p in &r.series {
            let _ = writeln!(
                s,
                "{hash},{},{},{},{},{},{}",
                r.case.name(),
                p.t,
                e(p.alpha_hat),
                e(r.alpha_pred),
                e(p.alpha_hat / r.alpha_pred - 1.0),
                e(p.flatness)
            );
        }
        names.push((format!("theorem1_case_{}.csv", r.case.name()), s));
    }
    if let Some(r) = &report.theorem2 {
        let mut s = String::new();
        let a = &r.alpha_ref;
        let _ = writeln!(
            s,
            "# d(t) = alpha_hat(t)/alpha_ref - 1, model -r(t) - 3 sqrt(pi)/sqrt(t)"
        );
        let _ = writeln!(
            s,
            "# curve={} h0={} alpha_ref={} alpha_ref_stderr={} delta={} b={} regular={}",
            r.curve,
            r.h0,
            e(a.alpha.value),
            e(a.alpha.stderr),
            e(a.delta.value),
            r.b.map_or("none".into(), e),
            r.regularity.pass()
        );
        match &r.fit {
            Ok(f) => {
                let _ = writeln!(
                    s,
                    "# fit p={} p_stderr={} prefactor={} prefactor_stderr={} sign={} window={}:{} points={} residual_norm={}",
                    e(f.p),
                    e(f.p_stderr),
                    e(f.prefactor),
                    e(f.prefactor_stderr),
                    f.sign,
                    f.window.0,
                    f.window.1,
                    f.n_points,
                    e(f.residual_norm)
                );
            }
            Err(msg) => {
                let _ = writeln!(s, "# fit rejected: {msg}");
            }
        }
        s.push_str("scenario,t,alpha_hat,d,model\n");
        for (&(t, al, d), &(_, m)) in r.series.iter().zip(&r.model) {
            let _ = writeln!(s, "{hash},{t},{},{},{}", e(al), e(d), e(m));
        }
        names.push(("theorem2_rates.csv".into(), s));
        let table = a.table.to_csv();
        let mut lines = table.lines();
        let mut p = format!("scenario,{}\n", lines.next().unwrap_or_default());
        for l in lines {
            let _ = writeln!(p, "{hash},{l}");
        }
        names.push(("psi_inf_table.csv".into(), p));
    }
    if let Some(f) = &report.ebert {
        let mut s = String::new();
        let m = &f.minimum;
        let _ = writeln!(s, "# objective = mean over window of (d(t) sqrt(t))^2, m_c(t) = 2t - 1.5 log(t+1) - c + c/sqrt(t+1)");
        let _ = writeln!(
            s,
            "# c_hat={} halfwidth={} curvature={} inconclusive={} window={}:{} target={}",
            e(m.c_hat),
            e(f.c_halfwidth),
            e(m.curvature),
            m.inconclusive,
            f.window.0,
            f.window.1,
            e(-3.0 * PI.sqrt())
        );
        s.push_str("scenario,c,objective,alpha_ref\n");
        for &(c, o, a) in &f.scan {
            let _ = writeln!(s, "{hash},{c},{},{}", e(o), e(a));
        }
        names.push(("ebert_scan.csv".into(), s));
    }
    if !report.psi.is_empty() {
        let mut s = String::from(
            "scenario,y,t,n,psi_t,psi_t_se,psi_inf,psi_inf_se,gap,gap_se,gap_pred,residual,residual_se,envelope,seed\n",
        );
        for r in &report.psi {
            let p = &r.paired;
            let _ = writeln!(
                s,
                "{hash},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.y,
                r.t,
                p.psi_t.n_samples,
                e(p.psi_t.mean),
                e(p.psi_t.stderr),
                e(p.psi_inf.mean),
                e(p.psi_inf.stderr),
                e(p.gap.mean),
                e(p.gap.stderr),
                e(r.gap_pred),
                e(p.residual),
                e(p.residual_stderr),
                e(r.envelope),
                p.psi_t.seed
            );
        }
        names.push(("psi_suite.csv".into(), s));
    }
    if !report.snapshots.is_empty() {
        let lines = vec![
            format!("scenario_hash={hash}"),
            format!("dz={} t_end={}", cfg.dz, cfg.t_end),
        ];
        names.push((
            "snapshots.csv".into(),
            pde::snapshots_csv(&report.snapshots, &lines),
        ));
    }
    for (name, _) in &names {
        let _ = writeln!(manifest, "file={name}");
    }
    files.push(write_file(outdir, "manifest.txt", &manifest)?);
    for (name, body) in &names {
        files.push(write_file(outdir, name, body)?);
    }
    Ok(files)
}
