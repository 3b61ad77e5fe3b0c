//! Closed-form and quadrature side of the solution representation
//! h(x, t) = ∫ q(t; x ← y) h₀(y) dy.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::boundary::{BoundaryCurve, DeltaEstimate};
use crate::functionals::{self, FunctionalError, FunctionalSpec};
use crate::numerics::quad;
use crate::numerics::special::ln_sinh;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("{name} must be >= 0, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("psi must be positive, got {0}")]
    NonPositivePsi(f64),
    #[error("integration tail bound {bound:.3e} above tolerance at cap y = {cap}")]
    TailTooLarge { bound: f64, cap: f64 },
    #[error("phi(y) psi(y) is not integrable at infinity: tail log-slope {0:.3}")]
    NonIntegrable(f64),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid initial condition: {0}")]
    InvalidInitial(String),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
}

/// (1/√(πt))·sinh(xy/2t)·e^{−(x²+y²)/4t}: density at x of a path from y that stayed positive.
pub fn survival_density(y: f64, x: f64, t: f64) -> Result<f64, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    for (name, value) in [("y", y), ("x", x)] {
        if !(value >= 0.0) {
            return Err(KernelError::Negative { name, value });
        }
    }
    Ok(ln_survival_density(y, x, t).exp())
}

fn ln_survival_density(y: f64, x: f64, t: f64) -> f64 {
    ln_sinh(x * y / (2.0 * t)) - 0.5 * (PI * t).ln() - (x * x + y * y) / (4.0 * t)
}

/// A real number stored as sign · e^{ln_abs}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    pub ln_abs: f64,
    pub sign: i8,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => s as f64 * self.ln_abs.exp(),
        }
    }
}

/// Quantities of the kernel that depend on t only.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFrame {
    pub t: f64,
    pub m_t: f64,
    /// ∫₀ᵗ m′(s)² ds.
    pub m1_sq_integral: f64,
}

impl KernelFrame {
    pub fn new(curve: &BoundaryCurve, t: f64) -> Result<Self, KernelError> {
        if !(t > 0.0) {
            return Err(KernelError::NonPositiveTime(t));
        }
        let mut breaks = vec![0.0];
        let mut b = 0.25f64.min(t);
        while b < t {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.push(t);
        breaks.dedup();
        let q = quad::simpson_breaks(
            |s| {
                let d = curve.m1(s);
                d * d
            },
            &breaks,
            1e-11 * (1.0 + t),
        );
        Ok(Self {
            t,
            m_t: curve.m(t),
            m1_sq_integral: q.value,
        })
    }

    /// ln q(t; m(t)+x ← y) for a given ψₜ(y, x) > 0; −∞ when x·y = 0.
    pub fn ln_q(&self, x: f64, y: f64, psi: f64) -> f64 {
        let t = self.t;
        ln_sinh(x * y / (2.0 * t)) - 0.5 * (PI * t).ln() + self.m_t / (2.0 * t) * (y - x)
            - (x * x + y * y) / (4.0 * t)
            + t
            - 0.25 * self.m1_sq_integral
            + psi.ln()
    }
}

/// q(t; m(t)+x ← y) in log space.
pub fn kernel_q(
    curve: &BoundaryCurve,
    x: f64,
    y: f64,
    t: f64,
    psi: f64,
) -> Result<LogValue, KernelError> {
    if !(psi > 0.0) {
        return Err(KernelError::NonPositivePsi(psi));
    }
    for (name, value) in [("y", y), ("x", x)] {
        if !(value >= 0.0) {
            return Err(KernelError::Negative { name, value });
        }
    }
    let frame = KernelFrame::new(curve, t)?;
    if x == 0.0 || y == 0.0 {
        return Ok(LogValue {
            ln_abs: f64::NEG_INFINITY,
            sign: 0,
        });
    }
    Ok(LogValue {
        ln_abs: frame.ln_q(x, y, psi),
        sign: 1,
    })
}

/// Initial data h₀ on [0, ∞).
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// A x^ν e^{−γx} for x ≥ x₀; below x₀ either the cap A x₀^ν e^{−γx} or zero.
    PowerExp {
        amplitude: f64,
        nu: f64,
        gamma: f64,
        x0: f64,
        cut_below: bool,
    },
    /// Supported on [0, end]: 1 there, or a linear interpolation of `profile`
    /// given at equally spaced points of [0, end].
    Compact {
        end: f64,
        profile: Option<Vec<f64>>,
    },
    /// Linear interpolation of (grid, values), zero past the last node.
    Table {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

impl InitialCondition {
    pub fn power_exp(amplitude: f64, nu: f64, gamma: f64) -> Self {
        InitialCondition::PowerExp {
            amplitude,
            nu,
            gamma,
            x0: 1.0,
            cut_below: false,
        }
    }

    pub fn indicator(end: f64) -> Self {
        InitialCondition::Compact { end, profile: None }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        let bad = |m: &str| Err(KernelError::InvalidInitial(m.into()));
        match self {
            InitialCondition::Zero => Ok(()),
            InitialCondition::PowerExp {
                amplitude,
                gamma,
                x0,
                ..
            } => {
                if *amplitude < 0.0 || *gamma <= 0.0 || *x0 <= 0.0 {
                    return bad("need A >= 0, gamma > 0, x0 > 0");
                }
                Ok(())
            }
            InitialCondition::Compact { end, profile } => {
                if *end <= 0.0 {
                    return bad("support end must be positive");
                }
                if let Some(p) = profile {
                    if p.len() < 2 || p.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                        return bad("profile needs >= 2 finite nonnegative values");
                    }
                }
                Ok(())
            }
            InitialCondition::Table { grid, values } => {
                if grid.len() < 2
                    || grid.len() != values.len()
                    || grid.windows(2).any(|w| w[1] <= w[0])
                {
                    return bad("table needs >= 2 increasing nodes with matching values");
                }
                if values.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                    return bad("table values must be finite and nonnegative");
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 0.0;
        }
        match self {
            InitialCondition::Zero => 0.0,
            InitialCondition::PowerExp {
                amplitude,
                nu,
                gamma,
                x0,
                cut_below,
            } => {
                if *cut_below && y < *x0 {
                    return 0.0;
                }
                amplitude * y.max(*x0).powf(*nu) * (-gamma * y).exp()
            }
            InitialCondition::Compact { end, profile } => {
                if y > *end {
                    return 0.0;
                }
                match profile {
                    None => 1.0,
                    Some(p) => {
                        let pos = y / end * (p.len() - 1) as f64;
                        let i = (pos.floor() as usize).min(p.len() - 2);
                        let w = pos - i as f64;
                        p[i] * (1.0 - w) + p[i + 1] * w
                    }
                }
            }
            InitialCondition::Table { grid, values } => interp(grid, values, y).unwrap_or(0.0),
        }
    }

    /// ln h₀(y), −∞ where h₀ vanishes.
    pub fn ln_eval(&self, y: f64) -> f64 {
        match self {
            InitialCondition::PowerExp {
                amplitude,
                nu,
                gamma,
                x0,
                cut_below,
            } if *amplitude > 0.0 && y >= 0.0 && !(*cut_below && y < *x0) => {
                amplitude.ln() + nu * y.max(*x0).ln() - gamma * y
            }
            _ => self.eval(y).ln(),
        }
    }

    /// Points where h₀ has a jump or a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            InitialCondition::Zero => vec![],
            InitialCondition::PowerExp { x0, .. } => vec![*x0],
            InitialCondition::Compact { end, profile } => match profile {
                None => vec![*end],
                Some(p) => (1..p.len())
                    .map(|i| end * i as f64 / (p.len() - 1) as f64)
                    .collect(),
            },
            InitialCondition::Table { grid, .. } => grid.clone(),
        }
    }

    /// Largest point of the support, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            InitialCondition::Zero => Some(0.0),
            InitialCondition::PowerExp { .. } => None,
            InitialCondition::Compact { end, .. } => Some(*end),
            InitialCondition::Table { grid, .. } => grid.last().copied(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            InitialCondition::Zero => "zero".into(),
            InitialCondition::PowerExp {
                amplitude,
                nu,
                gamma,
                x0,
                cut_below,
            } => {
                let cut = if *cut_below { ",cut" } else { "" };
                format!("power_exp(A={amplitude},nu={nu},gamma={gamma},x0={x0}{cut})")
            }
            InitialCondition::Compact { end, profile } => match profile {
                None => format!("indicator(0,{end})"),
                Some(p) => format!("compact(end={end},{} nodes)", p.len()),
            },
            InitialCondition::Table { grid, .. } => format!("table({} nodes)", grid.len()),
        }
    }
}

fn interp(grid: &[f64], values: &[f64], y: f64) -> Option<f64> {
    if grid.is_empty() || y < grid[0] || y > *grid.last().unwrap() {
        return None;
    }
    let i = match grid.binary_search_by(|p| p.total_cmp(&y)) {
        Ok(i) => return Some(values[i]),
        Err(i) => i - 1,
    };
    let w = (y - grid[i]) / (grid[i + 1] - grid[i]);
    Some(values[i] * (1.0 - w) + values[i + 1] * w)
}

/// Tabulated ψₜ(y) or ψ_∞(y): linear interpolation, constant `tail` (e^Δ) past the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub tail: f64,
}

impl PsiTable {
    pub fn new(
        y: Vec<f64>,
        values: Vec<f64>,
        stderr: Vec<f64>,
        tail: f64,
    ) -> Result<Self, KernelError> {
        if y.is_empty() || y.len() != values.len() || y.len() != stderr.len() {
            return Err(KernelError::InvalidTable("length mismatch or empty".into()));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KernelError::InvalidTable(
                "y must be strictly increasing".into(),
            ));
        }
        if values
            .iter()
            .chain([&tail])
            .any(|v| !(*v > 0.0) || !v.is_finite())
        {
            return Err(KernelError::InvalidTable("values must be positive".into()));
        }
        Ok(Self {
            y,
            values,
            stderr,
            tail,
        })
    }

    /// ψ ≡ value.
    pub fn constant(value: f64) -> Self {
        Self {
            y: vec![0.0],
            values: vec![value],
            stderr: vec![0.0],
            tail: value,
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y >= *self.y.last().unwrap() {
            if y == *self.y.last().unwrap() {
                return *self.values.last().unwrap();
            }
            return self.tail;
        }
        if y <= self.y[0] {
            return self.values[0];
        }
        interp(&self.y, &self.values, y).unwrap()
    }

    pub fn stderr_at(&self, y: f64) -> f64 {
        if y > *self.y.last().unwrap() {
            return 0.0;
        }
        if y <= self.y[0] {
            return self.stderr[0];
        }
        interp(&self.y, &self.stderr, y).unwrap()
    }

    /// Monte Carlo table of ψ_∞ on `ys`, extended by e^Δ.
    pub fn psi_infinity(
        spec: &FunctionalSpec,
        ys: &[f64],
        n: usize,
        seed: u64,
        delta: &DeltaEstimate,
    ) -> Result<Self, KernelError> {
        let mut values = Vec::with_capacity(ys.len());
        let mut stderr = Vec::with_capacity(ys.len());
        for &y in ys {
            let e = functionals::estimate_psi_infinity(spec, y, n, seed)?;
            values.push(e.mean);
            stderr.push(e.stderr);
        }
        Self::new(ys.to_vec(), values, stderr, delta.value.exp())
    }

    /// Monte Carlo table of ψₜ(·, 0) on `ys`, extended by e^Δ.
    pub fn psi_t(
        spec: &FunctionalSpec,
        ys: &[f64],
        t: f64,
        n: usize,
        seed: u64,
        delta: &DeltaEstimate,
    ) -> Result<Self, KernelError> {
        let mut values = Vec::with_capacity(ys.len());
        let mut stderr = Vec::with_capacity(ys.len());
        for &y in ys {
            let e = functionals::estimate_psi(spec, y, 0.0, t, n, seed)?;
            values.push(e.mean);
            stderr.push(e.stderr);
        }
        Self::new(ys.to_vec(), values, stderr, delta.value.exp())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,value,stderr\n");
        for i in 0..self.y.len() {
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e}",
                self.y[i], self.values[i], self.stderr[i]
            );
        }
        out
    }

    pub fn from_csv(text: &str, tail: f64) -> Result<Self, KernelError> {
        let mut y = Vec::new();
        let mut v = Vec::new();
        let mut s = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if k == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> Result<f64, KernelError> {
                cols.get(i)
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| KernelError::InvalidTable(format!("bad line {}: {line}", k + 1)))
            };
            y.push(parse(0)?);
            v.push(parse(1)?);
            s.push(parse(2)?);
        }
        Self::new(y, v, s, tail)
    }
}

/// ∫₀^∞ e^{g(y)} dy for a log-integrand g, as e^{ln_scale}·value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LogIntegral {
    pub(crate) ln_scale: f64,
    pub(crate) value: f64,
    pub(crate) tail: f64,
    pub(crate) y_max: f64,
}

/// Integrate e^{g} over [0, ∞) after locating the peak and a cut-off where
/// g has dropped by 40 and is decreasing.
pub(crate) fn integrate_log(
    g: &dyn Fn(f64) -> f64,
    breaks: &[f64],
    scale: f64,
    cap: f64,
    rel_tol: f64,
    refine: u32,
) -> Result<LogIntegral, KernelError> {
    let step = scale / 20.0 / 2f64.powi(refine as i32);
    let mut peak = f64::NEG_INFINITY;
    let mut y = 0.0;
    let mut y_max = cap;
    let mut last = g(0.0);
    while y < cap {
        y += step;
        let v = g(y);
        if v > peak {
            peak = v;
        }
        if peak.is_finite() && v < peak - 40.0 && v < last {
            y_max = y;
            break;
        }
        last = v;
    }
    for &b in breaks {
        peak = peak.max(g(b));
    }
    if !peak.is_finite() {
        return Ok(LogIntegral {
            ln_scale: 0.0,
            value: 0.0,
            tail: 0.0,
            y_max,
        });
    }
    let slope = (g(y_max) - g(y_max - step)) / step;
    let tail = if slope < 0.0 {
        (g(y_max) - peak).exp() / -slope
    } else {
        f64::INFINITY
    };
    let mut pts: Vec<f64> = breaks
        .iter()
        .cloned()
        .filter(|&b| b > 0.0 && b < y_max)
        .collect();
    let mut p = step;
    while p < y_max {
        pts.push(p);
        p += 10.0 * step;
    }
    pts.push(0.0);
    pts.push(y_max);
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup();
    let f = |y: f64| {
        let v = g(y) - peak;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    let q = quad::simpson_breaks(f, &pts, rel_tol * scale);
    if !(tail <= rel_tol.max(1e-12) * q.value.abs().max(1e-300)) {
        return Err(KernelError::TailTooLarge {
            bound: tail,
            cap: y_max,
        });
    }
    Ok(LogIntegral {
        ln_scale: peak,
        value: q.value,
        tail,
        y_max,
    })
}

/// H(x, t) and x·H₁(t), both stored relative to e^{ln_scale}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValue {
    pub ln_scale: f64,
    pub h: f64,
    pub x_h1: f64,
    pub y_max: f64,
    pub tail_bound: f64,
}

impl HValue {
    pub fn h(&self) -> f64 {
        self.h * self.ln_scale.exp()
    }

    pub fn x_h1(&self) -> f64 {
        self.x_h1 * self.ln_scale.exp()
    }

    /// H − x·H₁.
    pub fn diff(&self) -> f64 {
        (self.h - self.x_h1) * self.ln_scale.exp()
    }

    pub fn ln_h(&self) -> f64 {
        self.ln_scale + self.h.ln()
    }
}

/// H(x,t) = ∫ h₀(y) 2t sinh(xy/2t) e^{vy/2 + δ(t)y/2t} ψₜ(y) e^{−y²/4t} dy,
/// and x·H₁(t) with the sinh replaced by its argument.
pub fn eval_h(
    curve: &BoundaryCurve,
    h0: &InitialCondition,
    x: f64,
    t: f64,
    psi: &PsiTable,
) -> Result<HValue, KernelError> {
    eval_h_refined(curve, h0, x, t, psi, 0)
}

/// `eval_h` with the quadrature node spacing divided by 2^refine.
pub fn eval_h_refined(
    curve: &BoundaryCurve,
    h0: &InitialCondition,
    x: f64,
    t: f64,
    psi: &PsiTable,
    refine: u32,
) -> Result<HValue, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    if !(x > 0.0) {
        return Err(KernelError::Negative {
            name: "x",
            value: x,
        });
    }
    h0.validate()?;
    let v = curve.v;
    let d = curve.delta_t(t);
    let base = move |y: f64| {
        h0.ln_eval(y) + (2.0 * t).ln() + 0.5 * v * y + d * y / (2.0 * t) + psi.eval(y).ln()
            - y * y / (4.0 * t)
    };
    let g = |y: f64| base(y) + ln_sinh(x * y / (2.0 * t));
    let g1 = |y: f64| base(y) + (x * y / (2.0 * t)).ln();
    let cap = 50.0 + 4.0 * v * t + 60.0 * t.sqrt();
    let mut breaks = h0.breakpoints();
    breaks.extend(psi.y.iter().cloned());
    let scale = t.sqrt().max(1.0);
    let main = integrate_log(&g, &breaks, scale, cap, 1e-10, refine)?;
    let first = integrate_log(&g1, &breaks, scale, cap, 1e-10, refine)?;
    let shift = (first.ln_scale - main.ln_scale).exp();
    Ok(HValue {
        ln_scale: main.ln_scale,
        h: main.value,
        x_h1: first.value * shift,
        y_max: main.y_max.max(first.y_max),
        tail_bound: main.tail + first.tail * shift,
    })
}

/// φ(y) ~ A y^α at infinity.
pub struct Phi<'a> {
    pub amplitude: f64,
    pub alpha: f64,
    pub eval: &'a (dyn Fn(f64) -> f64 + Sync),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalculusRegime {
    /// α > −1: A 2^α e^Δ Γ((1+α)/2) t^{(1+α)/2}.
    Power,
    /// α = −1: (A/2) e^Δ log t.
    Logarithmic,
    /// α < −1: ∫ φ ψ_∞.
    Convergent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalculusResult {
    pub numeric: f64,
    pub predicted: f64,
    pub regime: CalculusRegime,
}

impl CalculusResult {
    pub fn ratio(&self) -> f64 {
        self.numeric / self.predicted
    }
}

/// ∫₀^∞ φ(y) e^{−y²/4t + ε_t y} ψₜ(y) dy next to its leading-order prediction.
pub fn calculus_integral(
    phi: &Phi<'_>,
    t: f64,
    eps_t: f64,
    psi_t: &PsiTable,
    psi_inf: &PsiTable,
    delta: f64,
) -> Result<CalculusResult, KernelError> {
    if !(t > 0.0) {
        return Err(KernelError::NonPositiveTime(t));
    }
    let y_end = 2.0 * t * eps_t.max(0.0) + (4.0 * t * t * eps_t * eps_t + 200.0 * t).sqrt();
    let breaks = doubling_breaks(y_end, &psi_t.y);
    let f = |y: f64| (phi.eval)(y) * (-y * y / (4.0 * t) + eps_t * y).exp() * psi_t.eval(y);
    let numeric = quad::simpson_breaks(f, &breaks, 1e-12 * (1.0 + t.sqrt())).value;
    let (a, al) = (phi.amplitude, phi.alpha);
    let (regime, predicted) = if (al + 1.0).abs() < 1e-12 {
        (CalculusRegime::Logarithmic, 0.5 * a * delta.exp() * t.ln())
    } else if al > -1.0 {
        let g = crate::numerics::special::gamma(0.5 * (1.0 + al));
        (
            CalculusRegime::Power,
            a * 2f64.powf(al) * delta.exp() * g * t.powf(0.5 * (1.0 + al)),
        )
    } else {
        let tail = |y: f64| ((phi.eval)(y) * psi_inf.eval(y)).abs().ln();
        let slope = (tail(1e8) - tail(1e6)) / 100f64.ln();
        if !(slope < -1.05 || tail(1e8) == f64::NEG_INFINITY) {
            return Err(KernelError::NonIntegrable(slope));
        }
        let q = quad::simpson_to_infinity(|y| (phi.eval)(y) * psi_inf.eval(y), 0.0, 1.0, 1e-10);
        if !q.value.is_finite() {
            return Err(KernelError::NonIntegrable(slope));
        }
        (CalculusRegime::Convergent, q.value)
    };
    Ok(CalculusResult {
        numeric,
        predicted,
        regime,
    })
}

fn doubling_breaks(end: f64, extra: &[f64]) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut p = 0.5;
    while p < end {
        b.push(p);
        p *= 2.0;
    }
    b.extend(extra.iter().filter(|&&y| y > 0.0 && y < end));
    b.push(end);
    b.sort_by(|a, b| a.total_cmp(b));
    b.dedup();
    b
}

/// α = e^{−a−Δ}/(2√π) ∫ h₀(y) y e^y ψ_∞(y) dy with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaEstimate {
    pub value: f64,
    /// Propagated ψ_∞ standard error (fully correlated, so conservative).
    pub stderr: f64,
    /// Bias bound from the Δ truncation.
    pub delta_bound: f64,
    /// The integral vanished numerically.
    pub zero_flag: bool,
}

pub fn alpha_case_d(
    h0: &InitialCondition,
    a: f64,
    delta: &DeltaEstimate,
    psi_inf: &PsiTable,
) -> Result<AlphaEstimate, KernelError> {
    h0.validate()?;
    let pref = (-a - delta.value).exp() / (2.0 * PI.sqrt());
    let w = |y: f64| {
        let l = h0.ln_eval(y);
        if l.is_finite() {
            (l + y).exp() * y
        } else {
            0.0
        }
    };
    let mut breaks = h0.breakpoints();
    breaks.extend(psi_inf.y.iter().cloned());
    let end = h0.support_end().unwrap_or(1e6);
    let pts = doubling_breaks(end, &breaks);
    let integral = |f: &dyn Fn(f64) -> f64| -> f64 {
        let mut v = quad::simpson_breaks(f, &pts, 1e-12).value;
        if h0.support_end().is_none() {
            v += quad::simpson_to_infinity(f, end, end, 1e-12).value;
        }
        v
    };
    let main = integral(&|y| w(y) * psi_inf.eval(y));
    let err = integral(&|y| w(y) * psi_inf.stderr_at(y));
    let abs = integral(&|y| w(y).abs() * psi_inf.eval(y));
    let value = pref * main;
    let zero_flag = !(main.abs() > 1e-12 * abs.max(1e-300)) || main == 0.0;
    Ok(AlphaEstimate {
        value,
        stderr: pref * err,
        delta_bound: value.abs() * (delta.truncation_bound.exp() - 1.0),
        zero_flag,
    })
}
