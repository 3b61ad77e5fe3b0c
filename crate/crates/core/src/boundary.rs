//! Absorbing boundary curves m(t) and the constant Δ = ¼∫(m′ − v)².

use std::f64::consts::E;
use std::fmt;

use crate::numerics::quad;
use crate::numerics::spline::CubicSpline;
use crate::numerics::stats;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum BoundaryError {
    #[error("case {case}: parameter {name}={value} out of range ({reason})")]
    ParameterOutOfRange {
        case: CaseId,
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("m(0) = {m0} but the curve must start at 0; shift a by {shift} (or use relaxed mode)")]
    NonzeroStart { m0: f64, shift: f64 },
    #[error("m'(s) - v does not decay like 1/s (log-slope of |m'-v|(1+s) is {slope:.3})")]
    NonIntegrableTail { slope: f64 },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid correction table: {0}")]
    InvalidTable(String),
    #[error("case {0}: a vanishing correction r(t) is only allowed on theorem2 curves")]
    UnexpectedCorrection(CaseId),
    #[error("at most one correction family may be given")]
    ConflictingCorrections,
    #[error("cannot parse {key}={value}")]
    Parse { key: String, value: String },
}

/// Which family of boundary a curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseId {
    /// m(t) = vt.
    Linear,
    /// Slow initial data A x^ν e^{-γx}, 0 < γ < 1.
    A,
    /// Critical decay with ν > -2.
    B,
    /// The borderline ν = -2 with the extra log log t.
    C,
    /// Fast decay ν < -2 (Bramson regime).
    D,
    /// 2t - 3/2 log(t+1) + a + r(t) with a vanishing correction r.
    Theorem2,
}

impl CaseId {
    pub fn name(self) -> &'static str {
        match self {
            CaseId::Linear => "linear",
            CaseId::A => "a",
            CaseId::B => "b",
            CaseId::C => "c",
            CaseId::D => "d",
            CaseId::Theorem2 => "theorem2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "linear" => CaseId::Linear,
            "a" => CaseId::A,
            "b" => CaseId::B,
            "c" => CaseId::C,
            "d" => CaseId::D,
            "theorem2" | "thm2" | "t2" => CaseId::Theorem2,
            _ => return None,
        })
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Vanishing correction r(t) added to Theorem-2 curves.
#[derive(Debug, Clone, PartialEq)]
pub enum Correction {
    None,
    /// c / √(1+t).
    InverseSqrt {
        c: f64,
    },
    /// coeff · (1+t)^{-p}.
    Power {
        p: f64,
        coeff: f64,
    },
    Table(TableCorrection),
}

/// Tabulated r(t): natural cubic spline on the nodes, continued past the last
/// node by a combination of (1+t)^{-1/2}, (1+t)^{-3/2}, (1+t)^{-5/2} matched in
/// value, slope and curvature so the curve stays C².
#[derive(Debug, Clone, PartialEq)]
pub struct TableCorrection {
    spline: CubicSpline,
    t_last: f64,
    tail: [f64; 3],
}

const TAIL_POWERS: [f64; 3] = [0.5, 1.5, 2.5];

impl TableCorrection {
    pub fn new(t: &[f64], r: &[f64]) -> Result<Self, BoundaryError> {
        if t.first() != Some(&0.0) {
            return Err(BoundaryError::InvalidTable("first node must be t=0".into()));
        }
        let spline = CubicSpline::natural(t, r).ok_or_else(|| {
            BoundaryError::InvalidTable("need >= 3 strictly increasing nodes".into())
        })?;
        let t_last = *t.last().unwrap();
        let (v, d, dd) = spline.eval3(t_last);
        let s = 1.0 + t_last;
        let mut mat = [[0.0; 3]; 3];
        for (k, q) in TAIL_POWERS.iter().enumerate() {
            mat[0][k] = s.powf(-q);
            mat[1][k] = -q * s.powf(-q - 1.0);
            mat[2][k] = q * (q + 1.0) * s.powf(-q - 2.0);
        }
        let tail = solve3(mat, [v, d, dd]);
        Ok(Self {
            spline,
            t_last,
            tail,
        })
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (self.spline.nodes(), self.spline.values())
    }

    fn eval3(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.t_last {
            return self.spline.eval3(t);
        }
        let s = 1.0 + t;
        let mut out = (0.0, 0.0, 0.0);
        for (c, q) in self.tail.iter().zip(TAIL_POWERS) {
            out.0 += c * s.powf(-q);
            out.1 -= c * q * s.powf(-q - 1.0);
            out.2 += c * q * (q + 1.0) * s.powf(-q - 2.0);
        }
        out
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: [[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let d = det3(&m);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for (row, bv) in mk.iter_mut().zip(b) {
            row[k] = bv;
        }
        *xk = det3(&mk) / d;
    }
    x
}

impl Correction {
    /// r(t), r′(t), r″(t).
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let s = 1.0 + t;
        match self {
            Correction::None => (0.0, 0.0, 0.0),
            Correction::InverseSqrt { c } => {
                let r = c / s.sqrt();
                (r, -0.5 * r / s, 0.75 * r / (s * s))
            }
            Correction::Power { p, coeff } => {
                let r = coeff * s.powf(-p);
                (r, -p * r / s, p * (p + 1.0) * r / (s * s))
            }
            Correction::Table(tab) => tab.eval3(t),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Correction::None => "none".into(),
            Correction::InverseSqrt { c } => format!("inverse_sqrt(c={c})"),
            Correction::Power { p, coeff } => format!("power(p={p},coeff={coeff})"),
            Correction::Table(t) => format!("table({} nodes)", t.nodes().0.len()),
        }
    }
}

/// m(t) = v t + log_coeff·ln(1+t) + loglog_coeff·ln ln(e+t) + a + r(t).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub case: CaseId,
    pub v: f64,
    pub log_coeff: f64,
    pub loglog_coeff: f64,
    pub a: f64,
    pub correction: Correction,
    /// Set when the curve was built in relaxed mode with m(0) ≠ 0.
    pub start_flagged: bool,
}

impl BoundaryCurve {
    /// The straight line m(t) = vt.
    pub fn linear(v: f64) -> Self {
        Self {
            case: CaseId::Linear,
            v,
            log_coeff: 0.0,
            loglog_coeff: 0.0,
            a: 0.0,
            correction: Correction::None,
            start_flagged: false,
        }
    }

    /// m(t), m′(t), m″(t).
    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let s = 1.0 + t;
        let (r, r1, r2) = self.correction.eval3(t);
        let mut m = self.v * t + self.log_coeff * s.ln() + self.a + r;
        let mut m1 = self.v + self.log_coeff / s + r1;
        let mut m2 = -self.log_coeff / (s * s) + r2;
        if self.loglog_coeff != 0.0 {
            let e = E + t;
            let l = e.ln();
            m += self.loglog_coeff * l.ln();
            m1 += self.loglog_coeff / (e * l);
            m2 -= self.loglog_coeff * (l + 1.0) / (e * e * l * l);
        }
        (m, m1, m2)
    }

    pub fn m(&self, t: f64) -> f64 {
        self.eval3(t).0
    }

    pub fn m1(&self, t: f64) -> f64 {
        self.eval3(t).1
    }

    pub fn m2(&self, t: f64) -> f64 {
        self.eval3(t).2
    }

    /// δ(t) = m(t) − vt.
    pub fn delta_t(&self, t: f64) -> f64 {
        self.m(t) - self.v * t
    }

    /// r(t) alone.
    pub fn r(&self, t: f64) -> f64 {
        self.correction.eval3(t).0
    }

    /// m(0); zero for anchored curves.
    pub fn start_offset(&self) -> f64 {
        self.m(0.0)
    }

    /// m″ vanishes identically.
    pub fn is_linear(&self) -> bool {
        self.log_coeff == 0.0 && self.loglog_coeff == 0.0 && self.correction == Correction::None
    }

    pub fn label(&self) -> String {
        format!(
            "case={} v={} log_coeff={} loglog_coeff={} a={} r={}",
            self.case,
            self.v,
            self.log_coeff,
            self.loglog_coeff,
            self.a,
            self.correction.label()
        )
    }

    /// sup over `s ≥ 0` of |m″(s)|(1+s)², sampled on a geometric grid to 10⁸.
    pub fn m2_bound(&self) -> f64 {
        sample_grid(1e8)
            .into_iter()
            .map(|s| self.m2(s).abs() * (1.0 + s).powi(2))
            .fold(0.0, f64::max)
    }
}

fn sample_grid(end: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut s = 1e-3;
    while s < end {
        g.push(s);
        s *= 1.05;
    }
    g.push(end);
    g
}

/// Parameters selecting a boundary family.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub case: CaseId,
    pub gamma: f64,
    pub nu: Option<f64>,
    pub amplitude: f64,
    pub a: Option<f64>,
    pub v: Option<f64>,
    pub c: Option<f64>,
    /// (p, coeff) of a power-law correction.
    pub power: Option<(f64, f64)>,
    /// (t nodes, r values) of a tabulated correction.
    pub table: Option<(Vec<f64>, Vec<f64>)>,
    pub relaxed: bool,
}

impl CaseSpec {
    pub fn new(case: CaseId) -> Self {
        Self {
            case,
            gamma: 0.5,
            nu: None,
            amplitude: 1.0,
            a: None,
            v: None,
            c: None,
            power: None,
            table: None,
            relaxed: false,
        }
    }

    /// Apply one `key=value` setting; returns `Ok(false)` for keys this type does not own.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, BoundaryError> {
        let num = || -> Result<f64, BoundaryError> {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| BoundaryError::Parse {
                    key: key.into(),
                    value: value.into(),
                })
        };
        match key {
            "case" => {
                self.case = CaseId::parse(value).ok_or_else(|| BoundaryError::Parse {
                    key: key.into(),
                    value: value.into(),
                })?
            }
            "gamma" => self.gamma = num()?,
            "nu" => self.nu = Some(num()?),
            "A" | "amplitude" => self.amplitude = num()?,
            "a" => self.a = Some(num()?),
            "v" => self.v = Some(num()?),
            "c" => self.c = Some(num()?),
            "p" => self.power = Some((num()?, self.power.map_or(1.0, |p| p.1))),
            "coeff" => self.power = Some((self.power.map_or(0.5, |p| p.0), num()?)),
            "relaxed" => self.relaxed = matches!(value.trim(), "1" | "true" | "yes"),
            "r_table" => self.table = Some(parse_table(key, value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }
}

fn parse_table(key: &str, value: &str) -> Result<(Vec<f64>, Vec<f64>), BoundaryError> {
    let err = || BoundaryError::Parse {
        key: key.into(),
        value: value.into(),
    };
    let mut t = Vec::new();
    let mut r = Vec::new();
    for item in value.split(',') {
        let (a, b) = item.split_once(':').ok_or_else(err)?;
        t.push(a.trim().parse().map_err(|_| err())?);
        r.push(b.trim().parse().map_err(|_| err())?);
    }
    Ok((t, r))
}

/// Build the boundary curve for a case.
///
/// Theorem-1 cases carry no o(1) term, so their start is m(0) = a; strict mode
/// therefore requires a = 0. Theorem-2 curves default to a = −r(0).
pub fn make_boundary(spec: &CaseSpec) -> Result<BoundaryCurve, BoundaryError> {
    let case = spec.case;
    let out_of_range = |name, value, reason| BoundaryError::ParameterOutOfRange {
        case,
        name,
        value,
        reason,
    };
    let n_corr = spec.c.is_some() as u8 + spec.power.is_some() as u8 + spec.table.is_some() as u8;
    if n_corr > 1 {
        return Err(BoundaryError::ConflictingCorrections);
    }
    if n_corr > 0 && case != CaseId::Theorem2 {
        return Err(BoundaryError::UnexpectedCorrection(case));
    }
    let critical_v = |spec: &CaseSpec| -> Result<f64, BoundaryError> {
        match spec.v {
            Some(v) if v != 2.0 => Err(out_of_range("v", v, "critical cases have v = 2")),
            _ => Ok(2.0),
        }
    };
    let mut curve = BoundaryCurve::linear(2.0);
    curve.case = case;
    match case {
        CaseId::Linear => {
            let v = spec.v.unwrap_or(2.0);
            if !v.is_finite() {
                return Err(out_of_range("v", v, "must be finite"));
            }
            curve.v = v;
        }
        CaseId::A => {
            let g = spec.gamma;
            if !(g > 0.0 && g < 1.0) {
                return Err(out_of_range("gamma", g, "requires 0 < gamma < 1"));
            }
            let v = g + 1.0 / g;
            if let Some(vs) = spec.v {
                if (vs - v).abs() > 1e-12 {
                    return Err(out_of_range("v", vs, "case a fixes v = gamma + 1/gamma"));
                }
            }
            curve.v = v;
            curve.log_coeff = spec.nu.unwrap_or(0.0) / g;
        }
        CaseId::B => {
            let nu = spec.nu.unwrap_or(0.0);
            if nu <= -2.0 {
                return Err(out_of_range("nu", nu, "case b requires nu > -2"));
            }
            curve.v = critical_v(spec)?;
            curve.log_coeff = -(1.0 - nu) / 2.0;
        }
        CaseId::C => {
            if let Some(nu) = spec.nu {
                if nu != -2.0 {
                    return Err(out_of_range("nu", nu, "case c is nu = -2"));
                }
            }
            curve.v = critical_v(spec)?;
            curve.log_coeff = -1.5;
            curve.loglog_coeff = 1.0;
        }
        CaseId::D | CaseId::Theorem2 => {
            if let Some(nu) = spec.nu {
                if nu >= -2.0 {
                    return Err(out_of_range("nu", nu, "requires nu < -2"));
                }
            }
            curve.v = critical_v(spec)?;
            curve.log_coeff = -1.5;
        }
    }
    if case == CaseId::Theorem2 {
        curve.correction = if let Some(c) = spec.c {
            Correction::InverseSqrt { c }
        } else if let Some((p, coeff)) = spec.power {
            if p <= 0.0 {
                return Err(out_of_range("p", p, "r(t) must vanish: p > 0"));
            }
            Correction::Power { p, coeff }
        } else if let Some((t, r)) = &spec.table {
            Correction::Table(TableCorrection::new(t, r)?)
        } else {
            Correction::None
        };
    }
    let r0 = curve.correction.eval3(0.0).0;
    curve.a = match (case, spec.a) {
        (CaseId::Theorem2, None) => -r0,
        (_, Some(a)) => a,
        (_, None) => 0.0,
    };
    let m0 = curve.start_offset();
    if m0.abs() > 1e-12 {
        if spec.relaxed {
            curve.start_flagged = true;
        } else {
            return Err(BoundaryError::NonzeroStart { m0, shift: -m0 });
        }
    }
    Ok(curve)
}

/// Δ with its error budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Analytic bound on ¼∫_{S_max}^∞ (m′−v)².
    pub truncation_bound: f64,
    pub s_max: f64,
    /// Richardson estimate of the quadrature error on [0, S_max].
    pub quad_error: f64,
}

/// Δ = ¼∫₀^∞ (m′(s) − v)² ds with total error below `tol`.
///
/// Uses C = sup |m′(s) − v|(1+s) so the tail past S is at most C²/(4(1+S)).
pub fn compute_delta(curve: &BoundaryCurve, tol: f64) -> Result<DeltaEstimate, BoundaryError> {
    if !(tol > 0.0) {
        return Err(BoundaryError::InvalidTolerance(tol));
    }
    let scaled = |s: f64| (curve.m1(s) - curve.v).abs() * (1.0 + s);
    let grid = sample_grid(1e8);
    let c = grid.iter().map(|&s| scaled(s)).fold(0.0, f64::max);
    if c == 0.0 {
        return Ok(DeltaEstimate {
            value: 0.0,
            truncation_bound: 0.0,
            s_max: 0.0,
            quad_error: 0.0,
        });
    }
    let (lo, hi) = (scaled(1e6), scaled(1e8));
    let slope = if lo > 0.0 && hi > 0.0 {
        (hi / lo).ln() / 100f64.ln()
    } else {
        0.0
    };
    if slope > 0.05 || !c.is_finite() {
        return Err(BoundaryError::NonIntegrableTail { slope });
    }
    // 1 + S = 1.01·C²/(2 tol) puts the tail bound just under tol/2.
    let s_max = (1.01 * c * c / (2.0 * tol) - 1.0).max(1.0);
    let truncation_bound = c * c / (4.0 * (1.0 + s_max));
    let mut breaks = vec![0.0];
    let mut b = 1.0;
    while b < s_max {
        breaks.push(b);
        b *= 2.0;
    }
    breaks.push(s_max);
    let q = quad::simpson_breaks(
        |s| {
            let g = curve.m1(s) - curve.v;
            0.25 * g * g
        },
        &breaks,
        tol / 2.0,
    );
    Ok(DeltaEstimate {
        value: q.value,
        truncation_bound,
        s_max,
        quad_error: q.error,
    })
}

/// Outcome of the smoothness hypothesis checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityReport {
    /// sup over the grid of |m″(t)|(1+t)².
    pub sup_m2: f64,
    /// sup over the grid of |r″(t)| t^{2+η}.
    pub sup_r2: f64,
    pub m0: f64,
    pub m2_bounded: bool,
    pub r2_bounded: bool,
    pub anchored: bool,
}

impl RegularityReport {
    pub fn pass(&self) -> bool {
        self.m2_bounded && self.r2_bounded && self.anchored
    }
}

/// Check m″ = O(1/t²), r″ = O(t^{-2-η}) and m(0) = 0 on a time grid.
///
/// Boundedness is judged from the log-log slope of the weighted quantity over
/// the last decade of the grid, so the grid should reach t ≳ 10³.
pub fn verify_regularity(curve: &BoundaryCurve, grid: &[f64], eta: f64) -> RegularityReport {
    let g_m: Vec<f64> = grid
        .iter()
        .map(|&t| curve.m2(t).abs() * (1.0 + t).powi(2))
        .collect();
    let g_r: Vec<f64> = grid
        .iter()
        .map(|&t| curve.correction.eval3(t).2.abs() * t.powf(2.0 + eta))
        .collect();
    let m0 = curve.start_offset();
    RegularityReport {
        sup_m2: g_m.iter().cloned().fold(0.0, f64::max),
        sup_r2: g_r.iter().cloned().fold(0.0, f64::max),
        m0,
        m2_bounded: tail_bounded(grid, &g_m),
        r2_bounded: tail_bounded(grid, &g_r),
        anchored: m0.abs() <= 1e-12,
    }
}

fn tail_bounded(grid: &[f64], g: &[f64]) -> bool {
    if g.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let t_max = grid.iter().cloned().fold(0.0, f64::max);
    let (x, y): (Vec<f64>, Vec<f64>) = grid
        .iter()
        .zip(g)
        .filter(|(t, v)| **t >= t_max / 10.0 && **t > 0.0 && **v > 1e-300)
        .map(|(t, v)| (t.ln(), v.ln()))
        .unzip();
    if x.len() < 2 {
        return true;
    }
    match stats::linear_fit(&x, &y) {
        Some(fit) => fit.slope <= 0.02,
        None => true,
    }
}
