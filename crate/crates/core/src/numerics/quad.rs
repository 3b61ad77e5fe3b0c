//! Adaptive Simpson quadrature.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    /// Richardson estimate of the absolute error.
    pub error: f64,
    pub evaluations: usize,
}

const MIN_DEPTH: u32 = 4;
const MAX_DEPTH: u32 = 50;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Quad {
    if b <= a {
        return Quad {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        };
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut q = Quad {
        value: 0.0,
        error: 0.0,
        evaluations: 3,
    };
    recurse(&f, a, b, fa, fm, fb, whole, tol, 0, &mut q);
    q
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    q: &mut Quad,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    q.evaluations += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= MAX_DEPTH || (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol) {
        q.value += left + right + delta / 15.0;
        q.error += delta.abs() / 15.0;
        return;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, q);
    recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, q);
}

/// Integrate across consecutive breakpoints, splitting `tol` evenly.
pub fn simpson_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> Quad {
    let mut total = Quad {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    if breaks.len() < 2 {
        return total;
    }
    let share = tol / (breaks.len() - 1) as f64;
    for w in breaks.windows(2) {
        let q = simpson(&f, w[0], w[1], share);
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
    }
    total
}

/// Integrate on `[a, inf)` over geometrically growing panels starting with width `scale`.
///
/// Stops once two consecutive panels contribute less than `tol / 100`;
/// the last panel's magnitude is added to the error as a tail estimate.
pub fn simpson_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, tol: f64) -> Quad {
    let mut total = Quad {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut lo = a;
    let mut width = scale;
    let mut quiet = 0;
    for k in 0..200 {
        let hi = lo + width;
        let q = simpson(&f, lo, hi, tol / 64.0);
        total.value += q.value;
        total.error += q.error;
        total.evaluations += q.evaluations;
        if q.value.abs() < tol / 100.0 && k >= 2 {
            quiet += 1;
            if quiet >= 2 {
                total.error += q.value.abs();
                break;
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12);
        assert!((q.value - 0.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_function() {
        let q = simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-10);
        assert!((q.value - 2.0).abs() < 1e-10);
        assert!(q.error < 1e-9);
    }

    #[test]
    fn breaks_handle_kink() {
        let q = simpson_breaks(|x: f64| (x - 0.3).abs(), &[0.0, 0.3, 1.0], 1e-12);
        assert!((q.value - (0.045 + 0.245)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let q = simpson_to_infinity(|x: f64| (-x * x).exp(), 0.0, 1.0, 1e-10);
        assert!((q.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-9);
        let q = simpson_to_infinity(|x: f64| 1.0 / ((1.0 + x) * (1.0 + x)), 0.0, 1.0, 1e-8);
        assert!((q.value - 1.0).abs() < 1e-6);
    }
}
