use crate::{Error, Result};

/// A closed interval `[lo, hi]` expected to bracket a root.
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("bracket endpoints must be finite, got [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::invalid(format!("bracket requires lo < hi, got [{lo}, {hi}]")));
        }
        Ok(RootBracket { lo, hi })
    }
}

/// Find a root of `f` inside `bracket` by the Illinois variant of regula
/// falsi (bracket-preserving, superlinear on smooth problems).
///
/// Returns as soon as `|f| <= tol` or the bracket width shrinks to `tol`
/// (plus representation slack). Endpoints that are already exact roots are
/// returned immediately. Errors when the endpoints do not straddle a sign
/// change, when `f` returns NaN, or when the iteration budget runs out.
pub fn solve_scalar_root<F>(mut f: F, bracket: RootBracket, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::NonFinite("root function returned NaN at a bracket endpoint".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { lo: a, hi: b, f_lo: fa, f_hi: fb });
    }

    let mut side = 0i8; // which endpoint was retained last
    for _ in 0..500 {
        // Secant proposal, clamped away from the endpoints for robustness.
        let mut c = b - fb * (b - a) / (fb - fa);
        let width = b - a;
        let margin = 1e-3 * width;
        if !c.is_finite() || c <= a + margin || c >= b - margin {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.is_nan() {
            return Err(Error::NonFinite(format!("root function returned NaN at {c}")));
        }
        if fc == 0.0 || fc.abs() <= tol {
            return Ok(c);
        }
        if fc.signum() == fa.signum() {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5; // Illinois trick: damp the stale endpoint
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if b - a <= tol + 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            // Return the endpoint with the smaller residual.
            return Ok(if fa.abs() <= fb.abs() { a } else { b });
        }
    }
    Err(Error::DidNotConverge { iterations: 500, residual: fa.abs().min(fb.abs()) })
}

/// Maximize a unimodal (e.g. strictly concave) function on `[lo, hi]` by
/// golden-section search; returns `(argmax, max)`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::invalid(format!("golden section requires finite lo < hi, got [{lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    const INVPHI: f64 = 0.6180339887498949;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    if fc.is_nan() || fd.is_nan() {
        return Err(Error::NonFinite("golden section objective returned NaN".into()));
    }
    for _ in 0..300 {
        if b - a <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
        if fc.is_nan() || fd.is_nan() {
            return Err(Error::NonFinite("golden section objective returned NaN".into()));
        }
    }
    let x = if fc >= fd { c } else { d };
    let v = fc.max(fd);
    Ok((x, v))
}
