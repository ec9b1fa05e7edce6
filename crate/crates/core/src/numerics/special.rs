use crate::{Error, Result};

/// `-1/e`, the left edge of the principal Lambert branch domain.
const NEG_INV_E: f64 = -0.36787944117144233;

/// Principal branch `W0` of the Lambert W function: the solution `w >= -1`
/// of `w * exp(w) = x`, defined for `x >= -1/e`.
///
/// Halley iteration from a piecewise seed (branch-point series, `ln(1+x)`,
/// or `ln x - ln ln x` for large arguments), with a bisection fallback.
/// The residual satisfies `|w exp(w) - x| <= 1e-12 * max(1, |x|)`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::NonFinite("lambert_w0 argument is NaN".into()));
    }
    if x.is_infinite() {
        return Err(Error::NonFinite("lambert_w0 argument is infinite".into()));
    }
    if x < NEG_INV_E {
        // Tolerate rounding dust just below the branch point.
        if x > NEG_INV_E - 1e-12 {
            return Ok(-1.0);
        }
        return Err(Error::Domain(format!(
            "lambert_w0 argument {x:e} below branch point -1/e"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(x);
    let tol = 1e-14 * x.abs().max(1.0);
    for _ in 0..60 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            return Ok(w);
        }
        // Halley step for f(w) = w e^w - x.
        let fp = ew * (w + 1.0);
        let denom = fp - f * (w + 2.0) / (2.0 * (w + 1.0));
        if !denom.is_finite() || denom.abs() < 1e-300 || (w + 1.0).abs() < 1e-9 {
            break; // derivative collapse near the branch point
        }
        let next = w - f / denom;
        if !next.is_finite() {
            break;
        }
        if (next - w).abs() <= 1e-16 * w.abs().max(1.0) {
            w = next;
            break;
        }
        w = next;
    }
    let residual = (w * w.exp() - x).abs();
    if residual <= 1e-12 * x.abs().max(1.0) && w >= -1.0 - 1e-12 {
        return Ok(w.max(-1.0));
    }
    bisect_w0(x)
}

fn initial_guess(x: f64) -> f64 {
    if x < -0.25 {
        // Series around the branch point w = -1.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln()
    } else {
        let l = x.ln();
        l - l.ln()
    }
}

/// Guaranteed fallback: `W0` lies in `[-1, 0]` for negative arguments and in
/// `[0, ln(1+x)]` for positive ones, and `w e^w` is increasing on `w >= -1`.
fn bisect_w0(x: f64) -> Result<f64> {
    let (mut lo, mut hi) = if x < 0.0 { (-1.0, 0.0) } else { (0.0, (1.0 + x).ln().max(1e-12)) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let val = mid * mid.exp() - x;
        if val == 0.0 {
            return Ok(mid);
        }
        if val < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let w = 0.5 * (lo + hi);
    let residual = (w * w.exp() - x).abs();
    if residual <= 1e-12 * x.abs().max(1.0) {
        Ok(w)
    } else {
        Err(Error::DidNotConverge { iterations: 260, residual })
    }
}

/// Digamma function `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
///
/// Upward recurrence `psi(x+1) = psi(x) + 1/x` into the asymptotic region,
/// then the Bernoulli series. Absolute error is well under 1e-12 across the
/// positive axis.
pub fn digamma(x: f64) -> Result<f64> {
    if x.is_nan() || !(x > 0.0) {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Err(Error::NonFinite("digamma argument is infinite".into()));
    }
    let mut acc = 0.0;
    let mut t = x;
    while t < 8.0 {
        acc -= 1.0 / t;
        t += 1.0;
    }
    let inv = 1.0 / t;
    let u = inv * inv;
    // psi(t) ~ ln t - 1/(2t) - sum B_{2n} / (2n t^{2n})
    let series = u
        * (1.0 / 12.0
            - u * (1.0 / 120.0 - u * (1.0 / 252.0 - u * (1.0 / 240.0 - u * (1.0 / 132.0)))));
    Ok(acc + t.ln() - 0.5 * inv - series)
}
