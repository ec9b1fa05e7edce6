//! Single-user harvest-then-transmit time allocation.
//!
//! A device harvests downlink energy for a fraction `T` of the frame and
//! spends it on uplink transmission in the remaining `1 - T`. With SNR scale
//! `X` (power-to-noise ratio times cascade efficiency times two-hop gain) the
//! frame-normalized throughput is `R(T) = (1 - T) log2(1 + X T / (1 - T))`.

use crate::numerics::{digamma, lambert_w0, LN_2};
use crate::{Error, Result};

/// How the harvested-energy SNR scale arises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyArrival {
    /// Fixed SNR scale `X`.
    Deterministic(f64),
    /// `X = s * V` with `V ~ Gamma(kappa, zeta)` (shape, scale), mean `kappa * zeta * s`.
    GammaStochastic { kappa: f64, zeta: f64 },
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("SNR scale X must be positive and finite, got {x}")));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!("harvest fraction T must lie in [0, 1), got {t}")));
    }
    Ok(())
}

/// Throughput `(1 - T) log2(1 + X T / (1 - T))` in bit/s/Hz; `0` at `T = 0`.
pub fn throughput_single(x: f64, t: f64) -> Result<f64> {
    check_x(x)?;
    check_t(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 - t) * (1.0 + x * t / (1.0 - t)).log2())
}

/// Throughput-maximizing harvest fraction for a known SNR scale:
/// `T* = (X - 1 - W0((X-1)/e)) / ((X - 1)(W0((X-1)/e) + 1))`,
/// continuously extended to `1 - 1/e` at `X = 1`.
pub fn optimal_t_deterministic(x: f64) -> Result<f64> {
    check_x(x)?;
    let u = x - 1.0;
    if u.abs() <= 1e-8 {
        return Ok(1.0 - std::f64::consts::E.recip());
    }
    let w = lambert_w0(u / std::f64::consts::E)?;
    let t = (u - w) / (u * (w + 1.0));
    debug_assert!((0.0..1.0).contains(&t), "closed form left (0,1): T = {t} at X = {x}");
    Ok(t)
}

/// High-SNR optimal harvest fraction under `Gamma(kappa, zeta)` energy
/// arrivals: `T* = 1 / (W0(zeta * exp(psi(kappa) - 1)) + 1)`.
pub fn optimal_t_stochastic_high_snr(kappa: f64, zeta: f64) -> Result<f64> {
    for (name, v) in [("kappa", kappa), ("zeta", zeta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let w = lambert_w0(zeta * (digamma(kappa)? - 1.0).exp())?;
    Ok(1.0 / (w + 1.0))
}

/// Low-SNR expected throughput `T * kappa * zeta * s / ln 2` for
/// `X = s * Gamma(kappa, zeta)` energy arrivals (from `log2(1+u) ~ u / ln 2`).
pub fn expected_throughput_low_snr(kappa: f64, zeta: f64, s: f64, t: f64) -> Result<f64> {
    for (name, v) in [("kappa", kappa), ("zeta", zeta), ("s", s)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
        }
    }
    check_t(t)?;
    Ok(t * kappa * zeta * s / LN_2)
}
