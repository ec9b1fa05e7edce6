//! Channel and scenario modeling: path-loss laws, per-user links, network
//! snapshots, co-channel interference geometry, and seeded sampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Speed of light in m/s, used to convert carrier frequency to wavelength.
const SPEED_OF_LIGHT: f64 = 2.9979e8;

/// Distance-to-gain laws used across the scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathLossModel {
    /// Indoor dual-slope law: free-space `(lambda/(4 pi d))^2`-type decay with
    /// exponent `slope_before` everywhere, times an extra `(d/bp)^-slope_after`
    /// beyond the breakpoint. Continuous at the breakpoint.
    TgnIndoor { carrier_hz: f64, breakpoint_m: f64, slope_before: f64, slope_after: f64 },
    /// `L(d) = coefficient * d^-exponent`.
    PowerLaw { coefficient: f64, exponent: f64 },
    /// `L(d) = 1 / (1 + d^exponent)`; bounded at zero distance.
    Bounded { exponent: f64 },
}

impl PathLossModel {
    /// The indoor dual-slope model with the conventional 2 / 3.5 slopes.
    pub fn tgn_indoor(carrier_hz: f64, breakpoint_m: f64) -> Self {
        PathLossModel::TgnIndoor { carrier_hz, breakpoint_m, slope_before: 2.0, slope_after: 3.5 }
    }

    /// Linear power gain at distance `d_m` meters.
    pub fn path_loss(&self, d_m: f64) -> Result<f64> {
        if !(d_m > 0.0) || !d_m.is_finite() {
            return Err(Error::invalid(format!("distance must be positive and finite, got {d_m}")));
        }
        match *self {
            PathLossModel::TgnIndoor { carrier_hz, breakpoint_m, slope_before, slope_after } => {
                if !(carrier_hz > 0.0) || !(breakpoint_m > 0.0) {
                    return Err(Error::invalid(
                        "carrier frequency and breakpoint must be positive".to_string(),
                    ));
                }
                let lambda = SPEED_OF_LIGHT / carrier_hz;
                let unit = lambda / (4.0 * std::f64::consts::PI);
                let free_space = unit.powi(2) * d_m.powf(-slope_before) * unit.powf(slope_before - 2.0);
                if d_m <= breakpoint_m {
                    Ok(free_space)
                } else {
                    Ok(free_space * (d_m / breakpoint_m).powf(-slope_after))
                }
            }
            PathLossModel::PowerLaw { coefficient, exponent } => {
                if !(coefficient > 0.0) {
                    return Err(Error::invalid("power-law coefficient must be positive".to_string()));
                }
                Ok(coefficient * d_m.powf(-exponent))
            }
            PathLossModel::Bounded { exponent } => Ok(1.0 / (1.0 + d_m.powf(exponent))),
        }
    }
}

/// One downlink/uplink user link: geometry plus small-scale state.
#[derive(Debug, Clone, Copy)]
pub struct UserLink {
    pub distance_m: f64,
    /// Large-scale path-loss gain `L`.
    pub path_loss: f64,
    /// Small-scale fading power `|H|^2`.
    pub fading_power: f64,
    /// Product of the directional antenna gains at both ends.
    pub gain_product: f64,
}

impl UserLink {
    pub fn new(distance_m: f64, path_loss: f64, fading_power: f64, gain_product: f64) -> Result<Self> {
        for (name, v) in
            [("distance", distance_m), ("path loss", path_loss), ("gain product", gain_product)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(fading_power >= 0.0) || !fading_power.is_finite() {
            return Err(Error::invalid(format!("fading power must be nonnegative, got {fading_power}")));
        }
        Ok(UserLink { distance_m, path_loss, fading_power, gain_product })
    }

    /// One-hop amplitude-squared channel gain `gamma = L |H|^2 G0 Gn`.
    pub fn gamma(&self) -> f64 {
        self.path_loss * self.fading_power * self.gain_product
    }

    /// Two-hop (harvest + uplink) effective gain `g = gamma^2`; holds exactly
    /// by construction.
    pub fn g(&self) -> f64 {
        let gamma = self.gamma();
        gamma * gamma
    }
}

/// Snapshot of a wireless-powered network: power budget, noise, conversion
/// efficiencies, and user links ordered by non-increasing `g`.
#[derive(Debug, Clone)]
pub struct NetworkScenario {
    pub p0_watts: f64,
    pub n0w_watts: f64,
    /// Energy-harvesting efficiency.
    pub eta1: f64,
    /// Power-amplifier efficiency.
    pub eta2: f64,
    pub users: Vec<UserLink>,
}

impl NetworkScenario {
    pub fn new(
        p0_watts: f64,
        n0w_watts: f64,
        eta1: f64,
        eta2: f64,
        users: Vec<UserLink>,
    ) -> Result<Self> {
        if !(p0_watts > 0.0) || !p0_watts.is_finite() {
            return Err(Error::invalid(format!("P0 must be positive, got {p0_watts}")));
        }
        if !(n0w_watts > 0.0) || !n0w_watts.is_finite() {
            return Err(Error::invalid(format!("noise power must be positive, got {n0w_watts}")));
        }
        for (name, v) in [("eta1", eta1), ("eta2", eta2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if users.is_empty() {
            return Err(Error::invalid("scenario needs at least one user".to_string()));
        }
        Ok(NetworkScenario { p0_watts, n0w_watts, eta1, eta2, users })
    }

    /// Transmit-power-to-noise ratio `rho0 = P0 / (N0 W)`.
    pub fn rho0(&self) -> f64 {
        self.p0_watts / self.n0w_watts
    }

    /// Cascade efficiency `eta = eta1 * eta2`.
    pub fn eta(&self) -> f64 {
        self.eta1 * self.eta2
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// Effective two-hop gain of user `n`.
    pub fn g(&self, n: usize) -> f64 {
        self.users[n].g()
    }

    pub fn sum_g(&self) -> f64 {
        self.users.iter().map(|u| u.g()).sum()
    }

    /// Per-user harvest-to-uplink SNR scale `X_n = eta rho0 g_n`.
    pub fn x_n(&self, n: usize) -> f64 {
        self.eta() * self.rho0() * self.g(n)
    }

    /// Aggregate `X = eta rho0 sum g`.
    pub fn x_total(&self) -> f64 {
        self.eta() * self.rho0() * self.sum_g()
    }

    /// True when users are ordered by non-increasing `g` (the convention the
    /// NOMA and fairness solvers rely on).
    pub fn is_sorted_by_gain(&self) -> bool {
        self.users.windows(2).all(|w| w[0].g() >= w[1].g())
    }

    /// Sort users by non-increasing `g` (stable: ties keep their original
    /// relative order). Returns the sorted scenario and, for each new slot,
    /// the original user index.
    pub fn normalized(&self) -> (NetworkScenario, Vec<usize>) {
        let mut idx: Vec<usize> = (0..self.users.len()).collect();
        idx.sort_by(|&a, &b| {
            self.users[b]
                .g()
                .partial_cmp(&self.users[a].g())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let users = idx.iter().map(|&i| self.users[i]).collect();
        (
            NetworkScenario {
                p0_watts: self.p0_watts,
                n0w_watts: self.n0w_watts,
                eta1: self.eta1,
                eta2: self.eta2,
                users,
            },
            idx,
        )
    }
}

/// Require the descending-gain user order; solvers with order-dependent
/// semantics call this up front.
pub fn require_sorted(scenario: &NetworkScenario) -> Result<()> {
    if scenario.is_sorted_by_gain() {
        Ok(())
    } else {
        Err(Error::invalid(
            "users must be sorted by non-increasing effective gain; call normalized() first"
                .to_string(),
        ))
    }
}

/// Co-channel interference geometry for the joint downlink/uplink scenarios:
/// one interference source at distance `d0_m` from the base station, users on
/// the segment between them. Powers are noise-normalized.
#[derive(Debug, Clone)]
pub struct InterferenceScenario {
    /// Interferer transmit power over noise.
    pub p_is: f64,
    /// Interferer-to-base-station distance in meters.
    pub d0_m: f64,
    /// Bounded path-loss exponent toward the interferer.
    pub exponent: f64,
}

impl InterferenceScenario {
    pub fn new(p_is: f64, d0_m: f64, exponent: f64) -> Result<Self> {
        if !(p_is >= 0.0) || !p_is.is_finite() {
            return Err(Error::invalid(format!("interference power must be nonnegative, got {p_is}")));
        }
        if !(d0_m > 0.0) {
            return Err(Error::invalid(format!("interferer distance must be positive, got {d0_m}")));
        }
        Ok(InterferenceScenario { p_is, d0_m, exponent })
    }

    /// Interference power seen by a user at `d_m` meters from the BS (the
    /// interferer is `d0_m - d_m` away from the user).
    pub fn at_user(&self, d_m: f64) -> Result<f64> {
        let gap = self.d0_m - d_m;
        if !(gap > 0.0) {
            return Err(Error::invalid(format!(
                "user at {d_m} m is not between BS and interferer at {} m",
                self.d0_m
            )));
        }
        Ok(self.p_is / (1.0 + gap.powf(self.exponent)))
    }

    /// Interference power seen at the base station.
    pub fn at_base_station(&self) -> f64 {
        self.p_is / (1.0 + self.d0_m.powf(self.exponent))
    }
}

/// Uniformly sample `n` distances from an annulus (uniform over area):
/// `d^2 ~ U[r1^2, r2^2]`. Deterministic for a fixed seed.
pub fn sample_ring_distances(r1_m: f64, r2_m: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if !(r1_m > 0.0) || !(r2_m > r1_m) {
        return Err(Error::invalid(format!("ring radii must satisfy 0 < r1 < r2, got ({r1_m}, {r2_m})")));
    }
    if n == 0 {
        return Err(Error::invalid("requested zero ring samples".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (r1_m * r1_m, r2_m * r2_m);
    Ok((0..n).map(|_| (lo + (hi - lo) * rng.gen::<f64>()).sqrt()).collect())
}

/// Rayleigh-fading power draw `|H|^2 ~ Exp(1)` from a caller-owned RNG.
pub fn rayleigh_power<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Inverse-CDF; guard the log away from zero.
    let u: f64 = rng.gen::<f64>();
    -(1.0 - u).max(f64::MIN_POSITIVE).ln()
}

/// Single seeded Rayleigh power draw; identical output for identical seed.
pub fn sample_rayleigh_power(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rayleigh_power(&mut rng)
}
