//! Joint downlink/uplink optimization for a wirelessly powered network. The
//! frame splits into a downlink phase `T` (each user routes a fraction
//! `theta_n` of received power to its detector and harvests the rest) and an
//! uplink phase `1 - T` in which users spend their harvested energy on a
//! NOMA multiple-access channel. A common service rate `R` is maximized with
//! every user guaranteed `alpha R` downlink and `beta R = (1 - alpha) R`
//! uplink.
//!
//! For each frame split on a grid, the inner problem is solved in log-space:
//! after substituting `x = ln(value)` for the rate, the downlink resources
//! and the detector fractions, every constraint becomes convex and a barrier
//! method applies.

use crate::numerics::{maximize_concave, ConcaveConfig, ConcaveProblem, SubgradientConfig, LN_2};
use crate::{Error, Result, SolverReport};

/// Floor used for all log-space variables.
const POWER_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone)]
pub struct JointSystem {
    /// Channel power gains, ascending (weakest user first).
    pub gammas: Vec<f64>,
    /// Base-station transmit power over noise.
    pub rho0: f64,
    /// Harvester efficiency.
    pub eta1: f64,
    /// Interference power over noise seen by each user.
    pub user_interference: Vec<f64>,
    /// Interference power over noise at the base station.
    pub bs_interference: f64,
}

impl JointSystem {
    pub fn new(
        gammas: Vec<f64>,
        rho0: f64,
        eta1: f64,
        user_interference: Vec<f64>,
        bs_interference: f64,
    ) -> Result<Self> {
        let n = gammas.len();
        if n == 0 || n > 8 {
            return Err(Error::invalid("between 1 and 8 users supported".to_string()));
        }
        if user_interference.len() != n {
            return Err(Error::invalid("interference list must match users".to_string()));
        }
        if gammas.iter().any(|g| !(*g > 0.0)) || gammas.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("gains must be positive and ascending".to_string()));
        }
        if !(rho0 > 0.0) || !(eta1 > 0.0 && eta1 <= 1.0) {
            return Err(Error::invalid("need rho0 > 0 and eta1 in (0, 1]".to_string()));
        }
        if user_interference.iter().any(|p| !(*p >= 0.0)) || !(bs_interference >= 0.0) {
            return Err(Error::invalid("interference powers must be non-negative".to_string()));
        }
        Ok(Self { gammas, rho0, eta1, user_interference, bs_interference })
    }

    pub fn interference_free(gammas: Vec<f64>, rho0: f64, eta1: f64) -> Result<Self> {
        let n = gammas.len();
        Self::new(gammas, rho0, eta1, vec![0.0; n], 0.0)
    }

    pub fn n_users(&self) -> usize {
        self.gammas.len()
    }

    fn is_interference_free(&self) -> bool {
        self.bs_interference == 0.0 && self.user_interference.iter().all(|p| *p == 0.0)
    }

    /// Received downlink power over noise at user `n`.
    fn received(&self, n: usize) -> f64 {
        self.gammas[n] * self.rho0 + self.user_interference[n]
    }
}

#[derive(Debug, Clone)]
pub struct JointConfig {
    /// Spacing of the frame-split grid.
    pub t_step: f64,
    pub barrier: ConcaveConfig,
}

impl Default for JointConfig {
    fn default() -> Self {
        Self { t_step: 0.01, barrier: ConcaveConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct JointSolution {
    /// Common service rate `R`.
    pub service_rate: f64,
    /// Share of `R` delivered on the downlink.
    pub downlink_share: f64,
    pub frame_split: f64,
    /// Downlink resource per user: power over noise for NOMA, slot length
    /// for TDMA.
    pub downlink_alloc: Vec<f64>,
    /// Fraction of received power each user routes to its detector.
    pub info_fractions: Vec<f64>,
    pub downlink_rates: Vec<f64>,
    /// Common uplink rate `(1 - alpha) R`.
    pub uplink_rate: f64,
    /// Harvested energies over noise.
    pub energies: Vec<f64>,
    pub report: SolverReport,
}

/// `ln(2^y - 1)` and its derivative in `y`, stable across the whole range.
fn ln_pow2m1(y: f64) -> (f64, f64) {
    let t = y * LN_2;
    if t > 690.0 {
        (t, LN_2)
    } else {
        let em1 = t.exp_m1().max(1e-300);
        (em1.ln(), LN_2 * (1.0 + 1.0 / em1))
    }
}

/// Downlink NOMA rate of every user: each message must survive at its own
/// receiver and at every stronger receiver that cancels it.
pub fn noma_downlink_rates(
    system: &JointSystem,
    t: f64,
    powers: &[f64],
    thetas: &[f64],
) -> Vec<f64> {
    let n = system.n_users();
    (0..n)
        .map(|u| {
            let tail: f64 = powers[u + 1..].iter().sum();
            let sinr = (u..n)
                .map(|j| {
                    let tg = thetas[j] * system.gammas[j];
                    powers[u] * tg / (tg * tail + thetas[j] * system.user_interference[j] + 1.0)
                })
                .fold(f64::INFINITY, f64::min);
            t * sinr.ln_1p() / LN_2
        })
        .collect()
}

/// Energy each user harvests during a NOMA downlink phase.
pub fn noma_energies(system: &JointSystem, t: f64, thetas: &[f64]) -> Vec<f64> {
    (0..system.n_users())
        .map(|u| system.eta1 * t * (1.0 - thetas[u]) * system.received(u))
        .collect()
}

/// Downlink TDMA rate of every user.
pub fn tdma_downlink_rates(system: &JointSystem, slots: &[f64], thetas: &[f64]) -> Vec<f64> {
    (0..system.n_users())
        .map(|u| {
            let snr = thetas[u] * system.rho0 * system.gammas[u]
                / (thetas[u] * system.user_interference[u] + 1.0);
            slots[u] * snr.ln_1p() / LN_2
        })
        .collect()
}

/// Energy each user harvests across a TDMA downlink phase: every slot except
/// the detector share of its own.
pub fn tdma_energies(system: &JointSystem, slots: &[f64], thetas: &[f64]) -> Vec<f64> {
    let total: f64 = slots.iter().sum();
    (0..system.n_users())
        .map(|u| system.eta1 * system.received(u) * (total - thetas[u] * slots[u]))
        .collect()
}

/// Multiple-access capacity of a user subset in the uplink phase.
pub fn uplink_capacity(system: &JointSystem, t: f64, energies: &[f64], mask: u32) -> f64 {
    let mut sum = 0.0;
    for u in 0..system.n_users() {
        if mask & (1 << u) != 0 {
            sum += energies[u] / (1.0 - t) * system.gammas[u];
        }
    }
    (1.0 - t) * (sum / (system.bs_interference + 1.0)).ln_1p() / LN_2
}

/// Largest service rate the given allocation supports.
fn supported_rate(
    system: &JointSystem,
    alpha: f64,
    t: f64,
    downlink_rates: &[f64],
    energies: &[f64],
) -> f64 {
    let beta = 1.0 - alpha;
    let mut r = f64::INFINITY;
    if alpha > 0.0 {
        for dl in downlink_rates {
            r = r.min(dl / alpha);
        }
    }
    if beta > 0.0 {
        let n = system.n_users();
        for mask in 1u32..(1 << n) {
            let users = mask.count_ones() as f64;
            r = r.min(uplink_capacity(system, t, energies, mask) / (beta * users));
        }
    }
    r
}

/// Max relative violation of the original constraints at a NOMA solution.
pub fn max_violation_noma(system: &JointSystem, alpha: f64, sol: &JointSolution) -> f64 {
    let dl = noma_downlink_rates(system, sol.frame_split, &sol.downlink_alloc, &sol.info_fractions);
    let en = noma_energies(system, sol.frame_split, &sol.info_fractions);
    let supported = supported_rate(system, alpha, sol.frame_split, &dl, &en);
    let power: f64 = sol.downlink_alloc.iter().sum();
    let mut v = (power - system.rho0) / system.rho0;
    v = v.max((sol.service_rate - supported) / sol.service_rate.max(1e-300));
    for th in &sol.info_fractions {
        v = v.max(th - 1.0);
    }
    v.max(0.0)
}

/// Max relative violation of the original constraints at a TDMA solution.
pub fn max_violation_tdma(system: &JointSystem, alpha: f64, sol: &JointSolution) -> f64 {
    let dl = tdma_downlink_rates(system, &sol.downlink_alloc, &sol.info_fractions);
    let en = tdma_energies(system, &sol.downlink_alloc, &sol.info_fractions);
    let supported = supported_rate(system, alpha, sol.frame_split, &dl, &en);
    let used: f64 = sol.downlink_alloc.iter().sum();
    let mut v = (used - sol.frame_split) / sol.frame_split;
    v = v.max((sol.service_rate - supported) / sol.service_rate.max(1e-300));
    for th in &sol.info_fractions {
        v = v.max(th - 1.0);
    }
    v.max(0.0)
}

struct InnerPoint {
    rate: f64,
    alloc: Vec<f64>,
    thetas: Vec<f64>,
    iterations: usize,
    stationarity: f64,
}

/// Upper bound on any feasible service rate at this frame split (used to box
/// the log-rate so the transformed exponentials stay representable).
fn rate_ceiling(system: &JointSystem, alpha: f64, t: f64, tdma: bool) -> f64 {
    let beta = 1.0 - alpha;
    let n = system.n_users();
    let mut hi = f64::INFINITY;
    if alpha > 0.0 {
        if tdma {
            let denom: f64 = (0..n)
                .map(|u| {
                    let snr = system.rho0 * system.gammas[u] / (system.user_interference[u] + 1.0);
                    1.0 / (snr.ln_1p() / LN_2)
                })
                .sum();
            hi = hi.min(t / (alpha * denom));
        } else {
            let snr = system.rho0 * system.gammas[0];
            hi = hi.min(t * snr.ln_1p() / (LN_2 * alpha));
        }
    }
    if beta > 0.0 {
        let full: Vec<f64> =
            (0..n).map(|u| system.eta1 * t * system.received(u)).collect();
        for mask in 1u32..(1 << n) {
            let users = mask.count_ones() as f64;
            hi = hi.min(uplink_capacity(system, t, &full, mask) / (beta * users));
        }
    }
    hi
}

/// Shared inner solve. `downlink` supplies the transformed downlink
/// constraints (given the variable layout `[ln R | ln alloc | ln theta]`);
/// everything else (uplink subsets, resource budget, detector cap) is common
/// to the NOMA and TDMA formulations up to the energy weights and budget.
fn solve_inner(
    system: &JointSystem,
    alpha: f64,
    t: f64,
    tdma: bool,
    ordered_detectors: bool,
    own_receiver_only: bool,
    barrier: &ConcaveConfig,
) -> Result<InnerPoint> {
    let n = system.n_users();
    let dim = 1 + 2 * n;
    let beta = 1.0 - alpha;
    let r_hi = rate_ceiling(system, alpha, t, tdma);
    if !(r_hi > 0.0) || !r_hi.is_finite() {
        return Err(Error::Infeasible(format!("no positive rate at split {t}")));
    }
    let budget = if tdma { t } else { system.rho0 };

    let mut lower = vec![POWER_FLOOR.ln(); dim];
    let mut upper = vec![0.0; dim];
    lower[0] = (r_hi * 1e-9).ln();
    upper[0] = r_hi.ln();
    for i in 0..n {
        lower[1 + i] = (budget * POWER_FLOOR).ln();
        upper[1 + i] = budget.ln();
        upper[1 + n + i] = 0.0; // theta <= 1
    }

    type Vg<'a> = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a>;
    let mut constraints: Vec<Vg> = Vec::new();

    if alpha > 0.0 {
        if tdma {
            for u in 0..n {
                let (gamma, p_i) = (system.gammas[u], system.user_interference[u]);
                let rhs = (system.rho0 * gamma).ln();
                constraints.push(Box::new(move |x: &[f64]| {
                    let mut grad = vec![0.0; dim];
                    let y = alpha * (x[0] - x[1 + u]).exp();
                    let (lv, ld) = ln_pow2m1(y);
                    grad[0] = ld * y;
                    grad[1 + u] = -ld * y;
                    let e = (-x[1 + n + u]).exp();
                    grad[1 + n + u] = -e / (p_i + e);
                    (lv + (p_i + e).ln() - rhs, grad)
                }));
            }
        } else {
            for u in 0..n {
                let receivers: Vec<usize> =
                    if own_receiver_only { vec![u] } else { (u..n).collect() };
                for j in receivers {
                    let (gamma_j, p_ij) = (system.gammas[j], system.user_interference[j]);
                    constraints.push(Box::new(move |x: &[f64]| {
                        let mut grad = vec![0.0; dim];
                        let pn = x[1 + u];
                        let mut s = 0.0;
                        for i in u + 1..n {
                            let term = (x[1 + i] - pn).exp();
                            s += term;
                            grad[1 + i] = term;
                        }
                        let t_noise = (-pn - x[1 + n + j]).exp() / gamma_j;
                        let t_int = p_ij * (-pn).exp() / gamma_j;
                        s += t_noise + t_int;
                        for i in u + 1..n {
                            grad[1 + i] /= s;
                        }
                        grad[1 + u] = -1.0;
                        grad[1 + n + j] += -t_noise / s;
                        let y = alpha * x[0].exp() / t;
                        let (lv, ld) = ln_pow2m1(y);
                        grad[0] = ld * y;
                        (s.ln() + lv, grad)
                    }));
                }
            }
            if ordered_detectors {
                // Effective detector gains must be ascending so each message
                // is weakest at its own receiver.
                for u in 0..n - 1 {
                    let bound = (system.gammas[u + 1] / system.gammas[u]).ln();
                    constraints.push(Box::new(move |x: &[f64]| {
                        let mut grad = vec![0.0; dim];
                        grad[1 + n + u] = 1.0;
                        grad[1 + n + u + 1] = -1.0;
                        (x[1 + n + u] - x[1 + n + u + 1] - bound, grad)
                    }));
                }
            }
        }
    }

    if beta > 0.0 {
        let weights: Vec<f64> = (0..n).map(|u| system.gammas[u] * system.received(u)).collect();
        // NOMA harvest scales with the phase duration `t`; TDMA harvest time
        // is carried by the slot variables themselves.
        let kappa = (1.0 - t) * (system.bs_interference + 1.0)
            / (system.eta1 * if tdma { 1.0 } else { t });
        for mask in 1u32..(1 << n) {
            let users = mask.count_ones() as f64;
            let w = weights.clone();
            constraints.push(Box::new(move |x: &[f64]| {
                let mut grad = vec![0.0; dim];
                let mut f = -kappa;
                for u in 0..n {
                    if mask & (1 << u) == 0 {
                        continue;
                    }
                    let exponent =
                        if tdma { x[1 + n + u] + x[1 + u] } else { x[1 + n + u] };
                    let term = exponent.exp() * w[u];
                    f += term;
                    grad[1 + n + u] = term;
                    if tdma {
                        grad[1 + u] = term;
                    }
                    f -= if tdma { t * w[u] } else { w[u] };
                }
                let z = beta * users * x[0].exp() / (1.0 - t);
                let e2z = (z * LN_2).min(700.0).exp();
                f += kappa * e2z;
                grad[0] = kappa * LN_2 * e2z * z;
                (f, grad)
            }));
        }
    }

    // Resource budget: powers against rho0, slots against the split.
    constraints.push(Box::new(move |x: &[f64]| {
        let mut grad = vec![0.0; dim];
        let mut f = -budget;
        for i in 0..n {
            let term = x[1 + i].exp();
            f += term;
            grad[1 + i] = term;
        }
        (f, grad)
    }));

    // Feasible start: half the budget split evenly, detectors half open,
    // rate at half of what that allocation supports.
    let alloc0 = vec![budget / (2.0 * n as f64); n];
    let thetas0 = vec![0.5; n];
    let dl0 = if tdma {
        tdma_downlink_rates(system, &alloc0, &thetas0)
    } else {
        noma_downlink_rates(system, t, &alloc0, &thetas0)
    };
    let en0 = if tdma {
        tdma_energies(system, &alloc0, &thetas0)
    } else {
        noma_energies(system, t, &thetas0)
    };
    let r0 = 0.5 * supported_rate(system, alpha, t, &dl0, &en0);
    let mut x0 = vec![0.0; dim];
    x0[0] = r0.max(r_hi * 2e-9).min(r_hi * 0.5).ln();
    for i in 0..n {
        x0[1 + i] = alloc0[i].ln();
        x0[1 + n + i] = 0.5f64.ln();
    }

    let problem = ConcaveProblem {
        objective: Box::new(|x: &[f64]| {
            let mut g = vec![0.0; x.len()];
            g[0] = 1.0;
            (x[0], g)
        }),
        constraints,
        lower,
        upper,
        initial: Some(x0),
    };
    let sol = maximize_concave(&problem, barrier)?;
    let alloc: Vec<f64> = (0..n).map(|i| sol.x[1 + i].exp()).collect();
    let thetas: Vec<f64> = (0..n).map(|i| sol.x[1 + n + i].exp().min(1.0)).collect();

    // Report the rate the untransformed model actually supports here.
    let (dl, en, alloc) = if tdma {
        // Stretch slots to fill the phase: rates and harvest both improve.
        let used: f64 = alloc.iter().sum();
        let scaled: Vec<f64> = alloc.iter().map(|s| s * t / used.max(1e-300)).collect();
        (
            tdma_downlink_rates(system, &scaled, &thetas),
            tdma_energies(system, &scaled, &thetas),
            scaled,
        )
    } else {
        (
            noma_downlink_rates(system, t, &alloc, &thetas),
            noma_energies(system, t, &thetas),
            alloc,
        )
    };
    let rate = supported_rate(system, alpha, t, &dl, &en);
    Ok(InnerPoint {
        rate,
        alloc,
        thetas,
        iterations: sol.report.iterations,
        stationarity: sol.stationarity,
    })
}

fn sweep(
    system: &JointSystem,
    alpha: f64,
    tdma: bool,
    ordered_detectors: bool,
    own_receiver_only: bool,
    config: &JointConfig,
) -> Result<JointSolution> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("downlink share must lie in [0, 1]".to_string()));
    }
    if !(config.t_step > 0.0 && config.t_step < 0.5) {
        return Err(Error::invalid("grid step must lie in (0, 0.5)".to_string()));
    }
    let mut best: Option<(f64, f64, InnerPoint)> = None;
    let mut total_iters = 0;
    let steps = (1.0 / config.t_step).round() as usize;
    for j in 1..steps {
        let t = j as f64 * config.t_step;
        if t >= 1.0 {
            break;
        }
        let point = match solve_inner(
            system,
            alpha,
            t,
            tdma,
            ordered_detectors,
            own_receiver_only,
            &config.barrier,
        ) {
            Ok(p) => p,
            Err(_) => continue,
        };
        total_iters += point.iterations;
        if best.as_ref().map_or(true, |(r, _, _)| point.rate > *r) {
            best = Some((point.rate, t, point));
        }
    }
    let (rate, t, point) =
        best.ok_or_else(|| Error::Infeasible("no frame split worked".to_string()))?;
    let (dl, en) = if tdma {
        (
            tdma_downlink_rates(system, &point.alloc, &point.thetas),
            tdma_energies(system, &point.alloc, &point.thetas),
        )
    } else {
        (
            noma_downlink_rates(system, t, &point.alloc, &point.thetas),
            noma_energies(system, t, &point.thetas),
        )
    };
    let mut report = SolverReport::converged(total_iters, point.stationarity);
    report.note(format!("frame split {t:.4}"));
    Ok(JointSolution {
        service_rate: rate,
        downlink_share: alpha,
        frame_split: t,
        downlink_alloc: point.alloc,
        info_fractions: point.thetas,
        downlink_rates: dl,
        uplink_rate: (1.0 - alpha) * rate,
        energies: en,
        report,
    })
}

/// NOMA downlink and uplink, general interference model.
pub fn solve_noma(
    system: &JointSystem,
    alpha: f64,
    config: &JointConfig,
) -> Result<JointSolution> {
    sweep(system, alpha, false, false, false, config)
}

/// Interference-free NOMA shortcut: detector-gain ordering replaces the
/// cross-receiver constraints, so only each user's own receiver is checked.
pub fn solve_noma_simple(
    system: &JointSystem,
    alpha: f64,
    config: &JointConfig,
) -> Result<JointSolution> {
    if !system.is_interference_free() {
        return Err(Error::invalid(
            "shortcut requires an interference-free system".to_string(),
        ));
    }
    sweep(system, alpha, false, true, true, config)
}

/// TDMA downlink with the same uplink model.
pub fn solve_tdma(
    system: &JointSystem,
    alpha: f64,
    config: &JointConfig,
) -> Result<JointSolution> {
    sweep(system, alpha, true, false, false, config)
}

/// Common-rate baseline where the downlink ignores power splitting
/// (detectors fully open, `theta = 1`) and uplink energy comes only from
/// interference and the other users' slots. Mostly useful as a sanity floor.
pub fn solve_tdma_full_detectors(
    system: &JointSystem,
    alpha: f64,
    config: &JointConfig,
) -> Result<JointSolution> {
    let n = system.n_users();
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("downlink share must lie in [0, 1]".to_string()));
    }
    let mut best: Option<JointSolution> = None;
    let steps = (1.0 / config.t_step).round() as usize;
    for j in 1..steps {
        let t = j as f64 * config.t_step;
        let slots = vec![t / n as f64; n];
        let thetas = vec![1.0; n];
        let dl = tdma_downlink_rates(system, &slots, &thetas);
        let en = tdma_energies(system, &slots, &thetas);
        let rate = supported_rate(system, alpha, t, &dl, &en);
        if best.as_ref().map_or(true, |b| rate > b.service_rate) {
            best = Some(JointSolution {
                service_rate: rate,
                downlink_share: alpha,
                frame_split: t,
                downlink_alloc: slots,
                info_fractions: thetas,
                downlink_rates: dl,
                uplink_rate: (1.0 - alpha) * rate,
                energies: en,
                report: SolverReport::converged(1, 0.0),
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible("no frame split worked".to_string()))
}

/// Subgradient configuration is not used here, but re-exported signatures
/// elsewhere take it; keep a helper for a consistent tolerance source.
pub fn default_subgradient() -> SubgradientConfig {
    SubgradientConfig::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_system() -> JointSystem {
        // Bounded path loss 1/(1 + d^2) at 5 m and 1 m, 40 dB transmit SNR.
        JointSystem::interference_free(vec![1.0 / 26.0, 0.5], 1e4, 0.5).unwrap()
    }

    fn coarse_config() -> JointConfig {
        JointConfig {
            t_step: 0.05,
            barrier: ConcaveConfig { tolerance: 1e-5, max_iterations: 400 },
        }
    }

    #[test]
    fn general_and_shortcut_noma_agree_without_interference() {
        let system = small_system();
        let config = coarse_config();
        let general = solve_noma(&system, 0.5, &config).unwrap();
        let simple = solve_noma_simple(&system, 0.5, &config).unwrap();
        let diff = (general.service_rate - simple.service_rate).abs();
        assert!(
            diff <= 2e-4 * general.service_rate,
            "general {} vs shortcut {}",
            general.service_rate,
            simple.service_rate
        );
    }

    #[test]
    fn returned_solutions_are_feasible() {
        let system = small_system();
        let config = coarse_config();
        let noma = solve_noma(&system, 0.8, &config).unwrap();
        assert!(max_violation_noma(&system, 0.8, &noma) <= 1e-6);
        assert!(noma.service_rate > 0.0);
        let tdma = solve_tdma(&system, 0.8, &config).unwrap();
        assert!(max_violation_tdma(&system, 0.8, &tdma) <= 1e-6);
        // Downlink guarantees hold with the stated share.
        for dl in &noma.downlink_rates {
            assert!(*dl >= 0.8 * noma.service_rate * (1.0 - 1e-9));
        }
        assert!((noma.uplink_rate - 0.2 * noma.service_rate).abs() < 1e-12);
    }

    #[test]
    fn noma_beats_tdma_with_heavy_downlink_demand() {
        let system = small_system();
        let config = coarse_config();
        let noma = solve_noma(&system, 0.8, &config).unwrap();
        let tdma = solve_tdma(&system, 0.8, &config).unwrap();
        assert!(
            noma.service_rate >= tdma.service_rate * (1.0 - 1e-6),
            "noma {} vs tdma {}",
            noma.service_rate,
            tdma.service_rate
        );
    }

    #[test]
    fn transformed_constraints_are_midpoint_convex() {
        // Sample the assembled constraint set at random pairs and check
        // f((x + y)/2) <= (f(x) + f(y))/2 plus gradient consistency.
        let system = small_system();
        let n = system.n_users();
        let dim = 1 + 2 * n;
        let t = 0.4;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        // Rebuild the same closures through the solver path by probing the
        // inner solve's constraint values indirectly: use the public pieces.
        let eval = |x: &[f64]| -> Vec<f64> {
            let powers: Vec<f64> = (0..n).map(|i| x[1 + i].exp()).collect();
            let thetas: Vec<f64> = (0..n).map(|i| x[1 + n + i].exp()).collect();
            let r = x[0].exp();
            let dl = noma_downlink_rates(&system, t, &powers, &thetas);
            let en = noma_energies(&system, t, &thetas);
            let mut vals = Vec::new();
            for u in 0..n {
                vals.push(0.5 * r - dl[u]); // alpha = 0.5 downlink slack
            }
            for mask in 1u32..(1 << n) {
                let users = mask.count_ones() as f64;
                vals.push(0.5 * users * r - uplink_capacity(&system, t, &en, mask));
            }
            vals
        };
        for _ in 0..60 {
            let a: Vec<f64> = (0..dim).map(|i| {
                if i == 0 {
                    rng.gen_range(-3.0..1.0)
                } else {
                    rng.gen_range(-6.0..-0.1)
                }
            }).collect();
            let b: Vec<f64> = (0..dim).map(|i| {
                if i == 0 {
                    rng.gen_range(-3.0..1.0)
                } else {
                    rng.gen_range(-6.0..-0.1)
                }
            }).collect();
            let mid: Vec<f64> =
                a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (fa, fb, fm) = (eval(&a), eval(&b), eval(&mid));
            // The *sign-critical* quantity: if both endpoints satisfy the
            // original constraint, so must the midpoint in log space.
            for k in 0..fa.len() {
                if fa[k] <= 0.0 && fb[k] <= 0.0 {
                    assert!(
                        fm[k] <= 1e-9 * fm[k].abs().max(1.0),
                        "midpoint violated constraint {k}: {} {} -> {}",
                        fa[k],
                        fb[k],
                        fm[k]
                    );
                }
            }
        }
    }
}
