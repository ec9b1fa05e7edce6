//! Decode-free amplify-and-forward relaying over parallel channels where the
//! relay runs on harvested power. The relay splits its received signal power:
//! a fraction `theta` feeds the harvester (plus a static supply), the rest
//! carries information. Source and relay power both obey sum caps, and the
//! relay can never spend more than it harvested.

use crate::numerics::{golden_section_max, SubgradientConfig, LN_2};
use crate::{Error, Result, SolverReport};

/// End-to-end SNR of a two-hop link with per-hop SNRs `gs`, `gr`.
pub fn snr_exact(gs: f64, gr: f64) -> f64 {
    if gs + gr == 0.0 {
        return 0.0;
    }
    gs * gr / (gs + gr + 1.0)
}

/// High-SNR surrogate (harmonic combination); never below [`snr_exact`].
pub fn snr_approx(gs: f64, gr: f64) -> f64 {
    if gs + gr == 0.0 {
        return 0.0;
    }
    gs * gr / (gs + gr)
}

#[derive(Debug, Clone)]
pub struct RelayChannel {
    pub bandwidth: f64,
    /// Source-to-relay channel power gain.
    pub source_gain: f64,
    /// Relay-to-destination channel power gain.
    pub relay_gain: f64,
    /// Noise power over this channel's band.
    pub noise_power: f64,
}

#[derive(Debug, Clone)]
pub struct RelaySystem {
    pub channels: Vec<RelayChannel>,
    /// Harvester efficiency.
    pub eta1: f64,
    pub p_source_max: f64,
    pub p_relay_max: f64,
    /// Non-harvested supply always available to the relay.
    pub p_relay_static: f64,
}

impl RelaySystem {
    pub fn new(
        channels: Vec<RelayChannel>,
        eta1: f64,
        p_source_max: f64,
        p_relay_max: f64,
        p_relay_static: f64,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::invalid("need at least one channel".to_string()));
        }
        for (i, ch) in channels.iter().enumerate() {
            if !(ch.bandwidth > 0.0) || !(ch.noise_power > 0.0) {
                return Err(Error::invalid(format!("channel {i} needs positive W and noise")));
            }
            if !(ch.source_gain >= 0.0) || !(ch.relay_gain >= 0.0) {
                return Err(Error::invalid(format!("channel {i} has a negative gain")));
            }
        }
        if !(eta1 > 0.0 && eta1 <= 1.0) {
            return Err(Error::invalid("eta1 must lie in (0, 1]".to_string()));
        }
        if !(p_source_max > 0.0) || !(p_relay_max > 0.0) || !(p_relay_static >= 0.0) {
            return Err(Error::invalid("power caps must be positive".to_string()));
        }
        Ok(Self { channels, eta1, p_source_max, p_relay_max, p_relay_static })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    /// Power the relay can transmit with: harvested plus static supply.
    pub fn harvest_budget(&self, theta: f64, source: &[f64]) -> f64 {
        let picked: f64 =
            source.iter().zip(&self.channels).map(|(p, ch)| p * ch.source_gain).sum();
        self.eta1 * theta * picked + self.p_relay_static
    }

    fn hop_snrs(&self, alloc: &RelayAllocation, i: usize) -> (f64, f64) {
        let ch = &self.channels[i];
        let gs = (1.0 - alloc.theta) * alloc.source[i] * ch.source_gain / ch.noise_power;
        let gr = alloc.relay[i] * ch.relay_gain / ch.noise_power;
        (gs, gr)
    }

    /// Half-duplex sum rate with the exact two-hop SNR.
    pub fn rate(&self, alloc: &RelayAllocation) -> f64 {
        (0..self.n_channels())
            .map(|i| {
                let (gs, gr) = self.hop_snrs(alloc, i);
                0.5 * self.channels[i].bandwidth * snr_exact(gs, gr).ln_1p() / LN_2
            })
            .sum()
    }

    /// Same rate under the high-SNR surrogate.
    pub fn rate_approx(&self, alloc: &RelayAllocation) -> f64 {
        (0..self.n_channels())
            .map(|i| {
                let (gs, gr) = self.hop_snrs(alloc, i);
                0.5 * self.channels[i].bandwidth * snr_approx(gs, gr).ln_1p() / LN_2
            })
            .sum()
    }

    /// Relative violation of the three power constraints.
    pub fn feasibility_error(&self, alloc: &RelayAllocation) -> f64 {
        let ps: f64 = alloc.source.iter().sum();
        let pr: f64 = alloc.relay.iter().sum();
        let budget = self.harvest_budget(alloc.theta, &alloc.source);
        let v1 = (pr - budget) / self.p_relay_max;
        let v2 = (pr - self.p_relay_max) / self.p_relay_max;
        let v3 = (ps - self.p_source_max) / self.p_source_max;
        v1.max(v2).max(v3).max(0.0)
    }
}

#[derive(Debug, Clone)]
pub struct RelayAllocation {
    /// Power-splitting fraction routed to the harvester.
    pub theta: f64,
    pub source: Vec<f64>,
    pub relay: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RelaySolution {
    pub allocation: RelayAllocation,
    pub rate: f64,
    pub report: SolverReport,
}

/// Positive root of `(1 + g)(g + other + 1) = target`, i.e. the hop SNR at
/// which the exact-rate marginal equals a given price.
fn stationary_hop(other: f64, target: f64) -> f64 {
    let b = other + 2.0;
    let c = other + 1.0 - target;
    let disc = b * b - 4.0 * c;
    if disc <= 0.0 {
        return 0.0;
    }
    (0.5 * (-b + disc.sqrt())).max(0.0)
}

/// Marginal-rate prices of one channel at hop SNRs `(gs, gr)`.
fn marginals(c1: f64, c2: f64, gs: f64, gr: f64) -> (f64, f64) {
    let d = gs + gr + 1.0;
    (c1 * gr / ((1.0 + gs) * d), c2 * gs / ((1.0 + gr) * d))
}

/// Result of one channel's Lagrangian maximization in hop-SNR coordinates.
struct ChannelBest {
    gs: f64,
    gr: f64,
    /// Unclipped maximum of the channel Lagrangian; meaningful iff `bounded`.
    value: f64,
    /// False when a non-positive price makes the maximum infinite.
    bounded: bool,
}

/// Maximize `c·ln(1 + gs·y/(gs + y)) - beta·y` over `y >= 0` for a fixed
/// other-hop SNR `gs`: with `u = gs + y` the stationarity condition is the
/// quadratic `(1 + gs)·u² - gs²·u - c·gs²/beta = 0`.
fn hop_given_other(c: f64, gs: f64, beta: f64) -> f64 {
    if gs <= 0.0 {
        return 0.0;
    }
    let disc = gs.powi(4) + 4.0 * (1.0 + gs) * c * gs * gs / beta;
    let u = (gs * gs + disc.sqrt()) / (2.0 * (1.0 + gs));
    (u - gs).max(0.0)
}

/// Global maximizer of the per-channel Lagrangian under the surrogate SNR,
/// `c·ln(1 + H) - alpha·gs - beta·gr` with `H = gs·gr/(gs + gr)` and prices
/// per unit of hop SNR. The surrogate is jointly concave, so the KKT closed
/// form — hop ratio fixed by the price ratio, then the common level by
/// water-filling — is the exact answer. A non-positive price pins that hop
/// at its clip cap and clears `bounded`.
fn solve_channel(c: f64, alpha: f64, beta: f64, cap_s: f64, cap_r: f64) -> ChannelBest {
    match (alpha > 0.0, beta > 0.0) {
        (true, true) => {
            let q = (alpha.sqrt() + beta.sqrt()).powi(2);
            let h = c / q - 1.0;
            if h <= 0.0 {
                return ChannelBest { gs: 0.0, gr: 0.0, value: 0.0, bounded: true };
            }
            let ratio = (beta / alpha).sqrt();
            let gs = h * (1.0 + ratio);
            let gr = h * (1.0 + 1.0 / ratio);
            let value = c * h.ln_1p() - alpha * gs - beta * gr;
            ChannelBest { gs: gs.min(cap_s), gr: gr.min(cap_r), value, bounded: true }
        }
        (false, true) => {
            let gs = cap_s;
            let gr = hop_given_other(c, gs, beta).min(cap_r);
            ChannelBest { gs, gr, value: 0.0, bounded: false }
        }
        (true, false) => {
            let gr = cap_r;
            let gs = hop_given_other(c, gr, alpha).min(cap_s);
            ChannelBest { gs, gr, value: 0.0, bounded: false }
        }
        (false, false) => ChannelBest { gs: cap_s, gr: cap_r, value: 0.0, bounded: false },
    }
}

/// Scale powers onto the caps and score the result.
fn project_and_rate(
    system: &RelaySystem,
    theta: f64,
    mut source: Vec<f64>,
    mut relay: Vec<f64>,
) -> (RelayAllocation, f64) {
    let ps: f64 = source.iter().sum();
    if ps > system.p_source_max {
        let s = system.p_source_max / ps;
        for p in &mut source {
            *p *= s;
        }
    }
    let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
    let pr: f64 = relay.iter().sum();
    if pr > budget {
        let s = budget / pr;
        for p in &mut relay {
            *p *= s;
        }
    }
    let alloc = RelayAllocation { theta, source, relay };
    let rate = system.rate(&alloc);
    (alloc, rate)
}

/// Dual ascent at a fixed power-splitting fraction, with the inner
/// per-channel maximization done in closed form under the surrogate SNR (the
/// surrogate makes the inner problem concave, so the dual value is a true
/// upper bound). Multipliers price the harvest balance, the relay cap and
/// the source cap; every candidate is projected back onto the caps and
/// scored with the exact rate, and single-channel and equal-split
/// allocations seed the incumbent so the result never falls below a
/// concentration baseline at this split.
pub fn solve_fixed_theta(
    system: &RelaySystem,
    theta: f64,
    config: &SubgradientConfig,
) -> Result<(RelayAllocation, f64, SolverReport)> {
    let k = system.n_channels();
    let coeff: Vec<(f64, f64, f64, f64)> = system
        .channels
        .iter()
        .map(|ch| {
            let a = (1.0 - theta) * ch.source_gain / ch.noise_power;
            let b = ch.relay_gain / ch.noise_power;
            (a, b, ch.bandwidth * a / (2.0 * LN_2), ch.bandwidth * b / (2.0 * LN_2))
        })
        .collect();

    // Price scale from the marginals at an equal feasible split.
    let ps0 = system.p_source_max / k as f64;
    let budget0 = system
        .harvest_budget(theta, &vec![ps0; k])
        .min(system.p_relay_max)
        .max(1e-300);
    let pr0 = budget0 / k as f64;
    let mut base_s = 0.0f64;
    let mut base_r = 0.0f64;
    for &(a, b, c1, c2) in &coeff {
        let (ms, mr) = marginals(c1, c2, a * ps0, b * pr0);
        base_s = base_s.max(ms);
        base_r = base_r.max(mr);
    }
    if base_s == 0.0 || base_r == 0.0 {
        // Dead system: no channel can carry anything.
        let alloc =
            RelayAllocation { theta, source: vec![0.0; k], relay: vec![0.0; k] };
        return Ok((alloc, 0.0, SolverReport::converged(0, 0.0)));
    }
    let mut l1 = 0.5 * base_r;
    let mut l2 = 0.5 * base_r;
    let mut l3 = base_s;

    // Seed the incumbent with the cheap restricted allocations: everything on
    // one channel, and the equal split. The certificate pairs the dual bound
    // (valid for the surrogate problem) with the best surrogate-rate primal,
    // while the reported incumbent is ranked by the exact rate.
    let mut best: Option<(RelayAllocation, f64)> = None;
    let mut best_approx = 0.0f64;
    let consider = |cand: (RelayAllocation, f64),
                    best: &mut Option<(RelayAllocation, f64)>,
                    best_approx: &mut f64| {
        *best_approx = best_approx.max(system.rate_approx(&cand.0));
        if best.as_ref().map_or(true, |(_, r)| cand.1 > *r) {
            *best = Some(cand);
        }
    };
    for i in 0..k {
        let mut source = vec![0.0; k];
        source[i] = system.p_source_max;
        let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
        let mut relay = vec![0.0; k];
        relay[i] = budget;
        consider(project_and_rate(system, theta, source, relay), &mut best, &mut best_approx);
    }
    consider(
        project_and_rate(system, theta, vec![ps0; k], vec![budget0 / k as f64; k]),
        &mut best,
        &mut best_approx,
    );

    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=config.max_iterations {
        iterations = it;
        let mut source = vec![0.0; k];
        let mut relay = vec![0.0; k];
        let mut dual = l1 * system.p_relay_static
            + l2 * system.p_relay_max
            + l3 * system.p_source_max;
        let mut dual_ok = true;
        for i in 0..k {
            let (a, b, _, _) = coeff[i];
            if a == 0.0 || b == 0.0 {
                continue;
            }
            let ks = l3 - l1 * system.eta1 * theta * system.channels[i].source_gain;
            let kr = l1 + l2;
            let cb = solve_channel(
                0.5 * system.channels[i].bandwidth / LN_2,
                ks / a,
                kr / b,
                10.0 * a * system.p_source_max,
                10.0 * b * system.p_relay_max,
            );
            source[i] = cb.gs / a;
            relay[i] = cb.gr / b;
            if cb.bounded {
                dual += cb.value;
            } else {
                dual_ok = false;
            }
        }
        let sum_s: f64 = source.iter().sum();
        let sum_r: f64 = relay.iter().sum();
        let harvested = system.harvest_budget(theta, &source);

        consider(project_and_rate(system, theta, source, relay), &mut best, &mut best_approx);
        if dual_ok {
            gap = dual - best_approx;
            if gap <= config.tolerance.max(1e-9) * best_approx.abs().max(1.0) {
                converged = true;
                break;
            }
        }

        // Polyak step from the measured gap; constraint slacks are the dual
        // subgradient. Moves are clamped to a decade per round, with a
        // baseline anchor so a multiplier can leave zero. While a price is
        // still non-positive the dual is infinite, so a diminishing step
        // takes over.
        let s1 = harvested - sum_r;
        let s2 = system.p_relay_max - sum_r;
        let s3 = system.p_source_max - sum_s;
        let gnorm2 = (s1 * s1 + s2 * s2 + s3 * s3).max(1e-300);
        let step = if dual_ok && gap.is_finite() {
            gap.max(0.0) / gnorm2
        } else {
            let gmax = s1.abs().max(s2.abs()).max(s3.abs()).max(1e-300);
            config.step(it) * (l1 + l2 + l3) / (3.0 * gmax)
        };
        let clamp = |l: f64, slack: f64, base: f64| -> f64 {
            let ceiling = (l * 10.0).max(0.01 * base);
            (l - step * slack).clamp(l / 10.0, ceiling).max(0.0)
        };
        l1 = clamp(l1, s1, base_r);
        l2 = clamp(l2, s2, base_r);
        l3 = clamp(l3, s3, base_s).max(1e-300);
    }
    let (alloc, rate) = best.unwrap();
    let report = if converged {
        SolverReport::converged(iterations, gap)
    } else {
        SolverReport::exhausted(iterations, gap)
    };
    Ok((alloc, rate, report))
}

/// Sweep the power split over `j / (k_grid + 1)` and keep the best inner
/// solution.
pub fn solve_grid_theta(
    system: &RelaySystem,
    k_grid: usize,
    config: &SubgradientConfig,
) -> Result<RelaySolution> {
    config.validate()?;
    if k_grid == 0 {
        return Err(Error::invalid("grid needs at least one point".to_string()));
    }
    let mut best: Option<(RelayAllocation, f64, SolverReport)> = None;
    let mut total_iters = 0;
    let consider = |theta: f64, best: &mut Option<_>, total_iters: &mut usize| -> Result<()> {
        let (alloc, rate, rep) = solve_fixed_theta(system, theta, config)?;
        *total_iters += rep.iterations;
        if best.as_ref().map_or(true, |(_, r, _): &(_, f64, _)| rate > *r) {
            *best = Some((alloc, rate, rep));
        }
        Ok(())
    };
    for j in 1..=k_grid {
        consider(j as f64 / (k_grid + 1) as f64, &mut best, &mut total_iters)?;
    }
    // Also solve at the splits the restricted baselines pick for themselves.
    // The incumbent seeding inside the fixed-split solve makes each of these
    // at least as good as the corresponding baseline, so the returned rate
    // dominates both baselines regardless of the grid resolution.
    consider(solve_equal_split(system)?.allocation.theta, &mut best, &mut total_iters)?;
    consider(solve_best_channel(system)?.allocation.theta, &mut best, &mut total_iters)?;
    let (allocation, rate, inner) = best.unwrap();
    let mut report = if inner.converged {
        SolverReport::converged(total_iters, inner.residual)
    } else {
        SolverReport::exhausted(total_iters, inner.residual)
    };
    report.note(format!("best split {:.6}", allocation.theta));
    Ok(RelaySolution { allocation, rate, report })
}

/// Relay-power water-filling at fixed `theta` and source powers: exact
/// per-channel stationarity, bisected to the supply.
fn waterfill_relay(system: &RelaySystem, theta: f64, source: &[f64]) -> (Vec<f64>, f64) {
    let k = system.n_channels();
    let budget = system.harvest_budget(theta, source).min(system.p_relay_max);
    let mut gs_fixed = vec![0.0; k];
    let mut lam_hi = 0.0f64;
    for i in 0..k {
        let ch = &system.channels[i];
        let gs = (1.0 - theta) * source[i] * ch.source_gain / ch.noise_power;
        gs_fixed[i] = gs;
        let c2 = ch.bandwidth * ch.relay_gain / (ch.noise_power * 2.0 * LN_2);
        lam_hi = lam_hi.max(c2 * gs / (gs + 1.0));
    }
    if budget <= 0.0 || lam_hi == 0.0 {
        return (vec![0.0; k], budget);
    }
    let total_at = |lam: f64| -> f64 {
        (0..k)
            .map(|i| {
                let ch = &system.channels[i];
                if ch.relay_gain == 0.0 {
                    return 0.0;
                }
                let b = ch.relay_gain / ch.noise_power;
                let c2 = ch.bandwidth * b / (2.0 * LN_2);
                stationary_hop(gs_fixed[i], c2 * gs_fixed[i] / lam) / b
            })
            .sum()
    };
    let mut lo = lam_hi;
    while total_at(lo) < budget {
        lo *= 0.5;
        if lo < 1e-280 {
            break;
        }
    }
    let mut hi = lam_hi.max(lo * 2.0);
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let relay: Vec<f64> = (0..k)
        .map(|i| {
            let ch = &system.channels[i];
            if ch.relay_gain == 0.0 {
                return 0.0;
            }
            let b = ch.relay_gain / ch.noise_power;
            let c2 = ch.bandwidth * b / (2.0 * LN_2);
            stationary_hop(gs_fixed[i], c2 * gs_fixed[i] / lam) / b
        })
        .collect();
    let scale = budget / relay.iter().sum::<f64>().max(1e-300);
    (relay.iter().map(|p| p * scale.min(1.0)).collect(), budget)
}

/// Source-power solve at fixed `theta` and relay powers: bisect the budget
/// price, then (only if the current relay spend needs more harvest) lift the
/// harvest multiplier until the balance holds again.
fn solve_source_step(
    system: &RelaySystem,
    theta: f64,
    relay: &[f64],
) -> Vec<f64> {
    let k = system.n_channels();
    let mut gr_fixed = vec![0.0; k];
    for i in 0..k {
        let ch = &system.channels[i];
        gr_fixed[i] = relay[i] * ch.relay_gain / ch.noise_power;
    }
    let need = relay.iter().sum::<f64>() - system.p_relay_static;
    let source_for = |m: f64| -> Vec<f64> {
        // Inner bisection on the budget price for a given harvest premium m.
        let price_cap = |l3: f64| -> Vec<f64> {
            (0..k)
                .map(|i| {
                    let ch = &system.channels[i];
                    if ch.source_gain == 0.0 || gr_fixed[i] == 0.0 {
                        return 0.0;
                    }
                    let a = (1.0 - theta) * ch.source_gain / ch.noise_power;
                    let c1 = ch.bandwidth * a / (2.0 * LN_2);
                    let ks = l3 - m * system.eta1 * theta * ch.source_gain;
                    if ks <= 0.0 {
                        return system.p_source_max;
                    }
                    (stationary_hop(gr_fixed[i], c1 * gr_fixed[i] / ks) / a)
                        .min(system.p_source_max)
                })
                .collect()
        };
        let total = |l3: f64| price_cap(l3).iter().sum::<f64>();
        let mut hi = 0.0f64;
        for i in 0..k {
            let ch = &system.channels[i];
            let a = (1.0 - theta) * ch.source_gain / ch.noise_power;
            let c1 = ch.bandwidth * a / (2.0 * LN_2);
            hi = hi.max(m * system.eta1 * theta * ch.source_gain
                + c1 * gr_fixed[i] / (gr_fixed[i] + 1.0));
        }
        if hi == 0.0 {
            return vec![0.0; k];
        }
        let mut lo = hi;
        while total(lo) < system.p_source_max && lo > 1e-280 {
            lo *= 0.5;
        }
        let mut top = hi.max(lo * 2.0);
        for _ in 0..110 {
            let mid = 0.5 * (lo + top);
            if total(mid) > system.p_source_max {
                lo = mid;
            } else {
                top = mid;
            }
        }
        price_cap(top)
    };
    let harvest_of = |src: &Vec<f64>| system.harvest_budget(theta, src) - system.p_relay_static;
    let mut source = source_for(0.0);
    if need > 0.0 && harvest_of(&source) < need * (1.0 - 1e-12) {
        // Push weight toward strong harvesting channels.
        let mut m_hi = 1e-6;
        let mut grow = 0;
        while harvest_of(&source_for(m_hi)) < need && grow < 220 {
            m_hi *= 4.0;
            grow += 1;
        }
        let mut m_lo = 0.0;
        for _ in 0..90 {
            let mid = 0.5 * (m_lo + m_hi);
            if harvest_of(&source_for(mid)) < need {
                m_lo = mid;
            } else {
                m_hi = mid;
            }
        }
        source = source_for(m_hi);
    }
    source
}

/// Alternating improvement from a starting split: re-optimize `(theta, relay
/// powers)` with the sources frozen (golden search over the split, relay
/// water-filling inside), then the source powers with the relay spend frozen.
/// Every accepted move can only raise the exact rate. Returns the solution
/// and the rate trajectory (entry 0 is the initial allocation).
pub fn solve_iterative(
    system: &RelaySystem,
    theta0: f64,
    rounds: usize,
) -> Result<(RelaySolution, Vec<f64>)> {
    if !(theta0 > 0.0 && theta0 < 1.0) {
        return Err(Error::invalid("starting split must lie in (0, 1)".to_string()));
    }
    let k = system.n_channels();
    let mut theta = theta0;
    let mut source = vec![system.p_source_max / k as f64; k];
    let (mut relay, _) = waterfill_relay(system, theta, &source);
    let mut rate = system.rate(&RelayAllocation {
        theta,
        source: source.clone(),
        relay: relay.clone(),
    });
    let mut trajectory = vec![rate];
    for _ in 0..rounds {
        // Split and relay step.
        let src = source.clone();
        let eval = |th: f64| -> f64 {
            let (r, _) = waterfill_relay(system, th, &src);
            system.rate(&RelayAllocation { theta: th, source: src.clone(), relay: r })
        };
        let (th_new, val) = golden_section_max(eval, 1e-6, 1.0 - 1e-6, 1e-8)?;
        if val > rate {
            theta = th_new;
            let (r, _) = waterfill_relay(system, theta, &source);
            relay = r;
            rate = val;
        }
        // Source step.
        let cand = solve_source_step(system, theta, &relay);
        let cand_rate = system.rate(&RelayAllocation {
            theta,
            source: cand.clone(),
            relay: relay.clone(),
        });
        if cand_rate > rate {
            source = cand;
            rate = cand_rate;
        }
        trajectory.push(rate);
    }
    let allocation = RelayAllocation { theta, source, relay };
    let mut report = SolverReport::converged(rounds, 0.0);
    report.note(format!("final split {theta:.6}"));
    Ok((
        RelaySolution { allocation, rate, report },
        trajectory,
    ))
}

/// Baseline: equal power on every channel, split tuned by golden search.
pub fn solve_equal_split(system: &RelaySystem) -> Result<RelaySolution> {
    let k = system.n_channels();
    let eval = |theta: f64| -> f64 {
        let source = vec![system.p_source_max / k as f64; k];
        let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
        let relay = vec![budget / k as f64; k];
        system.rate(&RelayAllocation { theta, source, relay })
    };
    let (theta, rate) = golden_section_max(eval, 1e-6, 1.0 - 1e-6, 1e-8)?;
    let source = vec![system.p_source_max / k as f64; k];
    let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
    let relay = vec![budget / k as f64; k];
    Ok(RelaySolution {
        allocation: RelayAllocation { theta, source, relay },
        rate,
        report: SolverReport::converged(1, 0.0),
    })
}

/// Baseline: all power on the single best channel, split tuned per channel.
pub fn solve_best_channel(system: &RelaySystem) -> Result<RelaySolution> {
    let k = system.n_channels();
    let mut best: Option<(RelayAllocation, f64)> = None;
    for i in 0..k {
        let eval = |theta: f64| -> f64 {
            let mut source = vec![0.0; k];
            source[i] = system.p_source_max;
            let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
            let mut relay = vec![0.0; k];
            relay[i] = budget;
            system.rate(&RelayAllocation { theta, source, relay })
        };
        let (theta, rate) = golden_section_max(eval, 1e-6, 1.0 - 1e-6, 1e-8)?;
        if best.as_ref().map_or(true, |(_, r)| rate > *r) {
            let mut source = vec![0.0; k];
            source[i] = system.p_source_max;
            let budget = system.harvest_budget(theta, &source).min(system.p_relay_max);
            let mut relay = vec![0.0; k];
            relay[i] = budget;
            best = Some((RelayAllocation { theta, source, relay }, rate));
        }
    }
    let (allocation, rate) = best.unwrap();
    Ok(RelaySolution { allocation, rate, report: SolverReport::converged(1, 0.0) })
}
