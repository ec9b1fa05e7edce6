//! Multi-user harvest-then-transmit with a TDMA uplink.
//!
//! The frame starts with a shared harvest phase of length `T`, then each user
//! `n` transmits alone for `t_n`, spending everything it harvested. With
//! `X_n = eta rho0 g_n`, the rate of user `n` is
//! `R_n = t_n log2(1 + X_n T / t_n)`.

use crate::channel::NetworkScenario;
use crate::numerics::{
    golden_section_max, maximize_concave, solve_scalar_root, ConcaveConfig, ConcaveProblem,
    RootBracket, SubgradientConfig, LN_2,
};
use crate::{Error, Result, SolverReport};

/// Frame split: harvest fraction plus one uplink slot per user.
/// `harvest + sum(slots) <= 1` within a small slack.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeAllocation {
    pub harvest: f64,
    pub slots: Vec<f64>,
}

impl TimeAllocation {
    pub fn new(harvest: f64, slots: Vec<f64>) -> Result<Self> {
        if !(harvest > 0.0) || !harvest.is_finite() {
            return Err(Error::invalid(format!("harvest fraction must be positive, got {harvest}")));
        }
        if slots.iter().any(|&t| !(t >= 0.0) || !t.is_finite()) {
            return Err(Error::invalid("every slot length must be nonnegative and finite".to_string()));
        }
        let total = harvest + slots.iter().sum::<f64>();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("time budget exceeded: harvest + slots = {total}")));
        }
        Ok(TimeAllocation { harvest, slots })
    }

    pub fn total(&self) -> f64 {
        self.harvest + self.slots.iter().sum::<f64>()
    }
}

/// Rate of one user given its SNR scale `x_n`, the harvest fraction, and its
/// slot; `0` when the slot is empty.
pub fn user_rate(x_n: f64, harvest: f64, slot: f64) -> Result<f64> {
    if !(x_n >= 0.0) || !x_n.is_finite() {
        return Err(Error::invalid(format!("SNR scale must be nonnegative, got {x_n}")));
    }
    if !(0.0..=1.0).contains(&harvest) || !(slot >= 0.0) || !slot.is_finite() {
        return Err(Error::invalid(format!(
            "need harvest in [0, 1] and slot >= 0, got ({harvest}, {slot})"
        )));
    }
    if slot == 0.0 {
        return Ok(0.0);
    }
    Ok(slot * (1.0 + x_n * harvest / slot).log2())
}

/// Per-user rates under an allocation.
pub fn rates(scenario: &NetworkScenario, alloc: &TimeAllocation) -> Result<Vec<f64>> {
    if alloc.slots.len() != scenario.n_users() {
        return Err(Error::invalid(format!(
            "allocation has {} slots for {} users",
            alloc.slots.len(),
            scenario.n_users()
        )));
    }
    (0..scenario.n_users())
        .map(|n| user_rate(scenario.x_n(n), alloc.harvest, alloc.slots[n]))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TdmaSolution {
    pub allocation: TimeAllocation,
    pub rates: Vec<f64>,
    /// Value of the solved objective: sum rate, scaled minimum `min R_n/b_n`,
    /// common per-user rate, or weighted sum, depending on the solver.
    pub objective: f64,
    pub report: SolverReport,
}

/// Sum-throughput optimum in closed form. The stationarity condition reduces
/// to the scalar root `z ln z - z + 1 = X` with `X = eta rho0 sum g`; then
/// `T* = (z-1)/(X+z-1)` and `t_n* = X_n/(X+z-1)`, and every user transmits at
/// the same spectral efficiency `log2 z`.
pub fn solve_sum_throughput(scenario: &NetworkScenario) -> Result<TdmaSolution> {
    let x = scenario.x_total();
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("aggregate SNR scale must be positive, got {x}")));
    }
    let hi = (x + 2.0).max(std::f64::consts::E);
    let z = solve_scalar_root(
        |z: f64| z * z.ln() - z + 1.0 - x,
        RootBracket::new(1.0, hi)?,
        1e-12 * (1.0 + x),
    )?;
    let denom = x + z - 1.0;
    let harvest = (z - 1.0) / denom;
    let slots: Vec<f64> = (0..scenario.n_users()).map(|n| scenario.x_n(n) / denom).collect();
    let allocation = TimeAllocation::new(harvest, slots)?;
    let rates = rates(scenario, &allocation)?;
    let objective = rates.iter().sum();
    Ok(TdmaSolution { allocation, rates, objective, report: SolverReport::converged(1, 0.0) })
}

/// Inverse of `h(u) = ln(1+u) - u/(1+u)`, the marginal value of slot time at
/// post-harvest SNR `u` (up to `1/ln 2`); strictly increasing on `(0, inf)`.
/// Returns `inf` once the argument is large enough that the slot rounds to
/// zero anyway.
fn h_inv(y: f64) -> Result<f64> {
    debug_assert!(y > 0.0);
    if y > 700.0 {
        return Ok(f64::INFINITY);
    }
    if y >= 25.0 {
        // h(e^(y+1) - 1) = y + e^-(y+1): relative error below 6e-12 here,
        // while a bracketed solve would be dominated by rounding noise
        // (the sign margin at the upper bracket is e^-(y+1)).
        return Ok((y + 1.0).exp() - 1.0);
    }
    // Newton from the asymptotic seed, safeguarded by the bracket
    // h(sqrt(2y)/2) < y (since h(u) < u^2/2) and h(e^(y+1) - 1) > y.
    let mut lo = (2.0 * y).sqrt() * 0.5;
    let mut hi = ((y + 1.0).exp() - 1.0).max(lo * 2.0);
    let mut u = hi;
    for _ in 0..80 {
        let h = u.ln_1p() - u / (1.0 + u);
        if h > y {
            hi = hi.min(u);
        } else {
            lo = lo.max(u);
        }
        let mut next = u + (y - h) * (1.0 + u) * (1.0 + u) / u;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - u).abs() <= 1e-13 * u.abs();
        u = next;
        if done {
            break;
        }
    }
    Ok(u)
}

/// Water-filling of the uplink window `1 - harvest` for weighted-sum rates:
/// each weighted user is driven to a common marginal `w_n h(u_n) = nu ln 2`,
/// giving `t_n = x_n T / h^{-1}(nu ln 2 / w_n)`; `nu` is the scalar root that
/// exhausts the window.
fn slots_for_harvest(
    xs: &[f64],
    w: &[f64],
    harvest: f64,
    hint: f64,
) -> Result<(Vec<f64>, f64, f64)> {
    let n = xs.len();
    let window = 1.0 - harvest;
    let mut slots = vec![0.0; n];
    let mut nu_out = f64::NAN;
    let active: Vec<usize> = (0..n).filter(|&i| w[i] > 1e-300 && xs[i] > 0.0).collect();
    match active.len() {
        0 => {}
        1 => slots[active[0]] = window,
        _ => {
            let fill = |nu: f64, slots: &mut [f64]| -> Result<f64> {
                let mut used = 0.0;
                for &i in &active {
                    let u = h_inv(nu * LN_2 / w[i])?;
                    slots[i] = if u.is_finite() { xs[i] * harvest / u } else { 0.0 };
                    used += slots[i];
                }
                Ok(used)
            };
            let mut scratch = vec![0.0; n];
            let seed = if hint.is_finite() && hint > 0.0 { hint } else { 1.0 };
            let mut lo = seed / 4.0;
            while fill(lo, &mut scratch)? < window && lo > 1e-250 {
                lo /= 16.0;
            }
            let mut hi = lo.max(seed * 4.0);
            while fill(hi, &mut scratch)? > window && hi < 1e250 {
                hi *= 16.0;
            }
            let nu = solve_scalar_root(
                |nu: f64| fill(nu, &mut scratch).map(|used| used - window).unwrap_or(f64::NAN),
                RootBracket::new(lo.min(hi * 0.5), hi)?,
                1e-12,
            )?;
            nu_out = nu;
            fill(nu, &mut slots)?;
            // Exact budget: rescale the residual root error away.
            let used: f64 = slots.iter().sum();
            if used > 0.0 {
                for s in &mut slots {
                    *s *= window / used;
                }
            }
        }
    }
    let mut value = 0.0;
    for i in 0..n {
        if w[i] > 1e-300 {
            value += w[i] * user_rate(xs[i], harvest, slots[i])?;
        }
    }
    Ok((slots, value, nu_out))
}

/// Best weighted-sum allocation: golden-section over the harvest fraction
/// with the inner slot split solved semi-analytically. The water level found
/// at one harvest fraction seeds the bracket at the next, since it varies
/// smoothly along the golden-section trajectory.
fn weighted_inner(xs: &[f64], w: &[f64]) -> Result<(TimeAllocation, f64)> {
    let hint = std::cell::Cell::new(f64::NAN);
    let (t_best, value) = golden_section_max(
        |t| {
            slots_for_harvest(xs, w, t, hint.get())
                .map(|(_, v, nu)| {
                    if nu.is_finite() {
                        hint.set(nu);
                    }
                    v
                })
                .unwrap_or(f64::NAN)
        },
        1e-9,
        1.0 - 1e-9,
        1e-9,
    )?;
    let (slots, _, _) = slots_for_harvest(xs, w, t_best, hint.get())?;
    Ok((TimeAllocation::new(t_best, slots)?, value))
}

/// Positive root of `ln(1+u) = m u` for `0 < m < 1`: the post-harvest SNR at
/// which a slot meets its rate target with equality. Returns 0 for `m >= 1`
/// (no positive solution; the caller's slot diverges and the target is cut).
fn equal_rate_snr(m: f64) -> f64 {
    if m >= 1.0 {
        return 0.0;
    }
    // ln(1+u) - m u is concave with g(0) = 0, g'(0) > 0, so it stays positive
    // up to the root; the first-order expansion 2(1-m) sits below it.
    let mut lo = 2.0 * (1.0 - m);
    let mut hi = lo.max(1.0);
    while hi.ln_1p() > m * hi && hi < 1e300 {
        hi *= 4.0;
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..80 {
        let g = u.ln_1p() - m * u;
        if g > 0.0 {
            lo = lo.max(u);
        } else {
            hi = hi.min(u);
        }
        let mut next = u - g / (1.0 / (1.0 + u) - m);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - u).abs() <= 1e-14 * u.abs();
        u = next;
        if done {
            break;
        }
    }
    u
}

/// Exact equal-scaled-rate split at a fixed harvest fraction: the common
/// value `c` with every `R_i / b_i = c` and the slots exhausting `1 - T`.
/// Total slot time grows monotonically in `c`, so a scalar root in `c`
/// recovers the fixed-harvest optimum of the min-scaled-rate objective.
fn equalized_at(xs: &[f64], profile: &[f64], harvest: f64) -> Result<(Vec<f64>, f64)> {
    let n = xs.len();
    let window = 1.0 - harvest;
    // As the slot grows the rate saturates at x T / ln 2, so the common value
    // can only approach the smallest scaled ceiling.
    let cap = xs
        .iter()
        .zip(profile)
        .map(|(x, b)| x * harvest / (LN_2 * b))
        .fold(f64::INFINITY, f64::min);
    if !(cap > 0.0) || !(window > 0.0) {
        return Ok((vec![window.max(0.0) / n as f64; n], 0.0));
    }
    let need = |c: f64, slots: &mut [f64]| -> f64 {
        let mut used = 0.0;
        for i in 0..n {
            let m = c * profile[i] * LN_2 / (xs[i] * harvest);
            let u = equal_rate_snr(m);
            slots[i] = xs[i] * harvest / u;
            used += slots[i];
        }
        used
    };
    let mut scratch = vec![0.0; n];
    let mut hi = cap * 0.5;
    while need(hi, &mut scratch) < window && cap - hi > 1e-14 * cap {
        hi = cap - 0.5 * (cap - hi);
    }
    let mut lo = hi * 0.5;
    while need(lo, &mut scratch) > window && lo > 1e-280 {
        lo *= 0.5;
    }
    let c = solve_scalar_root(|c| need(c, &mut scratch) - window, RootBracket::new(lo, hi)?, 1e-13)?;
    let mut slots = vec![0.0; n];
    let used = need(c, &mut slots);
    // Exact budget: rescale the residual root error away.
    if used > 0.0 {
        for s in &mut slots {
            *s *= window / used;
        }
    }
    Ok((slots, c))
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let cand = (cum - 1.0) / (j + 1) as f64;
        if uj - cand > 0.0 {
            theta = cand;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Maximize the minimum scaled rate `min_n R_n / b_n` over the frame split.
/// Lagrangian dual over the simplex: projected subgradient on the weights,
/// inner weighted-sum solved by [`weighted_inner`], keeping the best primal
/// candidate seen.
pub fn solve_rate_profile(
    scenario: &NetworkScenario,
    profile: &[f64],
    config: &SubgradientConfig,
) -> Result<TdmaSolution> {
    config.validate()?;
    let n = scenario.n_users();
    if profile.len() != n {
        return Err(Error::invalid(format!("profile has {} entries for {n} users", profile.len())));
    }
    if profile.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::invalid("profile entries must be positive and finite".to_string()));
    }
    let xs: Vec<f64> = (0..n).map(|i| scenario.x_n(i)).collect();

    let mut lambda = vec![1.0 / n as f64; n];
    let mut best: Option<(f64, TimeAllocation, Vec<f64>)> = None;
    let mut dual_best = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut stalled = 0usize;
    for k in 1..=config.max_iterations {
        iterations = k;
        let w: Vec<f64> = lambda.iter().zip(profile).map(|(l, b)| l / b).collect();
        let (alloc, dual_value) = weighted_inner(&xs, &w)?;
        dual_best = dual_best.min(dual_value);
        // Primal recovery: rebalance the slots at this iterate's harvest
        // fraction so every scaled rate is equal — the exact fixed-harvest
        // optimum of the min-scaled-rate objective.
        let (eq_slots, _) = equalized_at(&xs, profile, alloc.harvest)?;
        let eq_alloc = TimeAllocation::new(alloc.harvest, eq_slots)?;
        let eq_rates = rates(scenario, &eq_alloc)?;
        let primal = eq_rates
            .iter()
            .zip(profile)
            .map(|(ri, b)| ri / b)
            .fold(f64::INFINITY, f64::min);
        let prev_best = best.as_ref().map(|(v, _, _)| *v).unwrap_or(f64::NEG_INFINITY);
        if primal > prev_best {
            best = Some((primal, eq_alloc, eq_rates));
        }
        let best_val = best.as_ref().map(|(v, _, _)| *v).unwrap_or(0.0);
        let scale = best_val.abs().max(1.0);
        gap = dual_best - best_val;
        if gap <= config.tolerance * scale {
            converged = true;
            break;
        }
        // The recovered primal is exact per harvest fraction, so once it
        // stops moving the returned allocation is settled even while the
        // dual bound is still drifting down; stop burning iterations then.
        if primal - prev_best <= config.tolerance * scale {
            stalled += 1;
            if stalled >= 12 {
                break;
            }
        } else {
            stalled = 0;
        }
        // Normalized projected subgradient step toward equalized scaled
        // rates; the subgradient is taken at the inner weighted maximizer.
        let r = rates(scenario, &alloc)?;
        let scaled: Vec<f64> = r.iter().zip(profile).map(|(ri, b)| ri / b).collect();
        let gmax = scaled.iter().cloned().fold(0.0f64, f64::max).max(1e-300);
        let step = config.step(k) / gmax;
        for j in 0..n {
            lambda[j] -= step * scaled[j];
        }
        lambda = project_simplex(&lambda);
    }
    let (objective, allocation, user_rates) =
        best.ok_or_else(|| Error::Infeasible("no primal candidate produced".to_string()))?;
    let mut report =
        if converged { SolverReport::converged(iterations, gap) } else { SolverReport::exhausted(iterations, gap) };
    if !converged {
        report.note(format!("duality gap {gap:e} after {iterations} subgradient steps"));
    }
    Ok(TdmaSolution { allocation, rates: user_rates, objective, report })
}

/// Largest rate every user can be given simultaneously. Same as a rate
/// profile of `1/N` per user; the objective is the common per-user rate.
pub fn solve_common_throughput(
    scenario: &NetworkScenario,
    config: &SubgradientConfig,
) -> Result<TdmaSolution> {
    let n = scenario.n_users() as f64;
    let profile = vec![1.0 / n; scenario.n_users()];
    let mut sol = solve_rate_profile(scenario, &profile, config)?;
    sol.objective /= n;
    Ok(sol)
}

/// Weighted sum-rate maximization through the generic concave engine over
/// `(T, t_1..t_N)` with the frame budget as an explicit constraint.
pub fn solve_weighted_sum(scenario: &NetworkScenario, weights: &[f64]) -> Result<TdmaSolution> {
    let n = scenario.n_users();
    if weights.len() != n {
        return Err(Error::invalid(format!("{} weights for {n} users", weights.len())));
    }
    if weights.iter().any(|&a| !(a >= 0.0) || !a.is_finite()) || weights.iter().all(|&a| a == 0.0) {
        return Err(Error::invalid("weights must be nonnegative with at least one positive".to_string()));
    }
    let xs: Vec<f64> = (0..n).map(|i| scenario.x_n(i)).collect();

    let objective = Box::new(move |v: &[f64]| {
        let t = v[0];
        let mut val = 0.0;
        let mut grad = vec![0.0; v.len()];
        for i in 0..xs.len() {
            let slot = v[i + 1];
            let u = xs[i] * t / slot;
            val += weights[i] * slot * (1.0 + u).log2();
            grad[i + 1] = weights[i] * ((1.0 + u).log2() - u / ((1.0 + u) * LN_2));
            grad[0] += weights[i] * xs[i] / ((1.0 + u) * LN_2);
        }
        (val, grad)
    });
    let budget: crate::numerics::ValueGrad =
        Box::new(|v: &[f64]| (v.iter().sum::<f64>() - 1.0, vec![1.0; v.len()]));

    // Start from the sum-throughput split, pulled strictly inside the budget.
    let seed = solve_sum_throughput(scenario)?;
    let mut start = vec![seed.allocation.harvest * (1.0 - 1e-7)];
    start.extend(seed.allocation.slots.iter().map(|s| s * (1.0 - 1e-7)));

    let problem = ConcaveProblem {
        objective,
        constraints: vec![budget],
        lower: vec![0.0; n + 1],
        upper: vec![1.0; n + 1],
        initial: Some(start),
    };
    let sol = maximize_concave(&problem, &ConcaveConfig::default())?;
    let allocation = TimeAllocation::new(sol.x[0], sol.x[1..].to_vec())?;
    let user_rates = rates(scenario, &allocation)?;
    let objective = user_rates.iter().zip(weights).map(|(r, a)| r * a).sum();
    Ok(TdmaSolution { allocation, rates: user_rates, objective, report: sol.report })
}

/// Sum rate per unit of downlink energy actually radiated, `R / (P0 T)`.
pub fn energy_efficiency(scenario: &NetworkScenario, solution: &TdmaSolution) -> f64 {
    solution.rates.iter().sum::<f64>() / (scenario.p0_watts * solution.allocation.harvest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::UserLink;

    fn two_user_scenario() -> NetworkScenario {
        // SNR scales X = (5, 0.8): the optimal harvest fraction sits well
        // inside (0, 1).
        let users = vec![
            UserLink::new(5.0, 1e-6, 1.0, 1.0).unwrap(),
            UserLink::new(9.0, 4e-7, 1.0, 1.0).unwrap(),
        ];
        NetworkScenario::new(2.0, 1e-13, 0.5, 0.5, users).unwrap()
    }

    #[test]
    fn allocation_validation() {
        assert!(TimeAllocation::new(0.3, vec![0.3, 0.3]).is_ok());
        assert!(TimeAllocation::new(0.0, vec![0.3]).is_err());
        assert!(TimeAllocation::new(0.5, vec![-0.1]).is_err());
        assert!(TimeAllocation::new(0.6, vec![0.3, 0.2]).is_err());
    }

    #[test]
    fn sum_throughput_matches_single_user_reduction() {
        let scenario = two_user_scenario();
        let sol = solve_sum_throughput(&scenario).unwrap();
        // T* agrees with the single-user closed form at the aggregate scale.
        let t_single = crate::harvest::optimal_t_deterministic(scenario.x_total()).unwrap();
        assert!((sol.allocation.harvest - t_single).abs() < 1e-9);
        // Budget exhausted exactly and spectral efficiencies equalized.
        assert!((sol.allocation.total() - 1.0).abs() < 1e-12);
        let se0 = sol.rates[0] / sol.allocation.slots[0];
        let se1 = sol.rates[1] / sol.allocation.slots[1];
        assert!((se0 - se1).abs() < 1e-9);
        // Matches the aggregate single-user throughput.
        let direct =
            crate::harvest::throughput_single(scenario.x_total(), sol.allocation.harvest).unwrap();
        assert!((sol.objective - direct).abs() < 1e-9);
    }

    #[test]
    fn rate_profile_equalizes_scaled_rates() {
        let scenario = two_user_scenario();
        let profile = [0.25, 0.75];
        let config = SubgradientConfig { max_iterations: 600, ..Default::default() };
        let sol = solve_rate_profile(&scenario, &profile, &config).unwrap();
        let scaled: Vec<f64> =
            sol.rates.iter().zip(profile.iter()).map(|(r, b)| r / b).collect();
        let spread = (scaled[0] - scaled[1]).abs() / scaled[0].abs();
        assert!(spread < 1e-6, "scaled rates {scaled:?}");
        assert!((sol.objective - scaled[0].min(scaled[1])).abs() < 1e-12);
        assert!(sol.allocation.total() <= 1.0 + 1e-9);
    }

    #[test]
    fn common_throughput_is_scaled_profile() {
        let scenario = two_user_scenario();
        let config = SubgradientConfig { max_iterations: 400, ..Default::default() };
        let common = solve_common_throughput(&scenario, &config).unwrap();
        assert!((common.rates[0] - common.rates[1]).abs() / common.rates[0] < 1e-6);
        assert!(common.objective <= common.rates[0].max(common.rates[1]) + 1e-9);
    }

    #[test]
    fn weighted_sum_with_equal_weights_recovers_sum_optimum() {
        let scenario = two_user_scenario();
        let reference = solve_sum_throughput(&scenario).unwrap();
        let sol = solve_weighted_sum(&scenario, &[1.0, 1.0]).unwrap();
        assert!(
            (sol.objective - reference.objective).abs() < 1e-5,
            "weighted {} vs closed form {}",
            sol.objective,
            reference.objective
        );
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.4, -0.2, 1.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        let q = project_simplex(&[0.2, 0.3, 0.5]);
        for (a, b) in q.iter().zip([0.2, 0.3, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_efficiency_definition() {
        let scenario = two_user_scenario();
        let sol = solve_sum_throughput(&scenario).unwrap();
        let ee = energy_efficiency(&scenario, &sol);
        assert!(
            (ee - sol.objective / (scenario.p0_watts * sol.allocation.harvest)).abs() < 1e-12
        );
    }
}
