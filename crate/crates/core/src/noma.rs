//! Uplink NOMA after a shared harvest phase: all users transmit together in
//! the `1 - T` window and the base station decodes successively. A user
//! decoded earlier sees every later user as interference; time-sharing over
//! decoding orders convexifies the rate region.

use crate::channel::{require_sorted, NetworkScenario};
use crate::harvest;
use crate::numerics::{
    golden_section_max, solve_lp, solve_scalar_root, Constraint, LinearProgram, LpStatus,
    RootBracket, SubgradientConfig, LN_2,
};
use crate::{Error, Result, SolverReport};

/// A decoding order: `order()[k]` is the user decoded k-th.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecodingPermutation {
    order: Vec<usize>,
}

impl DecodingPermutation {
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let n = order.len();
        if n == 0 {
            return Err(Error::invalid("decoding order must not be empty".to_string()));
        }
        let mut seen = vec![false; n];
        for &u in &order {
            if u >= n || seen[u] {
                return Err(Error::invalid(format!("{order:?} is not a permutation of 0..{n}")));
            }
            seen[u] = true;
        }
        Ok(DecodingPermutation { order })
    }

    /// Identity order: with users sorted by non-increasing gain this decodes
    /// the strongest user first.
    pub fn descending(n: usize) -> Self {
        DecodingPermutation { order: (0..n).collect() }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

fn check_t_open(t: f64) -> Result<()> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!("harvest fraction must lie in [0, 1), got {t}")));
    }
    Ok(())
}

/// Per-user rates (indexed by user, not decode position) under one decoding
/// order. User at position `k` is decoded against the aggregate of everyone
/// decoded after it.
pub fn rates_for_permutation(
    scenario: &NetworkScenario,
    t: f64,
    perm: &DecodingPermutation,
) -> Result<Vec<f64>> {
    let n = scenario.n_users();
    if perm.len() != n {
        return Err(Error::invalid(format!("permutation over {} users, scenario has {n}", perm.len())));
    }
    check_t_open(t)?;
    let mut rates = vec![0.0; n];
    if t == 0.0 {
        return Ok(rates);
    }
    let c = t / (1.0 - t);
    let mut tail = 0.0; // interference power seen at this decode position
    for k in (0..n).rev() {
        let user = perm.order[k];
        let x = scenario.x_n(user);
        rates[user] = (1.0 - t) * (c * x / (1.0 + c * tail)).ln_1p() / LN_2;
        tail += x;
    }
    Ok(rates)
}

/// Aggregate NOMA throughput `(1 - T) log2(1 + eta rho0 sum(g) T/(1-T))`;
/// the per-user rates of any decoding order telescope to this.
pub fn system_throughput(scenario: &NetworkScenario, t: f64) -> Result<f64> {
    check_t_open(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let c = t / (1.0 - t);
    Ok((1.0 - t) * (c * scenario.x_total()).ln_1p() / LN_2)
}

/// Harvest fraction maximizing the aggregate throughput (closed form on the
/// aggregate SNR scale).
pub fn optimal_t_sum(scenario: &NetworkScenario) -> Result<f64> {
    harvest::optimal_t_deterministic(scenario.x_total())
}

/// Convex combination of decoding orders: order `m` is used for a fraction
/// `fractions[m]` of the uplink window.
#[derive(Debug, Clone)]
pub struct TimeSharing {
    pub permutations: Vec<DecodingPermutation>,
    pub fractions: Vec<f64>,
}

impl TimeSharing {
    pub fn new(permutations: Vec<DecodingPermutation>, fractions: Vec<f64>) -> Result<Self> {
        if permutations.is_empty() || permutations.len() != fractions.len() {
            return Err(Error::invalid(format!(
                "need matching non-empty orders and fractions, got {} and {}",
                permutations.len(),
                fractions.len()
            )));
        }
        let n = permutations[0].len();
        if permutations.iter().any(|p| p.len() != n) {
            return Err(Error::invalid("all decoding orders must cover the same users".to_string()));
        }
        for i in 0..permutations.len() {
            for j in (i + 1)..permutations.len() {
                if permutations[i] == permutations[j] {
                    return Err(Error::invalid(format!("decoding orders {i} and {j} are identical")));
                }
            }
        }
        if fractions.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
            return Err(Error::invalid("fractions must be nonnegative and finite".to_string()));
        }
        let total: f64 = fractions.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("fractions sum to {total} > 1")));
        }
        Ok(TimeSharing { permutations, fractions })
    }
}

/// Per-user rates under time-sharing: fraction-weighted sum of the rates of
/// each decoding order.
pub fn rates_time_sharing(
    scenario: &NetworkScenario,
    t: f64,
    sharing: &TimeSharing,
) -> Result<Vec<f64>> {
    let n = scenario.n_users();
    let mut totals = vec![0.0; n];
    for (perm, &frac) in sharing.permutations.iter().zip(&sharing.fractions) {
        let r = rates_for_permutation(scenario, t, perm)?;
        for u in 0..n {
            totals[u] += frac * r[u];
        }
    }
    Ok(totals)
}

#[derive(Debug, Clone)]
pub struct TimeSharingSolution {
    pub sharing: TimeSharing,
    pub rates: Vec<f64>,
    pub min_rate: f64,
    pub report: SolverReport,
}

/// Max-min rate over time-sharing fractions for a fixed harvest fraction and
/// a fixed menu of decoding orders, as a linear program. Any slack in the
/// window is redistributed proportionally afterwards (scaling the fractions
/// up only increases every rate).
pub fn solve_max_min_time_sharing(
    scenario: &NetworkScenario,
    t: f64,
    perms: &[DecodingPermutation],
) -> Result<TimeSharingSolution> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::invalid(format!("harvest fraction must lie in (0, 1), got {t}")));
    }
    if perms.is_empty() {
        return Err(Error::invalid("need at least one decoding order".to_string()));
    }
    for i in 0..perms.len() {
        for j in (i + 1)..perms.len() {
            if perms[i] == perms[j] {
                return Err(Error::invalid(format!("decoding orders {i} and {j} are identical")));
            }
        }
    }
    let n = scenario.n_users();
    let m = perms.len();
    let rate_rows: Vec<Vec<f64>> =
        perms.iter().map(|p| rates_for_permutation(scenario, t, p)).collect::<Result<_>>()?;

    // Variables: fractions tau_0..tau_{m-1}, then the common floor R.
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut constraints = Vec::with_capacity(n + 1);
    for user in 0..n {
        let mut coeffs = vec![0.0; m + 1];
        for (row, rates) in rate_rows.iter().enumerate() {
            coeffs[row] = rates[user];
        }
        coeffs[m] = -1.0;
        constraints.push(Constraint::ge(coeffs, 0.0));
    }
    let mut budget = vec![1.0; m + 1];
    budget[m] = 0.0;
    constraints.push(Constraint::le(budget, 1.0));
    let lp = LinearProgram {
        objective,
        constraints,
        lower: vec![0.0; m + 1],
        upper: vec![f64::INFINITY; m + 1],
    };
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Infeasible(format!("time-sharing program ended {:?}", sol.status)));
    }
    let mut fractions = sol.x[..m].to_vec();
    let used: f64 = fractions.iter().sum();
    if used > 0.0 && used < 1.0 {
        for f in &mut fractions {
            *f /= used;
        }
    }
    let sharing = TimeSharing::new(perms.to_vec(), fractions)?;
    let rates = rates_time_sharing(scenario, t, &sharing)?;
    let min_rate = rates.iter().cloned().fold(f64::INFINITY, f64::min);
    debug_assert!(min_rate >= sol.objective - 1e-9 * (1.0 + sol.objective.abs()));
    Ok(TimeSharingSolution { sharing, rates, min_rate, report: SolverReport::converged(1, 0.0) })
}

fn permutation_by_rates(rates: &[f64]) -> DecodingPermutation {
    // Rates within a relative 1e-9 of each other count as tied; quantizing
    // before the sort keeps the comparison transitive. The sort is stable,
    // so tied users keep ascending index order in the decode.
    let scale = 1e-9 * (1.0 + rates.iter().cloned().fold(0.0, f64::max));
    let key = |r: f64| (r / scale).round() as i64;
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.sort_by_key(|&u| std::cmp::Reverse(key(rates[u])));
    DecodingPermutation { order }
}

/// Grow the decoding-order menu greedily: start from the descending-gain
/// order, repeatedly re-solve the max-min program and add the order that
/// decodes currently better-served users first, until the menu repeats or
/// `max_rounds` linear programs have been solved. The achieved floor never
/// decreases from round to round.
pub fn greedy_time_sharing(
    scenario: &NetworkScenario,
    t: f64,
    max_rounds: usize,
) -> Result<TimeSharingSolution> {
    require_sorted(scenario)?;
    if max_rounds == 0 {
        return Err(Error::invalid("at least one greedy round is needed".to_string()));
    }
    let n = scenario.n_users();
    let mut perms = vec![DecodingPermutation::descending(n)];
    let mut best: Option<TimeSharingSolution> = None;
    for round in 0..max_rounds {
        let mut sol = solve_max_min_time_sharing(scenario, t, &perms)?;
        sol.report.iterations = round + 1;
        if let Some(prev) = &best {
            debug_assert!(
                sol.min_rate >= prev.min_rate - 1e-9 * (1.0 + prev.min_rate),
                "floor regressed: {} -> {}",
                prev.min_rate,
                sol.min_rate
            );
        }
        let next = permutation_by_rates(&sol.rates);
        let repeat = perms.contains(&next);
        best = Some(sol);
        if repeat || round + 1 == max_rounds {
            break;
        }
        perms.push(next);
    }
    Ok(best.expect("at least one round always runs"))
}

/// Result of the equal-rate designs: a harvest fraction, the common rate, and
/// how it is realized (single fixed order, or a time-sharing menu).
#[derive(Debug, Clone)]
pub struct EqualRateSolution {
    pub harvest: f64,
    pub equal_rate: f64,
    pub rates: Vec<f64>,
    pub time_sharing: Option<TimeSharing>,
    pub report: SolverReport,
}

/// Equal-rate design with the fixed descending-gain decoding order (no time
/// sharing): choose `T` so the smallest per-user rate is as large as
/// possible. Dual ascent on the rate-floor multipliers; for each multiplier
/// vector the weighted-sum-optimal `T` is an interior root of the weighted
/// stationarity condition.
pub fn solve_equal_rate_fixed_order(
    scenario: &NetworkScenario,
    config: &SubgradientConfig,
) -> Result<EqualRateSolution> {
    config.validate()?;
    require_sorted(scenario)?;
    let n = scenario.n_users();
    let xs: Vec<f64> = (0..n).map(|i| scenario.x_n(i)).collect();
    // Interference left after user n under the descending order.
    let btail: Vec<f64> = (0..n).map(|i| xs[i + 1..].iter().sum()).collect();
    let perm = DecodingPermutation::descending(n);

    // Weighted stationarity: sum_n lambda_n d/dT [(1-T) log2 A_n] = 0, with
    // A_n = 1 + a_n T / (b_n T + 1 - T). The bracketed form below is
    // -ln2 times that derivative; it is negative at T -> 0 and positive at
    // T -> 1, so the root always lies inside.
    let stationarity = |lambda: &[f64], t: f64| -> f64 {
        let s = 1.0 - t;
        let mut total = 0.0;
        for i in 0..n {
            if lambda[i] == 0.0 {
                continue;
            }
            let d1 = s + btail[i] * t;
            let d2 = s + (xs[i] + btail[i]) * t;
            total += lambda[i] * ((xs[i] * t / d1).ln_1p() - xs[i] * s / (d1 * d2));
        }
        total
    };

    let mut lambda = vec![1.0 / n as f64; n];
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (floor, T, rates)
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=config.max_iterations {
        iterations = k;
        let mut sum_l: f64 = lambda.iter().sum();
        if sum_l < 1e-12 {
            lambda = vec![1.0 / n as f64; n];
            sum_l = 1.0;
        }
        let r_eq = 1.0 / sum_l;
        let t = solve_scalar_root(
            |t| stationarity(&lambda, t),
            RootBracket::new(1e-9, 1.0 - 1e-9)?,
            1e-13,
        )?;
        let rates = rates_for_permutation(scenario, t, &perm)?;
        let floor = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        if best.as_ref().map_or(true, |(f, _, _)| floor > *f) {
            best = Some((floor, t, rates.clone()));
        }
        let best_floor = best.as_ref().unwrap().0;
        // Dual value of max ln R with rate floors: upper-bounds ln(optimum).
        let dual = -sum_l.ln() - 1.0 + lambda.iter().zip(&rates).map(|(l, r)| l * r).sum::<f64>();
        if best_floor > 0.0 {
            gap = dual - best_floor.ln();
            if gap <= config.tolerance * best_floor.ln().abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let g: Vec<f64> = rates.iter().map(|r| r - r_eq).collect();
        let gmax = g.iter().fold(0.0f64, |a, gi| a.max(gi.abs())).max(1e-300);
        let step = config.step(k) * sum_l / gmax;
        for i in 0..n {
            lambda[i] = (lambda[i] - step * g[i]).max(0.0);
        }
    }
    let (equal_rate, harvest, rates) =
        best.ok_or_else(|| Error::Infeasible("no feasible point generated".to_string()))?;
    let mut report = if converged {
        SolverReport::converged(iterations, gap)
    } else {
        SolverReport::exhausted(iterations, gap)
    };
    if !converged {
        report.note(format!("dual gap {gap:e} in the log-rate scale after {iterations} steps"));
    }
    Ok(EqualRateSolution { harvest, equal_rate, rates, time_sharing: None, report })
}

/// Suffix capacities: `f_j(T)` is the aggregate rate ceiling of the `N - j`
/// weakest users, `(1-T) log2(1 + eta rho0 (g_j + .. + g_{N-1}) T/(1-T))`.
fn suffix_capacity(ctail: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (1.0 - t) * (ctail * t / (1.0 - t)).ln_1p() / LN_2
}

/// Equal-rate design with time-sharing over decoding orders. The achievable
/// common rate at a given `T` is `min_j f_j(T) / (N - j)` over the suffix
/// capacities; `T` is chosen by dual ascent (inner maximization by
/// golden-section), then the rate point is realized with
/// [`greedy_time_sharing`].
pub fn solve_equal_rate_time_sharing(
    scenario: &NetworkScenario,
    config: &SubgradientConfig,
) -> Result<EqualRateSolution> {
    config.validate()?;
    require_sorted(scenario)?;
    let n = scenario.n_users();
    let scale = scenario.eta() * scenario.rho0();
    let ctail: Vec<f64> =
        (0..n).map(|j| scale * (j..n).map(|i| scenario.g(i)).sum::<f64>()).collect();
    let d: Vec<f64> = (0..n).map(|j| (n - j) as f64).collect();

    let per_user_cap = |t: f64| -> Vec<f64> {
        (0..n).map(|j| suffix_capacity(ctail[j], t) / d[j]).collect()
    };

    let mut lambda = vec![1.0 / n as f64; n];
    let mut best: Option<(f64, f64)> = None; // (floor, T)
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=config.max_iterations {
        iterations = k;
        let mut sum_l: f64 = lambda.iter().sum();
        if sum_l < 1e-12 {
            lambda = vec![1.0 / n as f64; n];
            sum_l = 1.0;
        }
        let r_eq = 1.0 / sum_l;
        let weighted = |t: f64| -> f64 {
            (0..n).map(|j| lambda[j] * suffix_capacity(ctail[j], t) / d[j]).sum()
        };
        let (t, weighted_at_t) = golden_section_max(weighted, 1e-9, 1.0 - 1e-9, 1e-10)?;
        let caps = per_user_cap(t);
        let floor = caps.iter().cloned().fold(f64::INFINITY, f64::min);
        if best.as_ref().map_or(true, |(f, _)| floor > *f) {
            best = Some((floor, t));
        }
        let best_floor = best.as_ref().unwrap().0;
        let dual = -sum_l.ln() - 1.0 + weighted_at_t;
        if best_floor > 0.0 {
            gap = dual - best_floor.ln();
            if gap <= config.tolerance * best_floor.ln().abs().max(1.0) {
                converged = true;
                break;
            }
        }
        let g: Vec<f64> = caps.iter().map(|c| c - r_eq).collect();
        let gmax = g.iter().fold(0.0f64, |a, gi| a.max(gi.abs())).max(1e-300);
        let step = config.step(k) * sum_l / gmax;
        for j in 0..n {
            lambda[j] = (lambda[j] - step * g[j]).max(0.0);
        }
    }
    let (bound, harvest) =
        best.ok_or_else(|| Error::Infeasible("no feasible point generated".to_string()))?;
    let realized = greedy_time_sharing(scenario, harvest, n + 1)?;
    let mut report = if converged {
        SolverReport::converged(iterations, gap)
    } else {
        SolverReport::exhausted(iterations, gap)
    };
    if !converged {
        report.note(format!("dual gap {gap:e} in the log-rate scale after {iterations} steps"));
    }
    if (realized.min_rate - bound).abs() > 1e-6 * bound.max(1e-12) {
        report.note(format!(
            "realized floor {} vs suffix-capacity bound {bound}",
            realized.min_rate
        ));
    }
    Ok(EqualRateSolution {
        harvest,
        equal_rate: realized.min_rate,
        rates: realized.rates,
        time_sharing: Some(realized.sharing),
        report,
    })
}

/// Fairness of a rate vector: `(sum r)^2 / (N sum r^2)`, in `(0, 1]`.
pub fn jain_index(rates: &[f64]) -> Result<f64> {
    if rates.is_empty() {
        return Err(Error::invalid("fairness of an empty rate vector is undefined".to_string()));
    }
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::invalid("rates must be finite and nonnegative".to_string()));
    }
    let sum: f64 = rates.iter().sum();
    let sq: f64 = rates.iter().map(|r| r * r).sum();
    if sq == 0.0 {
        return Err(Error::invalid("fairness of an all-zero rate vector is undefined".to_string()));
    }
    Ok(sum * sum / (rates.len() as f64 * sq))
}

/// Total equal-rate throughput per unit of radiated downlink energy.
pub fn energy_efficiency_equal_rate(
    scenario: &NetworkScenario,
    equal_rate: f64,
    harvest: f64,
) -> f64 {
    scenario.n_users() as f64 * equal_rate / (scenario.p0_watts * harvest)
}
