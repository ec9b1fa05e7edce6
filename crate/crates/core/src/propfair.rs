//! Proportionally fair allocation: maximize the sum of log rates, either
//! with a TDMA uplink (per-user slots) or a NOMA uplink whose rate region is
//! described by the suffix capacities of the weakest user groups.

use crate::channel::{require_sorted, NetworkScenario};
use crate::numerics::{
    golden_section_max, lambert_w0, solve_scalar_root, RootBracket, SubgradientConfig, LN_2,
};
use crate::tdma::TimeAllocation;
use crate::{Error, Result, SolverReport};

#[derive(Debug, Clone)]
pub struct ProportionalFairSolution {
    pub harvest: f64,
    pub rates: Vec<f64>,
    /// Sum of natural-log rates.
    pub objective: f64,
    /// Slot allocation when the uplink is TDMA.
    pub allocation: Option<TimeAllocation>,
    pub report: SolverReport,
}

fn log_utility(rates: &[f64]) -> f64 {
    if rates.iter().any(|&r| r <= 0.0) {
        return f64::NEG_INFINITY;
    }
    rates.iter().map(|r| r.ln()).sum()
}

/// Post-harvest SNR factor at the slot stationarity condition: solving
/// `ln A - 1 + 1/A = mu ln2 / lambda` for `A = 1 + u` gives
/// `A = -1 / W0(-exp(-1 - mu ln2 / lambda))`.
fn stationary_snr_factor(lambda: f64, mu: f64) -> Result<f64> {
    let arg = -(-1.0 - mu * LN_2 / lambda).exp();
    if arg == 0.0 {
        // Multiplier so large that the user's slot collapses.
        return Ok(f64::INFINITY);
    }
    Ok(-1.0 / lambert_w0(arg)?)
}

/// Inner solve for fixed rate-cap multipliers: returns the frame split and
/// the per-user rates that maximize `sum lambda_n r_n` over the time budget.
fn pf_tdma_inner(xs: &[f64], lambda: &[f64]) -> Result<(TimeAllocation, Vec<f64>)> {
    let n = xs.len();
    let weighted: f64 = xs.iter().zip(lambda).map(|(x, l)| x * l).sum();
    let mu_hi = weighted / LN_2 + 1.0;
    let balance = |mu: f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..n {
            match stationary_snr_factor(lambda[i], mu) {
                Ok(a) if a.is_finite() => acc += lambda[i] * xs[i] / (a * LN_2),
                Ok(_) => {}
                Err(_) => return f64::NAN,
            }
        }
        acc - mu
    };
    let mu = solve_scalar_root(balance, RootBracket::new(1e-300, mu_hi)?, 1e-13 * mu_hi)?;
    let a: Vec<f64> =
        lambda.iter().map(|&l| stationary_snr_factor(l, mu)).collect::<Result<_>>()?;
    let denom: f64 = (0..n).map(|i| if a[i].is_finite() { xs[i] / (a[i] - 1.0) } else { 0.0 }).sum();
    let harvest = 1.0 / (1.0 + denom);
    let slots: Vec<f64> =
        (0..n).map(|i| if a[i].is_finite() { xs[i] * harvest / (a[i] - 1.0) } else { 0.0 }).collect();
    let rates: Vec<f64> = (0..n)
        .map(|i| if slots[i] > 0.0 { slots[i] * a[i].log2() } else { 0.0 })
        .collect();
    Ok((TimeAllocation::new(harvest, slots)?, rates))
}

/// Proportional fairness over a TDMA frame. Dual ascent on per-user rate-cap
/// multipliers; each inner problem is solved through the stationarity
/// conditions (one scalar balance equation in the time multiplier). The
/// multipliers satisfy `R_n = 1/lambda_n` at the optimum.
pub fn solve_pf_tdma(
    scenario: &NetworkScenario,
    config: &SubgradientConfig,
) -> Result<ProportionalFairSolution> {
    config.validate()?;
    let n = scenario.n_users();
    let xs: Vec<f64> = (0..n).map(|i| scenario.x_n(i)).collect();
    if xs.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::invalid("every user needs a positive SNR scale".to_string()));
    }

    // Warm start from the sum-throughput rates: lambda* = 1/R*.
    let seed = crate::tdma::solve_sum_throughput(scenario)?;
    let mut lambda: Vec<f64> = seed.rates.iter().map(|r| 1.0 / r.max(1e-12)).collect();

    let mut best: Option<(f64, TimeAllocation, Vec<f64>)> = None;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut report_notes: Vec<String> = Vec::new();
    let mut prev = lambda.clone();
    for k in 1..=config.max_iterations {
        iterations = k;
        let (alloc, rates) = match pf_tdma_inner(&xs, &lambda) {
            Ok(out) => out,
            Err(e) => {
                // Step landed somewhere numerically hostile: back off halfway.
                if report_notes.is_empty() {
                    report_notes.push(format!("inner solve failed once ({e}); halving the step"));
                }
                for i in 0..n {
                    lambda[i] = 0.5 * (lambda[i] + prev[i]);
                }
                continue;
            }
        };
        let objective = log_utility(&rates);
        // Iterates whose rates underflowed to zero are not usable primal
        // candidates; they would poison the incumbent with -inf.
        if objective.is_finite()
            && best.as_ref().map_or(true, |(o, _, _)| objective > *o)
        {
            best = Some((objective, alloc, rates.clone()));
        }
        let best_obj = best.as_ref().map_or(f64::NEG_INFINITY, |(o, _, _)| *o);
        let dual: f64 = lambda.iter().map(|l| -1.0 - l.ln()).sum::<f64>()
            + lambda.iter().zip(&rates).map(|(l, r)| l * r).sum::<f64>();
        if best_obj.is_finite() {
            gap = dual - best_obj;
            if gap <= config.tolerance * best_obj.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        prev = lambda.clone();
        // Polyak step once a finite primal bound exists (the feasible inner
        // solution measures the duality gap directly); a diminishing step
        // until then. Each multiplier moves at most one decade per round.
        let g: Vec<f64> = (0..n).map(|i| rates[i] - 1.0 / lambda[i]).collect();
        let step = if best_obj.is_finite() && dual.is_finite() {
            let gnorm2 = g.iter().map(|gi| gi * gi).sum::<f64>().max(1e-300);
            (dual - best_obj).max(0.0) / gnorm2
        } else {
            let gmax = g.iter().fold(0.0f64, |a, gi| a.max(gi.abs())).max(1e-300);
            let scale = lambda.iter().sum::<f64>() / n as f64;
            config.step(k) * scale / gmax
        };
        for i in 0..n {
            let moved = lambda[i] - step * g[i];
            lambda[i] = moved.clamp(lambda[i] / 10.0, lambda[i] * 10.0).max(1e-12);
        }
    }
    let (objective, allocation, rates) =
        best.ok_or_else(|| Error::Infeasible("no inner solution produced".to_string()))?;
    let mut report = if converged {
        SolverReport::converged(iterations, gap)
    } else {
        SolverReport::exhausted(iterations, gap)
    };
    for note in report_notes {
        report.note(note);
    }
    if !converged {
        report.note(format!("dual gap {gap:e} after {iterations} steps"));
    }
    Ok(ProportionalFairSolution {
        harvest: allocation.harvest,
        rates,
        objective,
        allocation: Some(allocation),
        report,
    })
}

/// Proportionally fair split of nested capacities. `caps[k]` bounds the sum
/// of the `k+1` smallest rates (weakest users first); caps must be positive
/// and non-decreasing. Returns the weakest-first rate vector maximizing the
/// sum of logs: greedy blocks of equal rate, each block ending at the prefix
/// whose average remaining capacity is smallest.
pub fn nested_waterfill(caps: &[f64]) -> Result<Vec<f64>> {
    let n = caps.len();
    if n == 0 {
        return Err(Error::invalid("no capacities given".to_string()));
    }
    for k in 0..n {
        if !(caps[k] > 0.0) || !caps[k].is_finite() {
            return Err(Error::invalid(format!("cap {k} must be positive and finite")));
        }
        if k > 0 && caps[k] < caps[k - 1] {
            return Err(Error::invalid(format!("caps must be non-decreasing, cap {k} drops")));
        }
    }
    let mut rates = vec![0.0; n];
    let mut start = 0usize;
    let mut consumed = 0.0;
    while start < n {
        let mut j_star = start;
        let mut level = f64::INFINITY;
        for j in start..n {
            let l = (caps[j] - consumed) / (j - start + 1) as f64;
            if l < level {
                level = l;
                j_star = j;
            }
        }
        if !(level > 0.0) {
            return Err(Error::Infeasible(
                "a capacity leaves no room above the previous block".to_string(),
            ));
        }
        for r in &mut rates[start..=j_star] {
            *r = level;
        }
        consumed = caps[j_star];
        start = j_star + 1;
    }
    Ok(rates)
}

fn weakest_group_scale(scenario: &NetworkScenario, count: usize) -> f64 {
    let n = scenario.n_users();
    scenario.eta() * scenario.rho0() * (n - count..n).map(|i| scenario.g(i)).sum::<f64>()
}

fn group_capacity(scale: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    (1.0 - t) * (scale * t / (1.0 - t)).ln_1p() / LN_2
}

fn group_capacity_slope(scale: f64, t: f64) -> f64 {
    let b = 1.0 + scale * t / (1.0 - t);
    (scale / ((1.0 - t) * b) - b.ln()) / LN_2
}

/// Proportional fairness over the NOMA rate region. The region is pinned by
/// the nested capacities of the weakest groups; dual ascent runs on those
/// group constraints, the inner harvest fraction solves the weighted slope
/// balance, and feasible candidates come from [`nested_waterfill`].
pub fn solve_pf_noma(
    scenario: &NetworkScenario,
    config: &SubgradientConfig,
) -> Result<ProportionalFairSolution> {
    config.validate()?;
    require_sorted(scenario)?;
    let n = scenario.n_users();
    let scales: Vec<f64> = (1..=n).map(|c| weakest_group_scale(scenario, c)).collect();

    let caps_at = |t: f64| -> Vec<f64> { scales.iter().map(|&s| group_capacity(s, t)).collect() };
    let feasible_utility = |t: f64| -> Result<(Vec<f64>, f64)> {
        let weakest_first = nested_waterfill(&caps_at(t))?;
        let mut rates = vec![0.0; n];
        for (p, r) in weakest_first.iter().enumerate() {
            rates[n - 1 - p] = *r;
        }
        let obj = log_utility(&rates);
        Ok((rates, obj))
    };

    let mut lambda = vec![1.0 / n as f64; n];
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (objective, T, rates)
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for k in 1..=config.max_iterations {
        iterations = k;
        if lambda.iter().sum::<f64>() < 1e-12 {
            lambda = vec![1.0 / n as f64; n];
        }
        // Weighted stationarity in T, falling back to a direct search if the
        // slope never changes sign inside the bracket.
        let slope = |t: f64| -> f64 {
            (0..n).map(|i| lambda[i] * group_capacity_slope(scales[i], t)).sum()
        };
        let t = match solve_scalar_root(slope, RootBracket::new(1e-9, 1.0 - 1e-9)?, 1e-13) {
            Ok(t) => t,
            Err(Error::NoSignChange { .. }) => {
                let weighted = |t: f64| -> f64 {
                    (0..n).map(|i| lambda[i] * group_capacity(scales[i], t)).sum()
                };
                golden_section_max(weighted, 1e-9, 1.0 - 1e-9, 1e-10)?.0
            }
            Err(e) => return Err(e),
        };
        let (rates, objective) = feasible_utility(t)?;
        if best.as_ref().map_or(true, |(o, _, _)| objective > *o) {
            best = Some((objective, t, rates));
        }
        let best_obj = best.as_ref().unwrap().0;

        // Multiplier seen by user j (descending order): every group that
        // contains it, i.e. groups of size >= n - j.
        let mut suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix[i] = suffix[i + 1] + lambda[i];
        }
        let caps = caps_at(t);
        let tilde: Vec<f64> = (0..n).map(|j| 1.0 / suffix[n - 1 - j].max(1e-12)).collect();
        let degenerate = (0..n).any(|j| suffix[n - 1 - j] < 1e-12);
        if !degenerate && best_obj.is_finite() {
            let dual = tilde.iter().map(|r| r.ln() - 1.0).sum::<f64>()
                + lambda.iter().zip(&caps).map(|(l, c)| l * c).sum::<f64>();
            gap = dual - best_obj;
            if gap <= config.tolerance * best_obj.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        // Slack of each group constraint under the analytic candidate rates.
        let mut tail_rate = 0.0;
        let mut g = vec![0.0; n];
        for i in 0..n {
            tail_rate += tilde[n - 1 - i];
            g[i] = caps[i] - tail_rate;
        }
        // Polyak step from the measured duality gap where the dual value is
        // defined; a diminishing step otherwise.
        let step = if !degenerate && gap.is_finite() {
            let gnorm2 = g.iter().map(|gi| gi * gi).sum::<f64>().max(1e-300);
            gap.max(0.0) / gnorm2
        } else {
            let gmax = g.iter().fold(0.0f64, |a, gi| a.max(gi.abs())).max(1e-300);
            let scale = lambda.iter().sum::<f64>() / n as f64;
            config.step(k) * scale / gmax
        };
        for i in 0..n {
            let moved = lambda[i] - step * g[i];
            let ceiling = 10.0 * lambda[i].max(1e-6);
            lambda[i] = moved.clamp(0.0, ceiling);
        }
    }
    let (objective, harvest, rates) =
        best.ok_or_else(|| Error::Infeasible("no feasible candidate produced".to_string()))?;
    let mut report = if converged {
        SolverReport::converged(iterations, gap)
    } else {
        SolverReport::exhausted(iterations, gap)
    };
    if !converged {
        report.note(format!("dual gap {gap:e} after {iterations} steps"));
    }
    Ok(ProportionalFairSolution { harvest, rates, objective, allocation: None, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::UserLink;

    fn scenario(gammas: &[f64]) -> NetworkScenario {
        let users =
            gammas.iter().map(|&gm| UserLink::new(5.0, gm, 1.0, 1.0).unwrap()).collect();
        NetworkScenario::new(2.0, 1e-13, 0.5, 0.5, users).unwrap()
    }

    #[test]
    fn waterfill_two_block_cases() {
        // Total cap binding: both rates at caps[1]/2.
        let r = nested_waterfill(&[3.0, 4.0]).unwrap();
        assert_eq!(r, vec![2.0, 2.0]);
        // Weakest cap binding: 1 for the weak user, remainder for the other.
        let r = nested_waterfill(&[1.0, 4.0]).unwrap();
        assert_eq!(r, vec![1.0, 3.0]);
        // Three users, middle cap pinching.
        let r = nested_waterfill(&[2.0, 2.5, 10.0]).unwrap();
        assert!((r[0] - 1.25).abs() < 1e-12 && (r[1] - 1.25).abs() < 1e-12);
        assert!((r[2] - 7.5).abs() < 1e-12);
        // Prefix sums respect every cap and levels are non-decreasing.
        let caps = [1.0, 1.9, 2.2, 4.0];
        let r = nested_waterfill(&caps).unwrap();
        let mut acc = 0.0;
        for (k, rk) in r.iter().enumerate() {
            acc += rk;
            assert!(acc <= caps[k] + 1e-12);
            if k > 0 {
                assert!(r[k] >= r[k - 1] - 1e-12);
            }
        }
    }

    #[test]
    fn waterfill_rejects_bad_caps() {
        assert!(nested_waterfill(&[]).is_err());
        assert!(nested_waterfill(&[1.0, 0.5]).is_err());
        assert!(nested_waterfill(&[0.0, 1.0]).is_err());
        // Equal caps are fine: the block just stretches across both users.
        assert_eq!(nested_waterfill(&[1.0, 1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn pf_tdma_single_user_is_sum_throughput() {
        let sc = scenario(&[1e-6]);
        let config = SubgradientConfig { max_iterations: 300, tolerance: 1e-9, ..Default::default() };
        let sol = solve_pf_tdma(&sc, &config).unwrap();
        let reference = crate::tdma::solve_sum_throughput(&sc).unwrap();
        assert!(
            (sol.harvest - reference.allocation.harvest).abs() < 1e-6,
            "T {} vs {}",
            sol.harvest,
            reference.allocation.harvest
        );
        assert!((sol.rates[0] - reference.rates[0]).abs() < 1e-6);
    }

    #[test]
    fn pf_tdma_rates_track_inverse_multipliers() {
        let sc = scenario(&[1e-6, 5e-7]);
        let config = SubgradientConfig { max_iterations: 1500, tolerance: 1e-7, ..Default::default() };
        let sol = solve_pf_tdma(&sc, &config).unwrap();
        // Feasibility and a better log-utility than the plain sum optimum.
        let total = sol.allocation.as_ref().unwrap().total();
        assert!(total <= 1.0 + 1e-9);
        let seed = crate::tdma::solve_sum_throughput(&sc).unwrap();
        assert!(log_utility(&sol.rates) >= log_utility(&seed.rates) - 1e-7);
    }

    #[test]
    fn pf_noma_single_user_reduces_to_closed_form() {
        let sc = scenario(&[1e-6]);
        let config = SubgradientConfig { max_iterations: 400, tolerance: 1e-8, ..Default::default() };
        let sol = solve_pf_noma(&sc, &config).unwrap();
        let t_star = crate::harvest::optimal_t_deterministic(sc.x_total()).unwrap();
        assert!((sol.harvest - t_star).abs() < 1e-5, "T {} vs {t_star}", sol.harvest);
    }

    #[test]
    fn pf_noma_beats_equal_rate_utility_and_is_monotone() {
        let sc = scenario(&[1e-6, 6e-7, 2e-7]);
        let config = SubgradientConfig { max_iterations: 1500, tolerance: 1e-7, ..Default::default() };
        let sol = solve_pf_noma(&sc, &config).unwrap();
        for w in sol.rates.windows(2) {
            assert!(w[0] >= w[1] - 1e-9, "rates not ordered: {:?}", sol.rates);
        }
        // Log-utility at the returned T dominates the equal-split point of
        // the same region.
        let scales: Vec<f64> = (1..=3).map(|c| weakest_group_scale(&sc, c)).collect();
        let caps: Vec<f64> =
            scales.iter().map(|&s| group_capacity(s, sol.harvest)).collect();
        let equal = caps
            .iter()
            .enumerate()
            .map(|(k, c)| c / (k + 1) as f64)
            .fold(f64::INFINITY, f64::min);
        let equal_utility = 3.0 * equal.ln();
        assert!(sol.objective >= equal_utility - 1e-9);
    }
}
