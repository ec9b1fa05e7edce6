//! Two-level energy market: a power station (leader) prices energy and
//! airtime; each wireless user (follower) buys the bundle that maximizes its
//! own surplus `a log2(1 + R) - c1 E - c2 q` where `R = q log2(1 + E G / q)`
//! is the rate bought with energy `E` over airtime `q`. Shared supply limits
//! couple the followers, so the equilibrium is the variational one: all users
//! see the same shadow price on each exhausted resource.

use crate::numerics::{lambert_w0, SubgradientConfig, LN_2};
use crate::{Error, Result, SolverReport};

/// Demands below this are treated as a user that sits out.
const DEMAND_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EnergyMarket {
    /// Energy the station can sell per frame.
    pub energy_budget: f64,
    /// Airtime available for sale.
    pub time_budget: f64,
    /// Per-user utility weights.
    pub weights: Vec<f64>,
    /// Per-user channel power gain over noise.
    pub gains: Vec<f64>,
}

impl EnergyMarket {
    pub fn new(
        energy_budget: f64,
        time_budget: f64,
        weights: Vec<f64>,
        gains: Vec<f64>,
    ) -> Result<Self> {
        if !(energy_budget > 0.0) || !(time_budget > 0.0) {
            return Err(Error::invalid("budgets must be positive".to_string()));
        }
        if weights.is_empty() || weights.len() != gains.len() {
            return Err(Error::invalid("need matching weight/gain lists".to_string()));
        }
        if weights.iter().chain(gains.iter()).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("weights and gains must be positive".to_string()));
        }
        Ok(Self { energy_budget, time_budget, weights, gains })
    }

    pub fn n_users(&self) -> usize {
        self.weights.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prices {
    /// Price per unit of energy.
    pub energy: f64,
    /// Price per unit of airtime.
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct Demand {
    pub energies: Vec<f64>,
    pub times: Vec<f64>,
}

impl Demand {
    pub fn total_energy(&self) -> f64 {
        self.energies.iter().sum()
    }

    pub fn total_time(&self) -> f64 {
        self.times.iter().sum()
    }
}

/// Rate bought with energy `e` spread over airtime `q`.
pub fn downlink_rate(gain: f64, e: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    q * (gain * e / q).ln_1p() / LN_2
}

pub fn follower_utility(weight: f64, gain: f64, prices: Prices, e: f64, q: f64) -> f64 {
    weight * downlink_rate(gain, e, q).ln_1p() / LN_2 - prices.energy * e - prices.time * q
}

pub fn leader_revenue(prices: Prices, demand: &Demand) -> f64 {
    prices.energy * demand.total_energy() + prices.time * demand.total_time()
}

/// One follower's surplus-maximizing bundle at effective unit prices
/// `(l1, l2)`. Joint stationarity pins the per-slot SNR through
/// `Z = ln(1 + E G / q) = 1 + W0((l2 G - l1) / (e l1))`, and the airtime
/// follows in closed form (floored when the user is priced out).
fn best_response(weight: f64, gain: f64, l1: f64, l2: f64) -> Result<(f64, f64)> {
    if !(l1 > 0.0) || !(l2 > 0.0) {
        return Err(Error::invalid("effective prices must be positive".to_string()));
    }
    let arg = (l2 * gain - l1) / (std::f64::consts::E * l1);
    let z = 1.0 + lambert_w0(arg)?;
    let q = ((weight * gain * (-z).exp() / l1 - LN_2 * LN_2) / (z * LN_2)).max(DEMAND_FLOOR);
    let e = q * (z.exp() - 1.0) / gain;
    Ok((e, q))
}

/// Aggregate demand when every user faces effective prices `(l1, l2)`.
pub fn shadow_demand(market: &EnergyMarket, l1: f64, l2: f64) -> Result<Demand> {
    let n = market.n_users();
    let mut energies = vec![0.0; n];
    let mut times = vec![0.0; n];
    for i in 0..n {
        let (e, q) = best_response(market.weights[i], market.gains[i], l1, l2)?;
        energies[i] = e;
        times[i] = q;
    }
    Ok(Demand { energies, times })
}

/// Marginal utility of one more unit of energy at the bundle `(e, q)`.
pub fn marginal_energy_value(weight: f64, gain: f64, e: f64, q: f64) -> f64 {
    let lg = (gain * e / q).ln_1p();
    weight * gain * q / ((gain * e + q) * (LN_2 + q * lg) * LN_2)
}

/// Marginal utility of one more unit of airtime at the bundle `(e, q)`.
pub fn marginal_time_value(weight: f64, gain: f64, e: f64, q: f64) -> f64 {
    let lg = (gain * e / q).ln_1p();
    weight * ((gain * e + q) * lg - gain * e) / ((gain * e + q) * (LN_2 + q * lg) * LN_2)
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub demand: Demand,
    /// Shadow price the energy cap adds on top of the posted price.
    pub shadow_energy: f64,
    /// Shadow price of the airtime cap.
    pub shadow_time: f64,
    pub report: SolverReport,
}

/// Smallest multiplier at which the monotone `total(shadow)` drops to the
/// target supply; zero when the supply is already slack.
fn clearing_multiplier(
    mut total: impl FnMut(f64) -> Result<f64>,
    target: f64,
    scale_hint: f64,
) -> Result<f64> {
    if total(0.0)? <= target {
        return Ok(0.0);
    }
    let mut hi = scale_hint.max(1e-12);
    let mut grow = 0;
    while total(hi)? > target {
        hi *= 4.0;
        grow += 1;
        if grow > 200 {
            return Err(Error::DidNotConverge { iterations: grow, residual: total(hi)? - target });
        }
    }
    let mut lo = 0.0;
    for _ in 0..90 {
        let mid = 0.5 * (lo + hi);
        if total(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(hi)
}

/// Equilibrium of the follower game at posted prices: a short subgradient
/// sweep on the two shadow prices, then coordinate-wise bisection polish
/// (aggregate demand is monotone in each shadow price) until the supply caps
/// hold and complementary slackness is tight.
pub fn variational_equilibrium(
    market: &EnergyMarket,
    prices: Prices,
    config: &SubgradientConfig,
) -> Result<Equilibrium> {
    config.validate()?;
    if !(prices.energy > 0.0) || !(prices.time > 0.0) {
        return Err(Error::invalid("posted prices must be positive".to_string()));
    }
    let unconstrained = shadow_demand(market, prices.energy, prices.time)?;
    let feas = |d: &Demand| -> f64 {
        let v1 = (d.total_energy() - market.energy_budget) / market.energy_budget;
        let v2 = (d.total_time() - market.time_budget) / market.time_budget;
        v1.max(v2).max(0.0)
    };
    if feas(&unconstrained) <= 1e-9 {
        let mut report = SolverReport::converged(1, feas(&unconstrained));
        report.note("supply slack at posted prices".to_string());
        return Ok(Equilibrium {
            demand: unconstrained,
            shadow_energy: 0.0,
            shadow_time: 0.0,
            report,
        });
    }

    let (mut l1, mut l2) = (0.0f64, 0.0f64);
    let mut iterations = 0;
    for k in 1..=config.max_iterations.min(60) {
        iterations = k;
        let d = shadow_demand(market, prices.energy + l1, prices.time + l2)?;
        let v1 = (d.total_energy() - market.energy_budget) / market.energy_budget;
        let v2 = (d.total_time() - market.time_budget) / market.time_budget;
        if v1.max(v2) <= 0.0 && l1 * (-v1) <= 1e-7 && l2 * (-v2) <= 1e-7 {
            break;
        }
        l1 = (l1 + config.step(k) * l1.max(prices.energy) * v1).max(0.0);
        l2 = (l2 + config.step(k) * l2.max(prices.time) * v2).max(0.0);
    }

    // Coordinate polish: clear energy, then airtime, until neither moves.
    for _ in 0..40 {
        iterations += 1;
        let l2_now = l2;
        let new_l1 = clearing_multiplier(
            |l| Ok(shadow_demand(market, prices.energy + l, prices.time + l2_now)?.total_energy()),
            market.energy_budget,
            l1.max(prices.energy),
        )?;
        let l1_now = new_l1;
        let new_l2 = clearing_multiplier(
            |l| Ok(shadow_demand(market, prices.energy + l1_now, prices.time + l)?.total_time()),
            market.time_budget,
            l2.max(prices.time),
        )?;
        let moved = (new_l1 - l1).abs() > 1e-10 * (1.0 + new_l1)
            || (new_l2 - l2).abs() > 1e-10 * (1.0 + new_l2);
        l1 = new_l1;
        l2 = new_l2;
        if !moved {
            break;
        }
    }

    let demand = shadow_demand(market, prices.energy + l1, prices.time + l2)?;
    let violation = feas(&demand);
    let slack_e = (market.energy_budget - demand.total_energy()).max(0.0) / market.energy_budget;
    let slack_q = (market.time_budget - demand.total_time()).max(0.0) / market.time_budget;
    let comp = (l1 / prices.energy * slack_e).max(l2 / prices.time * slack_q);
    let residual = violation.max(comp);
    let report = if violation <= 1e-9 && comp <= 1e-6 {
        SolverReport::converged(iterations, residual)
    } else {
        SolverReport::exhausted(iterations, residual)
    };
    Ok(Equilibrium { demand, shadow_energy: l1, shadow_time: l2, report })
}

#[derive(Debug, Clone)]
pub struct PriceSolution {
    pub prices: Prices,
    pub equilibrium: Equilibrium,
    pub revenue: f64,
    pub report: SolverReport,
}

fn price_candidates(market: &EnergyMarket, demand: &Demand) -> (f64, f64) {
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::INFINITY;
    for i in 0..market.n_users() {
        let (w, g) = (market.weights[i], market.gains[i]);
        let (e, q) = (demand.energies[i], demand.times[i]);
        c1 = c1.min(marginal_energy_value(w, g, e, q));
        c2 = c2.min(marginal_time_value(w, g, e, q));
    }
    (c1, c2)
}

/// Leader's price choice, started from the marginal resource values of the
/// equal-share allocation.
pub fn optimal_prices(market: &EnergyMarket, config: &SubgradientConfig) -> Result<PriceSolution> {
    let n = market.n_users() as f64;
    let equal = Demand {
        energies: vec![market.energy_budget / n; market.n_users()],
        times: vec![market.time_budget / n; market.n_users()],
    };
    let (c1, c2) = price_candidates(market, &equal);
    if !(c1 > 0.0) || !(c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
        return Err(Error::NonFinite("equal-share marginal values are degenerate".to_string()));
    }
    optimal_prices_from(market, Prices { energy: c1, time: c2 }, config)
}

/// Price at which the monotone-decreasing aggregate `total(price)` meets the
/// supply `target`; the bracket grows geometrically from `hint` both ways.
fn clearing_price(
    mut total: impl FnMut(f64) -> Result<f64>,
    target: f64,
    hint: f64,
) -> Result<f64> {
    let mut lo = hint.max(1e-300);
    let mut hi = lo;
    let mut grow = 0;
    while total(lo)? < target {
        lo /= 4.0;
        grow += 1;
        if grow > 300 {
            return Err(Error::DidNotConverge { iterations: grow, residual: total(lo)? - target });
        }
    }
    while total(hi)? > target {
        hi *= 4.0;
        grow += 1;
        if grow > 300 {
            return Err(Error::DidNotConverge { iterations: grow, residual: total(hi)? - target });
        }
    }
    for _ in 0..120 {
        let mid = 0.5 * (lo + hi);
        if total(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Revenue-optimal posted prices from a caller-chosen guess. Demand grows
/// without bound as either price falls and each follower's spend saturates,
/// so the leader's revenue rises for as long as unsold supply remains: the
/// optimum posts the prices that exactly clear both budgets. Since demand is
/// decreasing in the own price and the two resources are substitutes,
/// alternating own-price bisections converge from any starting point.
pub fn optimal_prices_from(
    market: &EnergyMarket,
    init: Prices,
    config: &SubgradientConfig,
) -> Result<PriceSolution> {
    config.validate()?;
    if !(init.energy > 0.0) || !(init.time > 0.0) {
        return Err(Error::invalid("initial prices must be positive".to_string()));
    }
    let (mut c1, mut c2) = (init.energy, init.time);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    for k in 1..=config.max_iterations.min(400) {
        iterations = k;
        let time_price = c2;
        let next1 = clearing_price(
            |l1| Ok(shadow_demand(market, l1, time_price)?.total_energy()),
            market.energy_budget,
            c1,
        )?;
        let next2 = clearing_price(
            |l2| Ok(shadow_demand(market, next1, l2)?.total_time()),
            market.time_budget,
            c2,
        )?;
        residual = ((next1 - c1).abs() / c1).max((next2 - c2).abs() / c2);
        c1 = next1;
        c2 = next2;
        if residual <= 1e-9 {
            converged = true;
            break;
        }
    }
    let prices = Prices { energy: c1, time: c2 };
    let equilibrium = variational_equilibrium(market, prices, config)?;
    let revenue = leader_revenue(prices, &equilibrium.demand);
    let report = if converged {
        SolverReport::converged(iterations, residual)
    } else {
        SolverReport::exhausted(iterations, residual)
    };
    Ok(PriceSolution { prices, equilibrium, revenue, report })
}

/// Every resource split evenly across users.
pub fn equal_share(market: &EnergyMarket) -> Demand {
    let n = market.n_users() as f64;
    Demand {
        energies: vec![market.energy_budget / n; market.n_users()],
        times: vec![market.time_budget / n; market.n_users()],
    }
}

/// All supply handed to the user with the strongest channel.
pub fn best_user_takes_all(market: &EnergyMarket) -> Demand {
    let best = market
        .gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut energies = vec![0.0; market.n_users()];
    let mut times = vec![0.0; market.n_users()];
    energies[best] = market.energy_budget;
    times[best] = market.time_budget;
    Demand { energies, times }
}
