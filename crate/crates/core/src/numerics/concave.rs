use crate::{Error, Result, SolverReport};

/// Differentiable scalar field: returns `(value, gradient)` at a point.
pub type ValueGrad<'a> = Box<dyn Fn(&[f64]) -> (f64, Vec<f64>) + 'a>;

/// A smooth concave maximization problem over a finite box with convex
/// inequality constraints `g_i(x) <= 0`.
pub struct ConcaveProblem<'a> {
    pub objective: ValueGrad<'a>,
    pub constraints: Vec<ValueGrad<'a>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Optional start; must be interior to the box. Solvers that know a
    /// strictly feasible point should pass it.
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ConcaveConfig {
    /// Target on the projected KKT residual.
    pub tolerance: f64,
    /// Budget of inner Newton steps across all barrier stages.
    pub max_iterations: usize,
}

impl Default for ConcaveConfig {
    fn default() -> Self {
        ConcaveConfig { tolerance: 1e-6, max_iterations: 800 }
    }
}

#[derive(Debug, Clone)]
pub struct ConcaveSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Projected first-order stationarity residual at `x`.
    pub stationarity: f64,
    pub report: SolverReport,
}

/// Maximize a concave objective with a log-barrier interior-point method.
///
/// Newton directions use a finite-difference Hessian of the barrier
/// gradient, so callers only supply first derivatives. The returned point is
/// strictly feasible; non-convergence is reported in the solution's report
/// rather than as an error.
pub fn maximize_concave(problem: &ConcaveProblem, config: &ConcaveConfig) -> Result<ConcaveSolution> {
    let n = problem.lower.len();
    if problem.upper.len() != n || n == 0 {
        return Err(Error::invalid("box bounds must be non-empty and equal length".to_string()));
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {}", config.tolerance)));
    }
    for j in 0..n {
        if !problem.lower[j].is_finite() || !problem.upper[j].is_finite() {
            return Err(Error::invalid(format!("box bounds of variable {j} must be finite")));
        }
        if problem.lower[j] >= problem.upper[j] {
            return Err(Error::invalid(format!(
                "variable {j} has empty interior: [{}, {}]",
                problem.lower[j], problem.upper[j]
            )));
        }
    }

    let mut report = SolverReport::default();
    let mut x = starting_point(problem, n)?;
    if !strictly_feasible(problem, &x) {
        x = match restore_feasibility(problem, x) {
            Some(x) => x,
            None => {
                return Err(Error::Infeasible(
                    "no strictly feasible starting point found".to_string(),
                ))
            }
        };
        report.note("phase-1 search recovered a strictly feasible start");
    }

    let m = (problem.constraints.len() + 2 * n) as f64;
    let mut t = 1.0;
    let mut spent = 0usize;
    let gap_goal = |fval: f64| 1e-9_f64.max(1e-9 * fval.abs());
    loop {
        spent += newton_stage(
            problem,
            &mut x,
            t,
            config.tolerance,
            config.max_iterations.saturating_sub(spent),
        );
        let (fval, _) = (problem.objective)(&x);
        if m / t <= gap_goal(fval) || spent >= config.max_iterations {
            break;
        }
        t *= 10.0;
    }

    let (value, grad) = (problem.objective)(&x);
    let stationarity = kkt_residual(problem, &x, &grad, t);
    report.iterations = spent;
    report.residual = stationarity;
    report.converged = stationarity <= config.tolerance && spent < config.max_iterations;
    if !report.converged {
        report.note(format!(
            "stopped with stationarity {stationarity:e} after {spent} Newton steps"
        ));
    }
    Ok(ConcaveSolution { x, value, stationarity, report })
}

fn starting_point(problem: &ConcaveProblem, n: usize) -> Result<Vec<f64>> {
    let x = match &problem.initial {
        Some(x0) => {
            if x0.len() != n {
                return Err(Error::invalid(format!(
                    "initial point has dimension {}, expected {n}",
                    x0.len()
                )));
            }
            let mut x = x0.clone();
            for j in 0..n {
                let span = problem.upper[j] - problem.lower[j];
                let margin = (1e-9 * span).min(1e-6).max(1e-12);
                x[j] = x[j].clamp(problem.lower[j] + margin, problem.upper[j] - margin);
            }
            x
        }
        None => (0..n).map(|j| 0.5 * (problem.lower[j] + problem.upper[j])).collect(),
    };
    Ok(x)
}

fn strictly_feasible(problem: &ConcaveProblem, x: &[f64]) -> bool {
    problem.constraints.iter().all(|g| {
        let (v, _) = g(x);
        v.is_finite() && v < 0.0
    })
}

/// Subgradient descent on `max_i g_i(x)` within the box; convex, so this
/// reaches a strictly feasible point whenever one exists (given budget).
fn restore_feasibility(problem: &ConcaveProblem, mut x: Vec<f64>) -> Option<Vec<f64>> {
    let n = x.len();
    let spans: Vec<f64> = (0..n).map(|j| problem.upper[j] - problem.lower[j]).collect();
    for k in 1..=800usize {
        let mut worst = f64::NEG_INFINITY;
        let mut grad = vec![0.0; n];
        for g in &problem.constraints {
            let (v, gr) = g(&x);
            if !v.is_finite() {
                return None;
            }
            if v > worst {
                worst = v;
                grad = gr;
            }
        }
        if worst < 0.0 {
            return Some(x);
        }
        let norm = grad.iter().map(|d| d * d).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return None;
        }
        let step = 0.2 / (k as f64).sqrt();
        for j in 0..n {
            let margin = (1e-9 * spans[j]).min(1e-6).max(1e-12);
            x[j] = (x[j] - step * spans[j] * grad[j] / norm)
                .clamp(problem.lower[j] + margin, problem.upper[j] - margin);
        }
    }
    None
}

/// Barrier objective (minimized): `-t f(x) - sum ln(-g_i) - sum ln(box)`.
fn barrier(problem: &ConcaveProblem, x: &[f64], t: f64) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let (f, fg) = (problem.objective)(x);
    if !f.is_finite() {
        return None;
    }
    let mut val = -t * f;
    let mut grad: Vec<f64> = fg.iter().map(|d| -t * d).collect();
    for g in &problem.constraints {
        let (v, gr) = g(x);
        if !(v < 0.0) || !v.is_finite() {
            return None;
        }
        val -= (-v).ln();
        for j in 0..n {
            grad[j] += gr[j] / (-v);
        }
    }
    for j in 0..n {
        let dl = x[j] - problem.lower[j];
        let du = problem.upper[j] - x[j];
        if dl <= 0.0 || du <= 0.0 {
            return None;
        }
        val -= dl.ln() + du.ln();
        grad[j] += -1.0 / dl + 1.0 / du;
    }
    Some((val, grad))
}

/// One barrier stage: damped Newton with a finite-difference Hessian.
/// Returns the number of Newton steps consumed. The stage stops once the
/// barrier gradient is small enough that the dual residual `|grad| / t` sits
/// safely below `tol` — a value-based stop would drown in rounding noise at
/// large `t`, where the barrier value scales like `t |f|`.
fn newton_stage(problem: &ConcaveProblem, x: &mut Vec<f64>, t: f64, tol: f64, budget: usize) -> usize {
    let n = x.len();
    let mut steps = 0usize;
    while steps < budget.min(60) {
        let Some((val, grad)) = barrier(problem, x, t) else { return steps };
        let gnorm = grad.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if gnorm <= 0.25 * tol * t {
            return steps;
        }
        // Finite-difference Hessian of the barrier gradient.
        let mut h = vec![vec![0.0; n]; n];
        for j in 0..n {
            let dl = x[j] - problem.lower[j];
            let du = problem.upper[j] - x[j];
            let mut hj = (1e-6 * (1.0 + x[j].abs())).min(0.4 * dl).min(0.4 * du);
            let mut col: Option<(Vec<f64>, Vec<f64>)> = None;
            for _ in 0..6 {
                let mut xp = x.clone();
                xp[j] += hj;
                let mut xm = x.clone();
                xm[j] -= hj;
                match (barrier(problem, &xp, t), barrier(problem, &xm, t)) {
                    (Some((_, gp)), Some((_, gm))) => {
                        col = Some((gp, gm));
                        break;
                    }
                    _ => hj *= 0.1,
                }
            }
            let Some((gp, gm)) = col else { return steps };
            for i in 0..n {
                h[i][j] = (gp[i] - gm[i]) / (2.0 * hj);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (h[i][j] + h[j][i]);
                h[i][j] = avg;
                h[j][i] = avg;
            }
        }
        // Solve (H + nu I) d = -grad with escalating regularization.
        let scale = (0..n).map(|i| h[i][i].abs()).fold(0.0f64, f64::max).max(1.0);
        let mut nu = 0.0;
        let mut dir: Option<Vec<f64>> = None;
        for _ in 0..40 {
            let mut hreg = h.clone();
            for i in 0..n {
                hreg[i][i] += nu;
            }
            if let Some(d) = cholesky_solve(&hreg, &grad.iter().map(|g| -g).collect::<Vec<_>>()) {
                let descent: f64 = d.iter().zip(&grad).map(|(di, gi)| di * gi).sum();
                if descent < 0.0 {
                    dir = Some(d);
                    break;
                }
            }
            nu = if nu == 0.0 { 1e-10 * scale } else { nu * 10.0 };
        }
        let Some(d) = dir else { return steps };
        let slope: f64 = d.iter().zip(&grad).map(|(di, gi)| di * gi).sum();
        // Backtracking line search keeping strict feasibility. Near a stage
        // optimum the Armijo decrease falls below the rounding noise of the
        // barrier value, so a step that shrinks the gradient norm is also
        // accepted.
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + alpha * di).collect();
            if let Some((vn, gn)) = barrier(problem, &xn, t) {
                let gn_norm = gn.iter().fold(0.0f64, |a, g| a.max(g.abs()));
                if vn <= val + 0.25 * alpha * slope || gn_norm <= 0.9 * gnorm {
                    *x = xn;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        steps += 1;
        if !accepted {
            return steps;
        }
    }
    steps
}

/// KKT residual with barrier multiplier estimates, projected onto the box
/// (components blocked by an active bound do not count).
fn kkt_residual(problem: &ConcaveProblem, x: &[f64], obj_grad: &[f64], t: f64) -> f64 {
    let n = x.len();
    let mut r = obj_grad.to_vec();
    for g in &problem.constraints {
        let (v, gr) = g(x);
        if v < 0.0 {
            let lambda = 1.0 / (t * (-v));
            for j in 0..n {
                r[j] -= lambda * gr[j];
            }
        }
    }
    let mut worst = 0.0f64;
    for j in 0..n {
        let span = problem.upper[j] - problem.lower[j];
        let near = 1e-7 * span;
        let blocked_up = problem.upper[j] - x[j] <= near && r[j] > 0.0;
        let blocked_down = x[j] - problem.lower[j] <= near && r[j] < 0.0;
        if !(blocked_up || blocked_down) {
            worst = worst.max(r[j].abs());
        }
    }
    worst
}

fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Forward and back substitution.
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

/// Argmax of `f` over an inclusive uniform grid; ties resolve toward the
/// smallest abscissa. Errors if `f` is non-finite anywhere on the grid.
pub fn grid_argmax<F>(mut f: F, lo: f64, hi: f64, points: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::invalid(format!("grid requires finite lo < hi, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(Error::invalid(format!("grid needs at least 2 points, got {points}")));
    }
    let mut best_x = lo;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..points {
        let x = lo + (hi - lo) * (i as f64) / ((points - 1) as f64);
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("grid objective non-finite at {x}")));
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    Ok((best_x, best_v))
}
