use crate::{Error, Result};

/// Feasibility tolerance used by the simplex (pivots, reduced costs, phase-1
/// residual).
pub const LP_FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, sense: Sense::Le, rhs }
    }
    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, sense: Sense::Ge, rhs }
    }
    pub fn eq(coeffs: Vec<f64>, rhs: f64) -> Self {
        Constraint { coeffs, sense: Sense::Eq, rhs }
    }
}

/// `maximize objective . x` subject to row constraints and per-variable
/// bounds (`-inf`/`+inf` mark unbounded sides).
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point in the original variables; empty unless `Optimal`.
    pub x: Vec<f64>,
    /// Optimal objective value; NaN unless `Optimal`.
    pub objective: f64,
}

/// Dense two-phase primal simplex with Bland's anti-cycling rule.
///
/// Variables are shifted/split into nonnegative form, finite upper bounds
/// become rows, phase 1 drives artificials out, phase 2 maximizes. Returns
/// `Err` only for malformed input; infeasible/unbounded programs come back
/// as a status.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    let n = lp.objective.len();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(Error::invalid(format!(
            "bound vectors must match objective length {n} (got {}, {})",
            lp.lower.len(),
            lp.upper.len()
        )));
    }
    for (j, c) in lp.objective.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::NonFinite(format!("objective coefficient {j} is {c}")));
        }
    }
    for (j, (&lo, &hi)) in lp.lower.iter().zip(&lp.upper).enumerate() {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::NonFinite(format!("bounds of variable {j} contain NaN")));
        }
        if lo > hi {
            return Err(Error::invalid(format!("variable {j} has lower bound {lo} > upper bound {hi}")));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("variable {j} has an empty bound interval")));
        }
    }
    for (i, row) in lp.constraints.iter().enumerate() {
        if row.coeffs.len() != n {
            return Err(Error::invalid(format!(
                "constraint {i} has {} coefficients, expected {n}",
                row.coeffs.len()
            )));
        }
        if row.coeffs.iter().any(|a| !a.is_finite()) || !row.rhs.is_finite() {
            return Err(Error::NonFinite(format!("constraint {i} contains a non-finite value")));
        }
    }

    // --- Rewrite into: maximize c.y, A y (sense) b, y >= 0 ------------------
    // Column map: for each original variable either a single shifted column
    // (finite lower bound) or a split pair (free below).
    #[derive(Clone, Copy)]
    enum Col {
        Shifted { col: usize, shift: f64 },
        Split { pos: usize, neg: usize },
    }
    let mut cols: Vec<Col> = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        if lp.lower[j].is_finite() {
            cols.push(Col::Shifted { col: ncols, shift: lp.lower[j] });
            ncols += 1;
        } else {
            cols.push(Col::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    let expand = |row: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; ncols];
        for (j, &a) in row.iter().enumerate() {
            match cols[j] {
                Col::Shifted { col, .. } => out[col] += a,
                Col::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        out
    };
    let shift_of = |row: &[f64]| -> f64 {
        row.iter()
            .enumerate()
            .map(|(j, &a)| match cols[j] {
                Col::Shifted { shift, .. } => a * shift,
                Col::Split { .. } => 0.0,
            })
            .sum()
    };

    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for con in &lp.constraints {
        rows.push((expand(&con.coeffs), con.sense, con.rhs - shift_of(&con.coeffs)));
    }
    // Finite upper bounds become x_j <= u_j rows.
    for j in 0..n {
        if lp.upper[j].is_finite() {
            let mut unit = vec![0.0; n];
            unit[j] = 1.0;
            rows.push((expand(&unit), Sense::Le, lp.upper[j] - shift_of(&unit)));
        }
    }
    // Normalize to nonnegative right-hand sides.
    for (coeffs, sense, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            for a in coeffs.iter_mut() {
                *a = -*a;
            }
            *rhs = -*rhs;
            *sense = match *sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let m = rows.len();
    // Column layout: structural | slack/surplus | artificial | rhs.
    let mut n_slack = 0usize;
    let mut n_art = 0usize;
    for (_, sense, _) in &rows {
        match sense {
            Sense::Le => n_slack += 1,
            Sense::Ge => {
                n_slack += 1;
                n_art += 1;
            }
            Sense::Eq => n_art += 1,
        }
    }
    let total = ncols + n_slack + n_art;
    let mut tableau = vec![vec![0.0; total + 1]; m];
    let mut basis = vec![usize::MAX; m];
    let mut is_artificial = vec![false; total];
    let (mut slack_at, mut art_at) = (ncols, ncols + n_slack);
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        tableau[i][..ncols].copy_from_slice(coeffs);
        tableau[i][total] = *rhs;
        match sense {
            Sense::Le => {
                tableau[i][slack_at] = 1.0;
                basis[i] = slack_at;
                slack_at += 1;
            }
            Sense::Ge => {
                tableau[i][slack_at] = -1.0;
                slack_at += 1;
                tableau[i][art_at] = 1.0;
                is_artificial[art_at] = true;
                basis[i] = art_at;
                art_at += 1;
            }
            Sense::Eq => {
                tableau[i][art_at] = 1.0;
                is_artificial[art_at] = true;
                basis[i] = art_at;
                art_at += 1;
            }
        }
    }

    let pivot = |tab: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, c: usize| {
        let p = tab[r][c];
        for v in tab[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = tab[r].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != r && row[c] != 0.0 {
                let factor = row[c];
                for (t, s) in row.iter_mut().zip(pivot_row.iter()) {
                    *t -= factor * *s;
                }
            }
        }
        basis[r] = c;
    };

    // Reduced costs r_j = c_j - c_B . B^{-1} A_j for the current tableau.
    let reduced = |tab: &Vec<Vec<f64>>, basis: &[usize], costs: &[f64], j: usize| -> f64 {
        let mut r = costs[j];
        for (i, &b) in basis.iter().enumerate() {
            if costs[b] != 0.0 {
                r -= costs[b] * tab[i][j];
            }
        }
        r
    };

    let run_simplex = |tab: &mut Vec<Vec<f64>>,
                       basis: &mut Vec<usize>,
                       costs: &[f64],
                       allowed: &dyn Fn(usize) -> bool|
     -> Result<bool> {
        for _ in 0..50_000 {
            // Bland: entering = smallest-index improving column.
            let mut entering = None;
            for j in 0..total {
                if !allowed(j) || basis.contains(&j) {
                    continue;
                }
                if reduced(tab, basis, costs, j) > LP_FEASIBILITY_TOL {
                    entering = Some(j);
                    break;
                }
            }
            let Some(e) = entering else { return Ok(true) };
            // Ratio test; ties by smallest basis variable index (Bland).
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..tab.len() {
                let a = tab[i][e];
                if a > LP_FEASIBILITY_TOL {
                    let ratio = tab[i][total] / a;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else { return Ok(false) }; // unbounded direction
            pivot(tab, basis, r, e);
        }
        Err(Error::DidNotConverge { iterations: 50_000, residual: f64::NAN })
    };

    // --- Phase 1: drive artificials to zero ---------------------------------
    if n_art > 0 {
        let mut costs = vec![0.0; total];
        for (j, flag) in is_artificial.iter().enumerate() {
            if *flag {
                costs[j] = -1.0;
            }
        }
        run_simplex(&mut tableau, &mut basis, &costs, &|_| true)?;
        let art_sum: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| is_artificial[b])
            .map(|(i, _)| tableau[i][total])
            .sum();
        if art_sum > 1e-7 {
            return Ok(LpSolution { status: LpStatus::Infeasible, x: Vec::new(), objective: f64::NAN });
        }
        // Pivot out any artificial still basic (at value ~0); drop rows that
        // turn out to be redundant.
        let mut i = 0;
        while i < tableau.len() {
            if is_artificial[basis[i]] {
                let col = (0..ncols + n_slack).find(|&j| tableau[i][j].abs() > 1e-7);
                match col {
                    Some(c) => pivot(&mut tableau, &mut basis, i, c),
                    None => {
                        tableau.remove(i);
                        basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    // --- Phase 2: maximize the real objective -------------------------------
    let mut costs = vec![0.0; total];
    for j in 0..n {
        match cols[j] {
            Col::Shifted { col, .. } => costs[col] += lp.objective[j],
            Col::Split { pos, neg } => {
                costs[pos] += lp.objective[j];
                costs[neg] -= lp.objective[j];
            }
        }
    }
    let not_artificial = |j: usize| !is_artificial[j];
    let bounded = run_simplex(&mut tableau, &mut basis, &costs, &not_artificial)?;
    if !bounded {
        return Ok(LpSolution { status: LpStatus::Unbounded, x: Vec::new(), objective: f64::NAN });
    }

    let mut y = vec![0.0; total];
    for (i, &b) in basis.iter().enumerate() {
        y[b] = tableau[i][total];
    }
    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match cols[j] {
            Col::Shifted { col, shift } => shift + y[col],
            Col::Split { pos, neg } => y[pos] - y[neg],
        };
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { status: LpStatus::Optimal, x, objective })
}
