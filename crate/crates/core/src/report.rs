/// Convergence diagnostics attached to iterative solver outputs.
#[derive(Debug, Clone, Default)]
pub struct SolverReport {
    /// Outer iterations actually performed.
    pub iterations: usize,
    /// Final residual in the solver's own convergence measure.
    pub residual: f64,
    /// Whether the tolerance was met within the iteration budget.
    pub converged: bool,
    /// Free-form events worth surfacing (step halvings, fallbacks, ...).
    pub notes: Vec<String>,
}

impl SolverReport {
    pub fn converged(iterations: usize, residual: f64) -> Self {
        SolverReport { iterations, residual, converged: true, notes: Vec::new() }
    }

    pub fn exhausted(iterations: usize, residual: f64) -> Self {
        SolverReport { iterations, residual, converged: false, notes: Vec::new() }
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }
}
