use crate::{Error, Result};

/// Step schedule and budget for the dual subgradient loops.
///
/// The schedule `step(k) = step_scale / sqrt(k)` satisfies the diminishing
/// step-size rules (square-summable over constant, infinite travel), which is
/// what guarantees convergence of the dual iterations.
#[derive(Debug, Clone)]
pub struct SubgradientConfig {
    pub step_scale: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SubgradientConfig {
    fn default() -> Self {
        SubgradientConfig { step_scale: 0.1, max_iterations: 4000, tolerance: 1e-9 }
    }
}

impl SubgradientConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_scale > 0.0) {
            return Err(Error::invalid(format!("step scale must be positive, got {}", self.step_scale)));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("iteration budget must be positive".to_string()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }

    /// Diminishing step for 1-based iteration index `k`.
    pub fn step(&self, k: usize) -> f64 {
        debug_assert!(k >= 1, "subgradient steps are 1-indexed");
        self.step_scale / (k as f64).sqrt()
    }
}
