//! Shared numerical kernels: special functions, scalar root finding, a dense
//! two-phase simplex, a barrier method for smooth concave maximization, and
//! the diminishing-step schedule used by the dual-decomposition solvers.

mod concave;
mod roots;
mod simplex;
mod special;
mod subgradient;

pub use concave::{grid_argmax, maximize_concave, ConcaveConfig, ConcaveProblem, ConcaveSolution, ValueGrad};
pub use roots::{golden_section_max, solve_scalar_root, RootBracket};
pub use simplex::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Sense, LP_FEASIBILITY_TOL};
pub use special::{digamma, lambert_w0};
pub use subgradient::SubgradientConfig;

/// Natural log of 2; rates in bit units divide by this constantly.
pub const LN_2: f64 = std::f64::consts::LN_2;
