/// Error type shared by every solver in the crate.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A mathematical function was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketing root solver was handed endpoints with equal signs.
    #[error("no sign change on bracket [{lo}, {hi}]: f(lo)={f_lo:e}, f(hi)={f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// An iterative method exhausted its budget without meeting tolerance.
    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    DidNotConverge { iterations: usize, residual: f64 },

    /// A constraint system admits no solution.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A non-finite value (NaN/inf) appeared where a finite one is required.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
