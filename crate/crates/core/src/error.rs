use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: n = {n}, sigma = {sigma} (need n >= 1 and 0 < sigma < n/2)")]
    InvalidParams { n: u32, sigma: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not reach tolerance: estimate {value:e}, error bound {error:e}")]
    Accuracy { value: f64, error: f64 },

    #[error("profile is identically zero")]
    ZeroProfile,

    #[error("iterate collapsed (mass below 1e-300)")]
    Collapse,

    #[error("damping stalled after {iterations} iterations (step change {step:e})")]
    Stall {
        iterations: usize,
        step: f64,
        best: Box<crate::solver::FowlerSolution>,
    },

    #[error("no convergence after {iterations} iterations (step change {step:e})")]
    NonConvergence {
        iterations: usize,
        step: f64,
        best: Box<crate::solver::FowlerSolution>,
    },

    #[error("no constant-to-nonconstant transition in the scanned range")]
    BracketNotFound,

    #[error("Monte Carlo budget exhausted: relative standard error {achieved:e} above requested {requested:e}")]
    SampleBudget { achieved: f64, requested: f64 },
}

impl Error {
    /// The last iterate of a solve that failed to converge, when available.
    pub fn partial_solution(&self) -> Option<&crate::solver::FowlerSolution> {
        match self {
            Error::Stall { best, .. } | Error::NonConvergence { best, .. } => Some(best),
            _ => None,
        }
    }
}
