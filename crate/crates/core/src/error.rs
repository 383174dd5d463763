use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the routine.
    #[error("domain error: {0}")]
    Domain(String),
    /// The adaptive integrator could not advance.
    #[error("integration failed near x = {x}: {reason}")]
    Integration { x: f64, reason: String },
    /// An input does not have the shape or coverage a routine requires.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// The requested route is undefined at these parameters.
    #[error("degenerate case: {0}")]
    Degenerate(String),
    /// An iterative method ran out of budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },
    /// A least-squares system is too ill-conditioned to trust.
    #[error("ill-conditioned system (condition number {cond:e}): {hint}")]
    Conditioning { cond: f64, hint: String },
    /// Neither of Ω ± ν is an integer, so the sign choice is ambiguous.
    #[error("integrality check failed: dist(Ω+ν, ℤ) = {plus:e}, dist(Ω−ν, ℤ) = {minus:e}")]
    Integrality { plus: f64, minus: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
