//! Error type shared across the crate.

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building states or running solvers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Model parameters outside their admissible range.
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    /// An interval [l, r] with l >= r or non-finite endpoints.
    #[error("invalid interval: left endpoint {l} must lie strictly below right endpoint {r}")]
    InvalidInterval { l: f64, r: f64 },

    /// A density vector that is empty, negative somewhere, or non-finite.
    #[error("invalid density: {0}")]
    InvalidDensity(String),

    /// Interior mass too far from 1 to be repaired by normalization.
    #[error("interior mass {mass} is too far from 1")]
    MassInvariant { mass: f64 },

    /// Quantile inversion hit a cell with zero mass.
    #[error("cell {index} carries no mass; quantile inversion needs a strictly positive density")]
    ZeroCell { index: usize },

    /// Quantile nodes must be strictly increasing.
    #[error("quantile nodes not strictly increasing at index {index}")]
    NonMonotoneQuantiles { index: usize },

    /// Transport between states with different atom weights is undefined.
    #[error("boundary atom weights differ: {b0} vs {b1}")]
    BetaMismatch { b0: f64, b1: f64 },

    /// An operation that needs a regular target state received an
    /// irregular one (support gap or density outside [1/n, n]).
    #[error("state is not regular: {0}")]
    NotRegular(String),

    /// The damped Newton loop ran out of iterations.
    #[error("inner solve did not converge: gradient norm {grad_norm:.3e} after {iters} iterations")]
    NoConvergence { iters: usize, grad_norm: f64 },

    /// The fluid domain shrank below resolvable width.
    #[error("domain collapsed at t = {t}: [{l}, {r}]")]
    DomainCollapse { t: f64, l: f64, r: f64 },

    /// A time integrator lost or gained interior mass.
    #[error("interior mass drifted to {mass} at t = {t}")]
    MassDrift { t: f64, mass: f64 },

    /// Run configuration could not be parsed or validated.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
