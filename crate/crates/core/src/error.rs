//! Error types shared across the drivers and models.

use thiserror::Error;

/// Errors raised by model evaluations (E-step, M-step, likelihood).
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// Every latent-state density underflowed for one observation.
    #[error("degenerate observation {index}: all component densities underflow")]
    DegenerateObservation { index: usize },

    /// A mixture component lost all responsibility mass.
    #[error("component {component} is empty (weight {mass:.3e})")]
    EmptyComponent { component: usize, mass: f64 },

    /// The Poisson component of a ZIP model received zero weight.
    #[error("lambda update undefined: total Poisson-component weight is zero")]
    LambdaUndefined,

    /// A covariance matrix is numerically singular or not positive definite.
    #[error("covariance of component {component} is not positive definite")]
    SingularCovariance { component: usize },

    /// An inner solver (fixed point, bisection, Newton) did not converge.
    #[error("{what} failed to converge after {iterations} iterations (last iterate {last:.6e})")]
    SolverFailure {
        what: &'static str,
        iterations: usize,
        last: f64,
    },

    /// A parameter point violates the model's validity requirements.
    #[error("invalid parameters: {reason}")]
    InvalidParams { reason: String },
}

/// Errors raised by the generic drivers and acceptance machinery.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error(transparent)]
    Model(#[from] ModelError),

    /// A barrier evaluated to -inf: the point is on or past the boundary.
    #[error("infeasible parameter point: barrier is -inf")]
    Infeasible,

    /// The initial point handed to a driver is not usable.
    #[error("infeasible initial parameters: {reason}")]
    InfeasibleInit { reason: String },

    /// Standard posterior has no support where the annealed weight is positive.
    #[error("numerical support lost at row {row}, latent state {state}")]
    NumericalSupport { row: usize, state: usize },

    /// The KL lower bound came out negative, which indicates an upstream bug.
    #[error("invalid KL lower bound {value:.3e} (must be >= 0)")]
    InvalidBound { value: f64 },

    /// Division by a zero barrier-gradient norm in the generic xi rule.
    #[error("barrier gradient norm is zero; use a model-specific rule or a configured fallback")]
    ZeroBarrierGradient,

    /// Schedule or model configuration violates a documented bound.
    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },
}
