use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input failed a structural precondition (empty sample, bad weights, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A numeric solve of the reciprocal-kernel equation was requested for a
    /// kernel that does not carry the derivative kernel κ = -k′.
    #[error("kernel `{kernel}` has no κ table; the reciprocal kernel cannot be solved numerically")]
    MissingKappa { kernel: String },

    /// The reciprocal-kernel march produced non-finite or runaway values.
    #[error("reciprocal solve diverged at t = {t}: |ℓ| = {magnitude:e}")]
    DivergentSolve { t: f64, magnitude: f64 },

    /// A tabulated reciprocal kernel was evaluated beyond the horizon it was
    /// solved on. Tables are never extrapolated.
    #[error("reciprocal kernel evaluated at t = {t} beyond its horizon {horizon}")]
    OutOfHorizon { t: f64, horizon: f64 },

    /// A candidate estimate assigns zero convolved density to an observation,
    /// which would drive the log-likelihood to -∞.
    #[error("estimate has zero convolved density at observation z = {z}")]
    ZeroDensity { z: f64 },

    /// An iterative fit exhausted its iteration budget before meeting its
    /// convergence tolerance.
    #[error("no convergence after {iterations} iterations (criterion gap {gap:e})")]
    NotConverged { iterations: usize, gap: f64 },

    /// A local perturbation of a concave distribution could not be built at
    /// the requested location and size.
    #[error("perturbation infeasible at x0 = {x0}, eps = {eps}: {reason}")]
    PerturbationInfeasible { x0: f64, eps: f64, reason: String },

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature failed on [{lo}, {hi}]: {reason}")]
    QuadratureFailure { lo: f64, hi: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
