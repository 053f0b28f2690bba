//! Nonparametric estimation of a concave distribution function on `[0, ∞)`
//! from observations corrupted by additive positive noise.
//!
//! The observation model is `Z = X + ε` where `X` has an unknown concave
//! distribution function `F` and the noise `ε` has a known density `k` that is
//! bounded and decreasing on `[0, ∞)`. The crate provides
//!
//! * the noise-kernel machinery, including the reciprocal kernel `p` solving
//!   the convolution identity `(p ∗ k)(t) = t` ([`kernels`]),
//! * concave mixture distributions and seeded sampling from the observation
//!   model ([`mixture`]),
//! * a maximum-likelihood fitter over concave distribution functions together
//!   with its optimality diagnostics ([`mle`]),
//! * a least-squares fitter for the survival function based on the
//!   noise-corrected empirical process ([`lse`]),
//! * local asymptotic quantities: minimax lower bounds, limit-law constants,
//!   local perturbation families, Hellinger distance and a Monte Carlo
//!   convergence-rate study ([`asymptotics`]).
//!
//! Both fitters restrict support to the observed points (which is no loss for
//! the optimum), and both report the exact first-order conditions that
//! characterize their solutions so a fit can be verified independently of the
//! optimizer that produced it.

pub mod asymptotics;
mod error;
pub mod kernels;
pub mod lse;
pub mod mixture;
pub mod mle;
pub mod numeric;

pub use asymptotics::{
    hellinger_squared, lse_limit_constants, minimax_bound_cdf, minimax_bound_density, perturb,
    perturbation_hellinger_squared, rate_study, LocalQuantities, LseLimitConstants,
    RateStudyConfig, RateStudyResult,
};
pub use error::{Error, Result};
pub use kernels::{solve_reciprocal, solve_reciprocal_numeric, NoiseKernel, ReciprocalKernel};
pub use lse::{
    fit_lse, fit_lse_from, lse_characterization, survival_inner_product, LseFit, UnProcess,
};
pub use mixture::{draw_sample, ConcaveCdf, Provenance, Sample};
pub use mle::{characterization_slack, fit_mle, log_likelihood, MleFit};
