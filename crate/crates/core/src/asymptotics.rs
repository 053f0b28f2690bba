//! Limit theory around a fixed point: local problem characteristics,
//! information lower bounds for estimating the signal CDF and density,
//! scale constants of the least squares limit distribution, the
//! least-favorable local perturbation family realizing the bounds, Hellinger
//! distance between convolved models, and an empirical convergence-rate
//! study for the least squares estimator.

use crate::kernels::NoiseKernel;
use crate::lse::fit_lse;
use crate::mixture::{draw_sample, kernel_breakpoints, ConcaveCdf};
use crate::numeric::{bisect, integrate, ls_slope, median, mix_seed};
use crate::{Error, Result};
use std::f64::consts::E;

/// Characteristics of the estimation problem at one interior point of the
/// signal support.
#[derive(Debug, Clone, Copy)]
pub struct LocalQuantities {
    pub x0: f64,
    /// signal density at x0
    pub f0: f64,
    /// its derivative (nonpositive for a concave CDF)
    pub f0_prime: f64,
    /// convolved density at x0
    pub g0: f64,
}

impl LocalQuantities {
    pub fn evaluate(truth: &ConcaveCdf, kernel: &NoiseKernel, x0: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0 < truth.right_endpoint()) {
            return Err(Error::Invalid(format!(
                "local quantities need 0 < x0 < {}, got {x0}",
                truth.right_endpoint()
            )));
        }
        Ok(LocalQuantities {
            x0,
            f0: truth.density(x0),
            f0_prime: truth.density_derivative(x0),
            g0: truth.convolved_density(kernel, x0)?,
        })
    }

    /// Curvature of the integrated survival, `-f0'(x0)`.
    pub fn survival_curvature(&self) -> f64 {
        -self.f0_prime
    }
}

/// Asymptotic local minimax lower bound for estimating `F(x0)`: no estimator
/// beats this constant times `n^{-2/5}` uniformly near the given model.
pub fn minimax_bound_cdf(local: &LocalQuantities, kernel: &NoiseKernel) -> f64 {
    let k0 = kernel.k0();
    0.125
        * (local.f0_prime.abs() * local.g0 * local.g0 / (100.0 * E * E * k0.powi(4))).powf(0.2)
}

/// Asymptotic local minimax lower bound for estimating `f(x0)`: no estimator
/// beats this constant times `n^{-1/5}` uniformly near the given model.
pub fn minimax_bound_density(local: &LocalQuantities, kernel: &NoiseKernel) -> f64 {
    let k0 = kernel.k0();
    0.25 * (local.f0_prime.abs().powi(3) * local.g0.abs() / (4.0 * E * k0 * k0)).powf(0.2)
}

/// Scale constants of the least squares limit law: `n^{2/5}·value_scale·
/// (s̃(x0) - s0(x0))` and `n^{1/5}·derivative_scale·(s̃'(x0) - s0'(x0))`
/// converge jointly to a universal (model-free) limit.
#[derive(Debug, Clone, Copy)]
pub struct LseLimitConstants {
    pub value_scale: f64,
    pub derivative_scale: f64,
}

pub fn lse_limit_constants(
    local: &LocalQuantities,
    kernel: &NoiseKernel,
) -> Result<LseLimitConstants> {
    let curv = local.survival_curvature();
    if !(curv > 0.0) {
        return Err(Error::Invalid(format!(
            "limit constants need a strictly decreasing density at x0 (curvature {curv})"
        )));
    }
    let k0 = kernel.k0();
    Ok(LseLimitConstants {
        value_scale: (24.0 * k0.powi(4) / (local.g0 * local.g0 * curv)).powf(0.2),
        derivative_scale: (24.0 / curv).powf(0.6) * (k0 * k0 / local.g0).powf(0.2),
    })
}

/// Least-favorable local perturbation of `truth` at `x0` with size `eps`:
/// the density is flattened to two constant pieces over a window
/// `[x0 - reach·eps, x0 + eps]`, with `reach` solved so the CDF stays
/// continuous (it tends to 3 as eps shrinks). The perturbed CDF moves the
/// value at x0 by `O(eps²)` and the density by `O(eps)` while staying
/// concave, yet its convolved model is only `O(eps^{5/2})` away in Hellinger
/// distance — which is what forces the `n^{-2/5}` and `n^{-1/5}` rates.
pub fn perturb(truth: &ConcaveCdf, x0: f64, eps: f64) -> Result<ConcaveCdf> {
    if !(eps > 0.0 && eps.is_finite() && x0.is_finite()) {
        return Err(Error::Invalid(format!("perturb needs finite x0 and eps > 0, got {x0}, {eps}")));
    }
    if x0 - 10.0 * eps <= 0.0 {
        return Err(Error::PerturbationInfeasible {
            x0,
            eps,
            reason: "the flattening window would cross the origin before the slopes match".into(),
        });
    }
    if x0 + eps >= truth.right_endpoint() {
        return Err(Error::PerturbationInfeasible {
            x0,
            eps,
            reason: "x0 + eps reaches the end of the signal support".into(),
        });
    }
    // continuity defect at the interior joint x0 - eps, as a function of the
    // left reach c: increasing in c, negative at c = 1 when the density
    // strictly decreases through the window
    let residual = |c: f64| {
        truth.cdf(x0 - c * eps) + (c - 1.0) * eps * truth.density(x0 - c * eps)
            - truth.cdf(x0 + eps)
            + 2.0 * eps * truth.density(x0 + eps)
    };
    let reach = bisect(residual, 1.0, 10.0, 1e-10).map_err(|_| Error::PerturbationInfeasible {
        x0,
        eps,
        reason: "no continuity-matching left reach in [1, 10]".into(),
    })?;
    Ok(ConcaveCdf::Perturbed { base: Box::new(truth.clone()), x0, eps, reach })
}

/// Squared Hellinger distance `½∫(√g_a - √g_b)²` between the convolved
/// densities of two signal CDFs under a common noise kernel.
pub fn hellinger_squared(
    a: &ConcaveCdf,
    b: &ConcaveCdf,
    kernel: &NoiseKernel,
    tol: f64,
) -> Result<f64> {
    let mut edges = vec![0.0];
    let mut kinks = kernel_breakpoints(kernel);
    kinks.push(0.0);
    if let Some(se) = kernel.support_end() {
        kinks.push(se);
    }
    for bx in a.density_breakpoints().into_iter().chain(b.density_breakpoints()) {
        for &kb in &kinks {
            edges.push(bx + kb);
        }
    }
    let reach = a.right_endpoint().max(b.right_endpoint());
    let upper = match kernel.support_end() {
        Some(se) => reach + se,
        None => {
            for pad in [1.0, 3.0, 8.0, 20.0, 40.0] {
                edges.push(reach + pad);
            }
            reach + 40.0
        }
    };
    edges.push(upper);
    edges.retain(|e| e.is_finite() && *e >= 0.0 && *e <= upper);
    edges.sort_by(|x, y| x.total_cmp(y));
    edges.dedup();
    integrate(
        |z| {
            let ga = a.convolved_density(kernel, z).unwrap_or(f64::NAN).max(0.0);
            let gb = b.convolved_density(kernel, z).unwrap_or(f64::NAN).max(0.0);
            let d = ga.sqrt() - gb.sqrt();
            0.5 * d * d
        },
        &edges,
        tol,
    )
}

/// Squared Hellinger distance between a perturbed model and its base,
/// computed through the convolved perturbation correction so the `O(eps²)`
/// difference never suffers cancellation against the O(1) densities.
pub fn perturbation_hellinger_squared(
    perturbed: &ConcaveCdf,
    kernel: &NoiseKernel,
    tol: f64,
) -> Result<f64> {
    let ConcaveCdf::Perturbed { base, x0, eps, reach } = perturbed else {
        return Err(Error::Invalid(
            "perturbation Hellinger distance needs a perturbed model".into(),
        ));
    };
    let window = [x0 - reach * eps, x0 - eps, x0 + eps];
    let mut edges: Vec<f64> = Vec::new();
    let mut kinks = kernel_breakpoints(kernel);
    kinks.push(0.0);
    if let Some(se) = kernel.support_end() {
        kinks.push(se);
    }
    for &w in &window {
        for &kb in &kinks {
            edges.push(w + kb);
        }
    }
    let upper = match kernel.support_end() {
        Some(se) => window[2] + se,
        None => {
            for pad in [1.0, 3.0, 8.0, 20.0, 40.0, 80.0] {
                edges.push(window[2] + pad);
            }
            window[2] + 80.0
        }
    };
    edges.push(upper);
    edges.retain(|e| *e >= window[0] && *e <= upper);
    edges.sort_by(|x, y| x.total_cmp(y));
    edges.dedup();
    integrate(
        |z| {
            let g0 = base.convolved_density(kernel, z).unwrap_or(f64::NAN).max(0.0);
            let d = perturbed.perturbation_convolution_correction(kernel, z).unwrap_or(f64::NAN);
            let ge = (g0 + d).max(0.0);
            let denom = ge.sqrt() + g0.sqrt();
            if denom == 0.0 {
                0.0
            } else {
                0.5 * (d / denom) * (d / denom)
            }
        },
        &edges,
        tol,
    )
}

/// Empirical convergence-rate study for the least squares estimator at a
/// fixed point.
#[derive(Debug, Clone)]
pub struct RateStudyConfig {
    pub truth: ConcaveCdf,
    pub kernel: NoiseKernel,
    pub x0: f64,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub base_seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

/// Median absolute errors per sample size and the fitted log-log slopes;
/// the survival value error should shrink like `n^{-2/5}` and the
/// derivative error like `n^{-1/5}`.
#[derive(Debug, Clone)]
pub struct RateStudyResult {
    pub sizes: Vec<usize>,
    pub value_errors: Vec<f64>,
    pub derivative_errors: Vec<f64>,
    /// replications per size that failed to converge (excluded from medians)
    pub failures: Vec<usize>,
    pub replications: usize,
    pub value_slope: f64,
    pub derivative_slope: f64,
}

pub fn rate_study(cfg: &RateStudyConfig) -> Result<RateStudyResult> {
    if cfg.sizes.len() < 2 {
        return Err(Error::Invalid("rate study needs at least two sample sizes".into()));
    }
    if cfg.replications == 0 {
        return Err(Error::Invalid("rate study needs at least one replication".into()));
    }
    if cfg.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("rate study sizes must be strictly increasing".into()));
    }
    if !(cfg.x0 > 0.0 && cfg.x0 < cfg.truth.right_endpoint()) {
        return Err(Error::Invalid(format!(
            "rate study point {} is outside the signal support",
            cfg.x0
        )));
    }
    let s0 = cfg.truth.survival(cfg.x0);
    let d0 = -cfg.truth.density(cfg.x0);
    let mut value_errors = Vec::with_capacity(cfg.sizes.len());
    let mut derivative_errors = Vec::with_capacity(cfg.sizes.len());
    let mut failures = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let mut verr = Vec::with_capacity(cfg.replications);
        let mut derr = Vec::with_capacity(cfg.replications);
        let mut failed = 0usize;
        for rep in 0..cfg.replications {
            let seed = mix_seed(&[cfg.base_seed, n as u64, rep as u64]);
            let sample = draw_sample(&cfg.truth, &cfg.kernel, n, seed)?;
            // a replication that fails to converge is recorded, not fatal
            match fit_lse(&sample, &cfg.kernel, cfg.tol, cfg.max_iter) {
                Ok(fit) if fit.converged => {
                    verr.push((fit.estimate.survival(cfg.x0) - s0).abs());
                    derr.push((-fit.estimate.density(cfg.x0) - d0).abs());
                }
                _ => failed += 1,
            }
        }
        if failed * 10 > cfg.replications {
            return Err(Error::NotConverged {
                iterations: failed,
                gap: failed as f64 / cfg.replications as f64,
            });
        }
        value_errors.push(median(&verr));
        derivative_errors.push(median(&derr));
        failures.push(failed);
    }
    let logn: Vec<f64> = cfg.sizes.iter().map(|&n| (n as f64).ln()).collect();
    let lv: Vec<f64> = value_errors.iter().map(|e| e.ln()).collect();
    let ld: Vec<f64> = derivative_errors.iter().map(|e| e.ln()).collect();
    Ok(RateStudyResult {
        sizes: cfg.sizes.clone(),
        value_errors,
        derivative_errors,
        failures,
        replications: cfg.replications,
        value_slope: ls_slope(&logn, &lv),
        derivative_slope: ls_slope(&logn, &ld),
    })
}
