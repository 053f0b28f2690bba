//! Maximum likelihood estimation of a concave distribution function from
//! noisy observations.
//!
//! The estimator maximizes the average log convolved density
//! `(1/n) Σ log g_F(Zᵢ)` over all concave CDFs `F`. The maximizer can be
//! taken to be a mixture of uniform components supported on the observed
//! points, so the search space is the simplex of weights over candidates
//! `θ ∈ {Z₁, …, Zₙ}`. The fit is characterized by its first-order
//! conditions: with `ĝ` the fitted convolved density,
//!
//! ```text
//! (1/n) Σᵢ g_θ(Zᵢ)/ĝ(Zᵢ) ≤ 1  for every θ > 0,  with equality on the support,
//! ```
//!
//! and that slack table is returned with the fit so optimality can be checked
//! independently.
//!
//! The optimizer iterates a quadratic local model of the objective (extended
//! to the cone of subprobability mixtures, which makes the model separable):
//! each outer step solves the model by support reduction — repeatedly add the
//! candidate with the steepest normalized descent direction, solve the
//! unconstrained weight system on the active support, and walk back toward
//! the last feasible weights dropping the first coordinate to hit zero — and
//! the outer update damps the step until the objective improves.

use crate::kernels::NoiseKernel;
use crate::mixture::{ConcaveCdf, Sample};
use crate::numeric::solve_linear;
use crate::{Error, Result};

/// Result of [`fit_mle`].
#[derive(Debug, Clone)]
pub struct MleFit {
    /// Fitted mixture CDF; support is a subset of the observed values.
    pub estimate: ConcaveCdf,
    /// `(1/n) Σ log ĝ(Zᵢ)` at the fit.
    pub loglik: f64,
    /// `(θ, (1/n) Σᵢ g_θ(Zᵢ)/ĝ(Zᵢ))` for each distinct observed θ.
    pub slack: Vec<(f64, f64)>,
    /// Outer iterations used.
    pub iterations: usize,
    /// Whether the characterization was met at the requested tolerance.
    pub converged: bool,
}

/// Average log-likelihood `(1/n) Σ log g_F(Zᵢ)` of `cdf` for `sample`.
pub fn log_likelihood(cdf: &ConcaveCdf, sample: &Sample, kernel: &NoiseKernel) -> Result<f64> {
    let n = sample.len() as f64;
    let mut total = 0.0;
    for &z in sample.observations() {
        let g = cdf.convolved_density(kernel, z)?;
        if !(g > 0.0) {
            return Err(Error::ZeroDensity { z });
        }
        total += g.ln();
    }
    Ok(total / n)
}

/// Characterization slack `θ ↦ (1/n) Σᵢ g_θ(Zᵢ)/ĝ(Zᵢ)` of `cdf`, evaluated at
/// every distinct observation plus `extra` points (deduplicated, ascending).
/// At the maximum likelihood fit the slack is ≤ 1 everywhere with equality on
/// the support.
pub fn characterization_slack(
    cdf: &ConcaveCdf,
    sample: &Sample,
    kernel: &NoiseKernel,
    extra: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let distinct = sample.distinct_with_counts();
    let mut thetas: Vec<f64> = distinct.iter().map(|d| d.0).collect();
    thetas.extend(extra.iter().copied().filter(|t| t.is_finite() && *t > 0.0));
    thetas.sort_by(|a, b| a.total_cmp(b));
    thetas.dedup();

    let n = sample.len() as f64;
    let mut ghat = Vec::with_capacity(distinct.len());
    for &(z, _) in &distinct {
        let g = cdf.convolved_density(kernel, z)?;
        if !(g > 0.0) {
            return Err(Error::ZeroDensity { z });
        }
        ghat.push(g);
    }
    let slack = thetas
        .iter()
        .map(|&t| {
            let s = distinct
                .iter()
                .zip(&ghat)
                .map(|(&(z, c), &g)| {
                    c as f64 * (kernel.primitive(z) - kernel.primitive(z - t)) / (t * g)
                })
                .sum::<f64>()
                / n;
            (t, s)
        })
        .collect();
    Ok(slack)
}

/// Maximum likelihood fit over concave CDFs.
///
/// `tol` bounds the characterization defect at termination: every candidate
/// slack is ≤ 1 + tol, support slacks deviate from 1 by at most tol, and the
/// fitted weights sum to 1 within tol (before the final exact normalization).
pub fn fit_mle(
    sample: &Sample,
    kernel: &NoiseKernel,
    tol: f64,
    max_iter: usize,
) -> Result<MleFit> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Invalid(format!("fit_mle: tol = {tol} must be positive")));
    }
    let distinct = sample.distinct_with_counts();
    let m = distinct.len();
    let n = sample.len() as f64;
    let thetas: Vec<f64> = distinct.iter().map(|d| d.0).collect();
    let q: Vec<f64> = distinct.iter().map(|d| d.1 as f64 / n).collect();

    // basis[j][l] = g_{θ_l}(v_j): convolved density of the uniform component
    // at candidate l, evaluated at distinct observation j.
    let basis: Vec<Vec<f64>> = thetas
        .iter()
        .map(|&v| {
            thetas
                .iter()
                .map(|&t| (kernel.primitive(v) - kernel.primitive(v - t)) / t)
                .collect()
        })
        .collect();

    // State: active support (candidate indices, ascending) with weights
    // (masses; they sum to 1 at the optimum), the mixture density at the
    // observations, and the cone objective mass - (1/n) Σ log g.
    let mut support: Vec<usize> = vec![m - 1];
    let mut weights: Vec<f64> = vec![1.0];
    let mut ghat: Vec<f64> = basis.iter().map(|row| row[m - 1]).collect();
    let mut mass = 1.0;
    let mut objective = cone_objective(mass, &ghat, &q)
        .ok_or(Error::ZeroDensity { z: thetas[m - 1] })?;

    let inner_eps = (0.1 * tol).max(1e-15);
    let mut iterations = 0;
    let mut converged = false;
    let mut rounding_steps = 0;

    while iterations < max_iter {
        iterations += 1;

        // Slack of the current iterate at every candidate; doubles as the
        // linear part of the local model.
        let slack: Vec<f64> = (0..m)
            .map(|l| (0..m).map(|j| basis[j][l] * q[j] / ghat[j]).sum())
            .collect();
        let worst_over = slack.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0;
        let worst_support = support
            .iter()
            .map(|&l| (slack[l] - 1.0).abs())
            .fold(0.0f64, f64::max);
        if worst_over <= tol && worst_support <= tol && (mass - 1.0).abs() <= tol {
            converged = true;
            break;
        }

        // Quadratic model at ḡ: minimize Σ α_l (1 - 2 s_l) + ½ αᵀ A α with
        // A_{lk} = Σ_j basis[j][l] basis[j][k] q_j / ḡ_j², over weights ≥ 0.
        let w2: Vec<f64> = (0..m).map(|j| q[j] / (ghat[j] * ghat[j])).collect();
        let c2: Vec<f64> = (0..m)
            .map(|l| (0..m).map(|j| basis[j][l] * basis[j][l] * w2[j]).sum())
            .collect();

        let mut inner_support = support.clone();
        let mut inner_weights = weights.clone();
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > 2 * m + 50 {
                break;
            }
            solve_restricted(&basis, &w2, &slack, &mut inner_support, &mut inner_weights);

            // model gradient at the inner iterate, all candidates
            let mix: Vec<f64> = (0..m)
                .map(|j| {
                    inner_support
                        .iter()
                        .zip(&inner_weights)
                        .map(|(&l, &w)| w * basis[j][l])
                        .sum::<f64>()
                })
                .collect();
            let mut best = (f64::INFINITY, usize::MAX);
            for l in 0..m {
                let quad: f64 = (0..m).map(|j| mix[j] * basis[j][l] * w2[j]).sum();
                let c1 = 1.0 - 2.0 * slack[l] + quad;
                let scaled = c1 / c2[l].sqrt();
                if scaled < best.0 {
                    best = (scaled, l);
                }
            }
            let (best_dir, best_l) = best;
            if best_dir >= -inner_eps || inner_support.contains(&best_l) {
                break;
            }
            let pos = inner_support.partition_point(|&l| l < best_l);
            inner_support.insert(pos, best_l);
            inner_weights.insert(pos, 0.0);
        }

        // Damped outer update: walk from the current density toward the model
        // solution until the cone objective improves.
        let target: Vec<f64> = (0..m)
            .map(|j| {
                inner_support
                    .iter()
                    .zip(&inner_weights)
                    .map(|(&l, &w)| w * basis[j][l])
                    .sum::<f64>()
            })
            .collect();
        let target_mass: f64 = inner_weights.iter().sum();

        let mut lambda = 1.0;
        let mut stepped = false;
        while lambda >= 2.0f64.powi(-30) {
            let cand: Vec<f64> = ghat
                .iter()
                .zip(&target)
                .map(|(&g, &t)| (1.0 - lambda) * g + lambda * t)
                .collect();
            let cand_mass = (1.0 - lambda) * mass + lambda * target_mass;
            if let Some(obj) = cone_objective(cand_mass, &cand, &q) {
                if obj < objective {
                    ghat = cand;
                    mass = cand_mass;
                    objective = obj;
                    merge_weights(&mut support, &mut weights, &inner_support, &inner_weights, lambda);
                    stepped = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !stepped {
            // Near the optimum the objective improvement drops below float
            // rounding while the full model step still contracts the
            // characterization defect, so accept it at rounding tolerance a
            // bounded number of times before giving up.
            let mut rescued = false;
            if rounding_steps < 5 {
                if let Some(obj) = cone_objective(target_mass, &target, &q) {
                    if obj <= objective + 1e-13 * (1.0 + objective.abs()) {
                        rounding_steps += 1;
                        ghat = target.clone();
                        mass = target_mass;
                        objective = obj;
                        merge_weights(&mut support, &mut weights, &inner_support, &inner_weights, 1.0);
                        rescued = true;
                    }
                }
            }
            if !rescued {
                break;
            }
        }
    }

    // Final polish: exact renormalization, then report the characterization
    // of the returned estimate itself.
    let total: f64 = weights.iter().sum();
    let sup: Vec<f64> = support.iter().map(|&l| thetas[l]).collect();
    let wts: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let estimate = ConcaveCdf::mixture(&sup, &wts)?;
    let loglik = log_likelihood(&estimate, sample, kernel)?;
    let slack = characterization_slack(&estimate, sample, kernel, &[])?;
    Ok(MleFit { estimate, loglik, slack, iterations, converged })
}

/// Cone objective `mass - Σ q_j log g_j`; `None` when some density is
/// nonpositive (the damped line search treats that as +∞).
fn cone_objective(mass: f64, g: &[f64], q: &[f64]) -> Option<f64> {
    let mut total = mass;
    for (&gj, &qj) in g.iter().zip(q) {
        if !(gj > 0.0) {
            return None;
        }
        total -= qj * gj.ln();
    }
    Some(total)
}

/// Solves the local model restricted to `support`, shrinking the support as
/// needed to keep weights nonnegative: solve the unconstrained normal
/// equations, and while any weight is negative, move from the last feasible
/// weights toward the solution until the first weight hits zero, drop that
/// point, and re-solve.
fn solve_restricted(
    basis: &[Vec<f64>],
    w2: &[f64],
    slack: &[f64],
    support: &mut Vec<usize>,
    weights: &mut Vec<f64>,
) {
    let m = basis.len();
    loop {
        let s = support.len();
        let mut a = vec![0.0; s * s];
        let mut b = vec![0.0; s];
        for (r, &lr) in support.iter().enumerate() {
            b[r] = 2.0 * slack[lr] - 1.0;
            for (c, &lc) in support.iter().enumerate().skip(r) {
                let v: f64 = (0..m).map(|j| basis[j][lr] * basis[j][lc] * w2[j]).sum();
                a[r * s + c] = v;
                a[c * s + r] = v;
            }
        }
        let Some(sol) = solve_linear(&a, &b, s) else {
            // singular system: keep the last feasible weights
            return;
        };
        let mut lambda = 1.0;
        let mut drop = None;
        for (i, (&cur, &new)) in weights.iter().zip(&sol).enumerate() {
            if new < 0.0 {
                let r = if cur <= 0.0 { 0.0 } else { cur / (cur - new) };
                if r < lambda {
                    lambda = r;
                    drop = Some(i);
                }
            }
        }
        match drop {
            None => {
                *weights = sol;
                return;
            }
            Some(d) => {
                for (w, &new) in weights.iter_mut().zip(&sol) {
                    *w += lambda * (new - *w);
                }
                support.remove(d);
                weights.remove(d);
                if support.is_empty() {
                    // cannot happen for a proper model; restore a stub
                    support.push(0);
                    weights.push(0.0);
                    return;
                }
            }
        }
    }
}

/// Blends `(1-λ)·old + λ·inner` on the union support, pruning zeros.
fn merge_weights(
    support: &mut Vec<usize>,
    weights: &mut Vec<f64>,
    inner_support: &[usize],
    inner_weights: &[f64],
    lambda: f64,
) {
    let mut merged: Vec<(usize, f64)> =
        support.iter().zip(weights.iter()).map(|(&l, &w)| (l, (1.0 - lambda) * w)).collect();
    for (&l, &w) in inner_support.iter().zip(inner_weights) {
        match merged.binary_search_by_key(&l, |e| e.0) {
            Ok(i) => merged[i].1 += lambda * w,
            Err(i) => merged.insert(i, (l, lambda * w)),
        }
    }
    merged.retain(|e| e.1 > 1e-300);
    *support = merged.iter().map(|e| e.0).collect();
    *weights = merged.iter().map(|e| e.1).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::draw_sample;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn loglik_single_observation() {
        let f1 = ConcaveCdf::mixture(&[1.0], &[1.0]).unwrap();
        let s = Sample::from_observations(vec![1.0]).unwrap();
        let l = log_likelihood(&f1, &s, &NoiseKernel::Exponential).unwrap();
        assert_relative_eq!(l, (1.0 - (-1.0f64).exp()).ln(), epsilon = 1e-14);
        assert_relative_eq!(l, -0.45867514538708193, epsilon = 1e-12);
    }

    #[test]
    fn loglik_counts_duplicates_once_each() {
        let f = ConcaveCdf::mixture(&[1.0], &[1.0]).unwrap();
        let k = NoiseKernel::Exponential;
        let single = Sample::from_observations(vec![1.0]).unwrap();
        let double = Sample::from_observations(vec![1.0, 1.0]).unwrap();
        assert_relative_eq!(
            log_likelihood(&f, &double, &k).unwrap(),
            log_likelihood(&f, &single, &k).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn loglik_detects_zero_density() {
        // triangular noise reaches at most 1 beyond the signal's endpoint
        let f = ConcaveCdf::mixture(&[1.0], &[1.0]).unwrap();
        let s = Sample::from_observations(vec![3.0]).unwrap();
        let err = log_likelihood(&f, &s, &NoiseKernel::Triangular).unwrap_err();
        assert!(matches!(err, Error::ZeroDensity { .. }));
    }

    #[test]
    fn single_observation_fit_is_exact() {
        let s = Sample::from_observations(vec![1.0]).unwrap();
        let fit = fit_mle(&s, &NoiseKernel::Exponential, 1e-10, 100).unwrap();
        assert!(fit.converged);
        let (sup, wts) = fit.estimate.as_mixture().unwrap();
        assert_eq!(sup, &[1.0]);
        assert_abs_diff_eq!(wts[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.loglik, -0.45867514538708193, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.slack[0].1, 1.0, epsilon = 1e-12);

        // single-component likelihood over a θ grid never beats the fit
        for i in 1..=300 {
            let t = i as f64 * 0.01;
            let f = ConcaveCdf::mixture(&[t], &[1.0]).unwrap();
            let l = log_likelihood(&f, &s, &NoiseKernel::Exponential).unwrap();
            assert!(l <= fit.loglik + 1e-12, "θ = {t} beats the fit");
        }
    }

    #[test]
    fn two_point_fit_meets_characterization() {
        let s = Sample::from_observations(vec![0.5, 2.0]).unwrap();
        let fit = fit_mle(&s, &NoiseKernel::Exponential, 1e-10, 200).unwrap();
        assert!(fit.converged);
        let (sup, _) = fit.estimate.as_mixture().unwrap();
        assert!(sup.iter().all(|t| *t == 0.5 || *t == 2.0));
        for &(_, sl) in &fit.slack {
            assert!(sl <= 1.0 + 1e-9);
        }
        // support slack pins to 1
        let (sup, _) = fit.estimate.as_mixture().unwrap();
        for &t in sup {
            let sl = fit.slack.iter().find(|e| e.0 == t).unwrap().1;
            assert_abs_diff_eq!(sl, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn two_point_fit_matches_grid_oracle() {
        // weights on support {0.5, 2.0}: scan the simplex, then refine
        let s = Sample::from_observations(vec![0.5, 2.0]).unwrap();
        let k = NoiseKernel::Exponential;
        let loglik_at = |w: f64| {
            let f = ConcaveCdf::mixture(&[0.5, 2.0], &[w, 1.0 - w]).unwrap();
            log_likelihood(&f, &s, &k).unwrap()
        };
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..=1000 {
            let w = i as f64 / 1000.0;
            let l = loglik_at(w);
            if l > best.0 {
                best = (l, w);
            }
        }
        let (mut lo, mut hi) = ((best.1 - 2e-3).max(0.0), (best.1 + 2e-3).min(1.0));
        for _ in 0..40 {
            let a = lo + (hi - lo) / 3.0;
            let b = hi - (hi - lo) / 3.0;
            if loglik_at(a) < loglik_at(b) {
                lo = a;
            } else {
                hi = b;
            }
        }
        let oracle = loglik_at(0.5 * (lo + hi));
        let fit = fit_mle(&s, &k, 1e-10, 200).unwrap();
        assert_abs_diff_eq!(fit.loglik, oracle, epsilon = 1e-9);
    }

    #[test]
    fn seeded_batch_converges_with_feasible_slack() {
        let truth = ConcaveCdf::sqrt_benchmark();
        for kernel in [NoiseKernel::Exponential, NoiseKernel::Triangular] {
            for seed in 0..5 {
                let s = draw_sample(&truth, &kernel, 40, 100 + seed).unwrap();
                let fit = fit_mle(&s, &kernel, 1e-8, 500).unwrap();
                assert!(fit.converged, "kernel {} seed {seed}", kernel.name());
                for &(t, sl) in &fit.slack {
                    assert!(sl <= 1.0 + 1e-6, "slack {sl} at θ={t}");
                }
                let (sup, wts) = fit.estimate.as_mixture().unwrap();
                assert_abs_diff_eq!(wts.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
                for &t in sup {
                    assert!(s.observations().contains(&t), "support point {t} not an observation");
                }
            }
        }
    }

    #[test]
    fn fit_is_permutation_invariant() {
        let truth = ConcaveCdf::sqrt_benchmark();
        let k = NoiseKernel::Exponential;
        let s = draw_sample(&truth, &k, 30, 4242).unwrap();
        let mut shuffled = s.observations().to_vec();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let s2 = Sample::from_observations(shuffled).unwrap();
        let f1 = fit_mle(&s, &k, 1e-9, 300).unwrap();
        let f2 = fit_mle(&s2, &k, 1e-9, 300).unwrap();
        assert_eq!(f1.estimate.as_mixture(), f2.estimate.as_mixture());
    }

    #[test]
    fn characterization_slack_includes_extras() {
        let f = ConcaveCdf::mixture(&[1.0], &[1.0]).unwrap();
        let s = Sample::from_observations(vec![0.5, 1.0]).unwrap();
        let table =
            characterization_slack(&f, &s, &NoiseKernel::Exponential, &[0.25, 2.0]).unwrap();
        let thetas: Vec<f64> = table.iter().map(|e| e.0).collect();
        assert_eq!(thetas, vec![0.25, 0.5, 1.0, 2.0]);
    }
}
