//! Least squares estimation of a concave distribution function from noisy
//! observations.
//!
//! The observations are first inverted through the reciprocal kernel: the
//! process
//!
//! ```text
//! U_n(x) = x - (1/n) Σ_{Zᵢ ≤ x} p(x - Zᵢ)
//! ```
//!
//! is an unbiased empirical picture of the integrated signal survival
//! `∫₀ˣ (1 - F₀)`, so its increments `dU_n` estimate the survival itself. The
//! estimator minimizes `Q_n(s) = ½∫s² - ∫s dU_n` over survival functions `s`
//! of concave CDFs, i.e. over mixtures `s = Σ τⱼ s_θⱼ` with
//! `s_θ(x) = (1 - x/θ)₊` and simplex weights.
//!
//! The fit is characterized through twice-integrated quantities: with
//! `Y_n(θ) = ∫₀^θ U_n` and `H_n(θ)` the twice-integrated fitted survival
//! shifted by the line `θ·(⟨s̃,s̃⟩ - ⟨s̃,dU_n⟩)`, the minimizer satisfies
//! `H_n(θ) ≥ Y_n(θ)` for every θ > 0 with equality at the kinks of the fit.
//! That defect table is returned with the fit.
//!
//! All inner products of mixture components have small closed forms, and
//! `Y_n` needs the reciprocal kernel only through its running integral, so
//! the whole fit is exact given the reciprocal table: the optimizer is plain
//! support reduction over candidate kinks at the distinct observations, with
//! each restricted problem solved exactly through its normal equations.

use crate::kernels::{solve_reciprocal, NoiseKernel, ReciprocalKernel};
use crate::mixture::{ConcaveCdf, Sample};
use crate::numeric::solve_linear;
use crate::{Error, Result};

/// Empirical inverted process `U_n` and its integrals for one sample.
#[derive(Debug, Clone)]
pub struct UnProcess {
    /// distinct observations with multiplicities, ascending
    distinct: Vec<(f64, usize)>,
    n: f64,
    zmax: f64,
    recip: ReciprocalKernel,
}

impl UnProcess {
    /// Pairs a sample with a reciprocal kernel. A tabulated reciprocal must
    /// reach at least the largest observation.
    pub fn new(sample: &Sample, recip: ReciprocalKernel) -> Result<Self> {
        if let Some(h) = recip.horizon() {
            if h < sample.max() {
                return Err(Error::Invalid(format!(
                    "reciprocal horizon {h} is below the largest observation {}",
                    sample.max()
                )));
            }
        }
        Ok(UnProcess {
            distinct: sample.distinct_with_counts(),
            n: sample.len() as f64,
            zmax: sample.max(),
            recip,
        })
    }

    /// Distinct observed values, ascending; the candidate kink locations.
    pub fn candidates(&self) -> Vec<f64> {
        self.distinct.iter().map(|d| d.0).collect()
    }

    /// Largest observation.
    pub fn max_observation(&self) -> f64 {
        self.zmax
    }

    /// The reciprocal kernel backing this process.
    pub fn reciprocal(&self) -> &ReciprocalKernel {
        &self.recip
    }

    /// `U_n(x)`; zero for x ≤ 0 and constant at `Z̄ + p-intercept` terms
    /// beyond the data for kernels whose reciprocal is affine.
    pub fn value(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Invalid(format!("U_n evaluated at non-finite x = {x}")));
        }
        let mut total = x;
        for &(z, c) in &self.distinct {
            if z > x {
                break;
            }
            total -= c as f64 * self.recip.value(x - z)? / self.n;
        }
        Ok(total)
    }

    /// `Y_n(θ) = ∫₀^θ U_n = θ²/2 - (1/n) Σᵢ p̄((θ - Zᵢ)₊)`.
    pub fn integral(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::Invalid(format!("Y_n needs θ ≥ 0, got {theta}")));
        }
        let mut total = theta * theta / 2.0;
        for &(z, c) in &self.distinct {
            if z >= theta {
                break;
            }
            total -= c as f64 * self.recip.primitive(theta - z)? / self.n;
        }
        Ok(total)
    }

    /// `⟨s_θ, dU_n⟩ = Y_n(θ)/θ`, the empirical pairing of one component.
    pub fn survival_inner(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0) {
            return Err(Error::Invalid(format!("component pairing needs θ > 0, got {theta}")));
        }
        Ok(self.integral(theta)? / theta)
    }

    /// Least squares objective `½⟨s,s⟩ - ⟨s,dU_n⟩` of a mixture CDF.
    pub fn objective(&self, cdf: &ConcaveCdf) -> Result<f64> {
        let (sup, wts) = cdf
            .as_mixture()
            .ok_or_else(|| Error::Invalid("least squares objective requires a mixture".into()))?;
        let mut quad = 0.0;
        for (i, &a) in sup.iter().enumerate() {
            for (j, &b) in sup.iter().enumerate() {
                quad += wts[i] * wts[j] * survival_inner_product(a, b);
            }
        }
        let mut lin = 0.0;
        for (&t, &w) in sup.iter().zip(wts) {
            lin += w * self.survival_inner(t)?;
        }
        Ok(0.5 * quad - lin)
    }
}

/// `∫₀^∞ (1 - x/a)₊ (1 - x/b)₊ dx = min/2 - min²/(6·max)`.
pub fn survival_inner_product(a: f64, b: f64) -> f64 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo / 2.0 - lo * lo / (6.0 * hi)
}

/// `∫₀^t ∫₀^x (1 - y/θ)₊ dy dx`: the twice-integrated component survival.
fn survival_twice(theta: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= theta {
        t * t / 2.0 - t * t * t / (6.0 * theta)
    } else {
        theta * theta / 3.0 + (t - theta) * theta / 2.0
    }
}

/// Characterization defect `H_n(θ) - Y_n(θ)` of a mixture CDF at each θ in
/// `thetas`: nonnegative everywhere with zeros at the kinks exactly when the
/// mixture is the least squares fit.
pub fn lse_characterization(
    cdf: &ConcaveCdf,
    un: &UnProcess,
    thetas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let (sup, wts) = cdf
        .as_mixture()
        .ok_or_else(|| Error::Invalid("least squares characterization requires a mixture".into()))?;
    let mut self_inner = 0.0;
    for (i, &a) in sup.iter().enumerate() {
        for (j, &b) in sup.iter().enumerate() {
            self_inner += wts[i] * wts[j] * survival_inner_product(a, b);
        }
    }
    let mut pairing = 0.0;
    for (&t, &w) in sup.iter().zip(wts) {
        pairing += w * un.survival_inner(t)?;
    }
    let gap = self_inner - pairing;

    thetas
        .iter()
        .map(|&t| {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Invalid(format!(
                    "characterization needs θ > 0, got {t}"
                )));
            }
            let h: f64 = sup
                .iter()
                .zip(wts)
                .map(|(&tj, &w)| w * survival_twice(tj, t))
                .sum();
            Ok((t, h - t * gap - un.integral(t)?))
        })
        .collect()
}

/// Result of [`fit_lse`] / [`fit_lse_from`].
#[derive(Debug, Clone)]
pub struct LseFit {
    /// Fitted mixture CDF; kinks are a subset of the observed values.
    pub estimate: ConcaveCdf,
    /// Least squares objective at the fit.
    pub objective: f64,
    /// `(θ, H_n(θ) - Y_n(θ))` at each distinct observation.
    pub char_table: Vec<(f64, f64)>,
    /// Outer iterations (support changes) used.
    pub iterations: usize,
    /// Whether the characterization was met at the requested tolerance.
    pub converged: bool,
}

/// Least squares fit using the closed-form reciprocal when the kernel has
/// one, otherwise a tabulated reciprocal on a step-1e-3 grid reaching the
/// largest observation.
pub fn fit_lse(sample: &Sample, kernel: &NoiseKernel, tol: f64, max_iter: usize) -> Result<LseFit> {
    let recip = solve_reciprocal(kernel, 1e-3, sample.max())?;
    let un = UnProcess::new(sample, recip)?;
    fit_lse_from(&un, tol, max_iter, None)
}

/// Least squares fit by support reduction over the candidate kinks.
///
/// `tol` bounds the characterization defect at termination: every candidate
/// defect is ≥ -tol. `anchor` overrides the initial single kink (it must be
/// an observed value); the default is the largest observation.
pub fn fit_lse_from(
    un: &UnProcess,
    tol: f64,
    max_iter: usize,
    anchor: Option<f64>,
) -> Result<LseFit> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Invalid(format!("fit_lse: tol = {tol} must be positive")));
    }
    let thetas = un.candidates();
    let m = thetas.len();
    let pairing: Vec<f64> =
        thetas.iter().map(|&t| un.survival_inner(t)).collect::<Result<_>>()?;

    let start = match anchor {
        None => m - 1,
        Some(a) => thetas
            .iter()
            .position(|&t| t == a)
            .ok_or_else(|| Error::Invalid(format!("anchor {a} is not an observed value")))?,
    };
    let mut support: Vec<usize> = vec![start];
    let mut tau: Vec<f64> = vec![1.0];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;

        // defect H - Y at every candidate for the current mixture
        let cross: Vec<f64> = (0..m)
            .map(|l| {
                support
                    .iter()
                    .zip(&tau)
                    .map(|(&k, &w)| w * survival_inner_product(thetas[k], thetas[l]))
                    .sum::<f64>()
            })
            .collect();
        let gap: f64 =
            support.iter().zip(&tau).map(|(&k, &w)| w * (cross[k] - pairing[k])).sum();
        let mut worst = (f64::INFINITY, usize::MAX);
        for l in 0..m {
            let defect = thetas[l] * (cross[l] - pairing[l] - gap);
            if defect < worst.0 {
                worst = (defect, l);
            }
        }
        if worst.0 >= -tol {
            converged = true;
            break;
        }
        if support.contains(&worst.1) {
            // the violated direction is already active: the restricted solve
            // cannot improve further, so stop with the defect on record
            break;
        }
        let pos = support.partition_point(|&k| k < worst.1);
        support.insert(pos, worst.1);
        tau.insert(pos, 0.0);

        // restricted problem on the active kinks, solved exactly; drop the
        // first weight to hit zero when the solution leaves the simplex
        loop {
            let Some(sol) = solve_eliminated(&thetas, &pairing, &support) else {
                break;
            };
            let mut lambda = f64::INFINITY;
            let mut drop = usize::MAX;
            for (i, (&cur, &new)) in tau.iter().zip(&sol).enumerate() {
                if new < 0.0 {
                    let r = if cur <= 0.0 { 0.0 } else { cur / (cur - new) };
                    if r < lambda {
                        lambda = r;
                        drop = i;
                    }
                }
            }
            if drop == usize::MAX {
                tau = sol;
                break;
            }
            for (w, &new) in tau.iter_mut().zip(&sol) {
                *w += lambda * (new - *w);
            }
            support.remove(drop);
            tau.remove(drop);
        }
        let keep: Vec<bool> = tau.iter().map(|&w| w > 0.0).collect();
        let mut it = keep.iter();
        support.retain(|_| *it.next().unwrap());
        let mut it = keep.iter();
        tau.retain(|_| *it.next().unwrap());
    }

    let sup: Vec<f64> = support.iter().map(|&k| thetas[k]).collect();
    let total: f64 = tau.iter().sum();
    let wts: Vec<f64> = tau.iter().map(|w| w / total).collect();
    let estimate = ConcaveCdf::mixture(&sup, &wts)?;
    let objective = un.objective(&estimate)?;
    let char_table = lse_characterization(&estimate, un, &thetas)?;
    Ok(LseFit { estimate, objective, char_table, iterations, converged })
}

/// Minimizes the restricted objective over weights summing to one on
/// `support`, with the first weight eliminated; returns the full weight
/// vector (which may have negative entries), or `None` on a singular system.
fn solve_eliminated(thetas: &[f64], pairing: &[f64], support: &[usize]) -> Option<Vec<f64>> {
    let k = support.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let g = |i: usize, j: usize| survival_inner_product(thetas[support[i]], thetas[support[j]]);
    let d = k - 1;
    let mut a = vec![0.0; d * d];
    let mut b = vec![0.0; d];
    for i in 1..k {
        b[i - 1] = g(0, 0) - g(0, i) - pairing[support[0]] + pairing[support[i]];
        for j in i..k {
            let v = g(0, 0) - g(0, i) - g(0, j) + g(i, j);
            a[(i - 1) * d + (j - 1)] = v;
            a[(j - 1) * d + (i - 1)] = v;
        }
    }
    let x = solve_linear(&a, &b, d)?;
    let mut tau = Vec::with_capacity(k);
    tau.push(1.0 - x.iter().sum::<f64>());
    tau.extend(x);
    Some(tau)
}
