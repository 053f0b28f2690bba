//! Concave distribution functions on `[0, ∞)` and sampling from the noisy
//! observation model.
//!
//! Every concave CDF supported on `[0, M]` is a mixture of the extreme
//! elements `F_θ(x) = min(x/θ, 1)` (uniform distributions on `[0, θ]`), which
//! is what both fitters produce: [`ConcaveCdf::Mixture`] stores the support
//! points and mixing weights. Two analytic families are carried alongside for
//! benchmarking: the square-root law `F(x) = min(√(x/scale), 1)` with its
//! explicit quantile, and a local perturbation of an analytic truth used by
//! the lower-bound machinery (two density plateaus splice into the base so
//! the perturbed function stays a concave CDF).

use crate::kernels::NoiseKernel;
use crate::numeric::{bisect, integrate};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// A concave distribution function on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConcaveCdf {
    /// Finite mixture `Σ wⱼ · min(x/θⱼ, 1)`; `support` ascending, weights
    /// positive and summing to one.
    Mixture { support: Vec<f64>, weights: Vec<f64> },
    /// `F(x) = min(√(x/scale), 1)`; quantile `scale · u²`.
    SqrtBench { scale: f64 },
    /// Base CDF replaced on `[x0 - reach·eps, x0 + eps]` by two linear pieces
    /// (constant-density plateaus) meeting continuously; `reach` is chosen so
    /// the left plateau rejoins the base exactly.
    Perturbed { base: Box<ConcaveCdf>, x0: f64, eps: f64, reach: f64 },
}

impl ConcaveCdf {
    /// Builds a mixture CDF; merges duplicate support points, drops zero
    /// weights, and checks the weights sum to one.
    pub fn mixture(support: &[f64], weights: &[f64]) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(Error::Invalid("mixture: support/weights must match and be nonempty".into()));
        }
        if support.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::Invalid("mixture: support points must be positive".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Invalid("mixture: weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("mixture: weights sum to {total}, expected 1")));
        }
        let mut pairs: Vec<(f64, f64)> =
            support.iter().copied().zip(weights.iter().copied()).filter(|p| p.1 > 0.0).collect();
        if pairs.is_empty() {
            return Err(Error::Invalid("mixture: all weights are zero".into()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut sup = Vec::with_capacity(pairs.len());
        let mut wts: Vec<f64> = Vec::with_capacity(pairs.len());
        for (t, w) in pairs {
            if let Some(last) = sup.last().copied() {
                if t == last {
                    *wts.last_mut().unwrap() += w;
                    continue;
                }
            }
            sup.push(t);
            wts.push(w);
        }
        // exact renormalization so the total mass is 1 to the last bit
        let kept: f64 = wts.iter().sum();
        for w in &mut wts {
            *w /= kept;
        }
        Ok(ConcaveCdf::Mixture { support: sup, weights: wts })
    }

    /// The square-root benchmark truth `F(x) = min(√(x/5), 1)`.
    pub fn sqrt_benchmark() -> Self {
        ConcaveCdf::SqrtBench { scale: 5.0 }
    }

    /// Square-root law with an arbitrary right endpoint.
    pub fn sqrt_scaled(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Invalid(format!("sqrt benchmark: scale {scale} must be positive")));
        }
        Ok(ConcaveCdf::SqrtBench { scale })
    }

    /// `F(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            ConcaveCdf::Mixture { support, weights } => support
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * (x / t).min(1.0))
                .sum::<f64>()
                .min(1.0),
            ConcaveCdf::SqrtBench { scale } => (x / scale).sqrt().min(1.0),
            ConcaveCdf::Perturbed { base, x0, eps, reach } => {
                let (a, b, c) = (x0 - reach * eps, x0 - eps, x0 + eps);
                if x < a || x > c {
                    base.cdf(x)
                } else if x <= b {
                    base.cdf(a) + (x - a) * base.density(a)
                } else {
                    base.cdf(c) + (x - c) * base.density(c)
                }
            }
        }
    }

    /// Survival function `1 - F(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Density `f(x)` (right-continuous version). Unbounded at 0 for the
    /// square-root family.
    pub fn density(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            ConcaveCdf::Mixture { support, weights } => support
                .iter()
                .zip(weights)
                .filter(|(&t, _)| x < t)
                .map(|(&t, &w)| w / t)
                .sum(),
            ConcaveCdf::SqrtBench { scale } => {
                if x >= *scale {
                    0.0
                } else {
                    0.5 / (scale * x).sqrt()
                }
            }
            ConcaveCdf::Perturbed { base, x0, eps, reach } => {
                let (a, b, c) = (x0 - reach * eps, x0 - eps, x0 + eps);
                if x < a || x >= c {
                    base.density(x)
                } else if x < b {
                    base.density(a)
                } else {
                    base.density(c)
                }
            }
        }
    }

    /// Derivative of the density where defined (0 on mixture/plateau pieces).
    pub fn density_derivative(&self, x: f64) -> f64 {
        match self {
            ConcaveCdf::Mixture { .. } => 0.0,
            ConcaveCdf::SqrtBench { scale } => {
                if x <= 0.0 || x >= *scale {
                    0.0
                } else {
                    -0.25 / (scale.sqrt() * x.powf(1.5))
                }
            }
            ConcaveCdf::Perturbed { base, x0, eps, reach } => {
                let (a, c) = (x0 - reach * eps, x0 + eps);
                if x < a || x >= c {
                    base.density_derivative(x)
                } else {
                    0.0
                }
            }
        }
    }

    /// Quantile `F⁻¹(u)` for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u));
        match self {
            ConcaveCdf::SqrtBench { scale } => scale * u * u,
            ConcaveCdf::Mixture { support, weights } => {
                // F is piecewise linear with kinks at the support points;
                // walk the segments.
                if u == 0.0 {
                    return 0.0;
                }
                let mut lo = 0.0;
                let mut f_lo = 0.0;
                for (i, &t) in support.iter().enumerate() {
                    let f_t = self.cdf(t);
                    if u <= f_t {
                        // slope on (lo, t) is Σ_{θ ≥ t} w/θ, constant there
                        let slope: f64 = support[i..]
                            .iter()
                            .zip(&weights[i..])
                            .map(|(&tt, &w)| w / tt)
                            .sum();
                        return lo + (u - f_lo) / slope;
                    }
                    lo = t;
                    f_lo = f_t;
                }
                *support.last().unwrap()
            }
            ConcaveCdf::Perturbed { .. } => {
                let end = self.right_endpoint();
                bisect(|x| self.cdf(x) - u, 0.0, end, 1e-13 * (1.0 + end))
                    .expect("quantile: CDF is monotone on [0, end]")
            }
        }
    }

    /// Right end of the support (`F` reaches 1 there).
    pub fn right_endpoint(&self) -> f64 {
        match self {
            ConcaveCdf::Mixture { support, .. } => *support.last().unwrap(),
            ConcaveCdf::SqrtBench { scale } => *scale,
            ConcaveCdf::Perturbed { base, .. } => base.right_endpoint(),
        }
    }

    /// Support points and weights when this is a mixture.
    pub fn as_mixture(&self) -> Option<(&[f64], &[f64])> {
        match self {
            ConcaveCdf::Mixture { support, weights } => Some((support, weights)),
            _ => None,
        }
    }

    /// Convolved density `g(z) = ∫ k(z - x) dF(x)` of an observation
    /// `Z = X + ε`. Mixtures use the closed form
    /// `Σ wⱼ (K(z) - K(z - θⱼ))/θⱼ`; analytic variants integrate numerically
    /// (the square-root singularity is removed by substitution, and a
    /// perturbed truth adds the closed-form density difference integrated
    /// over the perturbation window only, which keeps the correction exact to
    /// rounding even when it is orders of magnitude below the base).
    pub fn convolved_density(&self, kernel: &NoiseKernel, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        match self {
            ConcaveCdf::Mixture { support, weights } => Ok(support
                .iter()
                .zip(weights)
                .map(|(&t, &w)| w * (kernel.primitive(z) - kernel.primitive(z - t)) / t)
                .sum()),
            ConcaveCdf::SqrtBench { .. } => self.convolved_density_quadrature(kernel, z, 1e-12),
            ConcaveCdf::Perturbed { base, .. } => {
                let g0 = base.convolved_density(kernel, z)?;
                Ok(g0 + self.perturbation_convolution_correction(kernel, z)?)
            }
        }
    }

    /// `g(z)` by direct quadrature of `k(z - x) f(x)`; the oracle for the
    /// mixture closed form and the generic path for analytic truths.
    pub fn convolved_density_quadrature(
        &self,
        kernel: &NoiseKernel,
        z: f64,
        tol: f64,
    ) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        let hi = z.min(self.right_endpoint());
        let lo = kernel.support_end().map(|s| (z - s).max(0.0)).unwrap_or(0.0);
        if hi <= lo {
            return Ok(0.0);
        }
        // Integrate in v = √x: absorbs the 1/√x singularity of the
        // square-root family at the origin; harmless elsewhere.
        let mut edges: Vec<f64> = vec![lo.sqrt(), hi.sqrt()];
        let mut push = |x: f64| {
            if x > lo && x < hi {
                edges.push(x.sqrt());
            }
        };
        for b in self.density_breakpoints() {
            push(b);
        }
        for b in kernel_breakpoints(kernel) {
            push(z - b);
        }
        edges.sort_by(|a, b| a.total_cmp(b));
        integrate(|v| kernel.density(z - v * v) * self.density_sqrt_jacobian(v), &edges, tol)
    }

    /// `f(v²) · 2v`, the density under the substitution `x = v²`, computed in
    /// closed form so the square-root family stays finite at `v = 0`.
    fn density_sqrt_jacobian(&self, v: f64) -> f64 {
        match self {
            ConcaveCdf::SqrtBench { scale } => {
                if v * v >= *scale {
                    0.0
                } else {
                    1.0 / scale.sqrt()
                }
            }
            ConcaveCdf::Perturbed { base, x0, eps, reach } => {
                let x = v * v;
                let (a, c) = (x0 - reach * eps, x0 + eps);
                if x < a || x >= c {
                    base.density_sqrt_jacobian(v)
                } else {
                    self.density(x) * 2.0 * v
                }
            }
            ConcaveCdf::Mixture { .. } => self.density(v * v) * 2.0 * v,
        }
    }

    /// `∫ k(z-x) (f(x) - f_base(x)) dx` for a perturbed truth: the integrand
    /// is supported on the perturbation window and known in closed form.
    pub(crate) fn perturbation_convolution_correction(&self, kernel: &NoiseKernel, z: f64) -> Result<f64> {
        let ConcaveCdf::Perturbed { base, x0, eps, reach } = self else {
            return Ok(0.0);
        };
        let (a, b, c) = (x0 - reach * eps, x0 - eps, x0 + eps);
        let lo = kernel.support_end().map(|s| (z - s).max(a)).unwrap_or(a);
        let hi = z.min(c);
        if hi <= lo {
            return Ok(0.0);
        }
        let f_left = base.density(a);
        let f_right = base.density(c);
        let mut edges = vec![lo, hi];
        if b > lo && b < hi {
            edges.push(b);
        }
        for kb in kernel_breakpoints(kernel) {
            let x = z - kb;
            if x > lo && x < hi {
                edges.push(x);
            }
        }
        edges.sort_by(|a, b| a.total_cmp(b));
        integrate(
            |x| {
                let plateau = if x < b { f_left } else { f_right };
                kernel.density(z - x) * (plateau - base.density(x))
            },
            &edges,
            1e-13,
        )
    }

    /// Kinks of the density, used as quadrature panel edges.
    pub(crate) fn density_breakpoints(&self) -> Vec<f64> {
        match self {
            ConcaveCdf::Mixture { support, .. } => support.clone(),
            ConcaveCdf::SqrtBench { scale } => vec![*scale],
            ConcaveCdf::Perturbed { base, x0, eps, reach } => {
                let mut v = base.density_breakpoints();
                v.extend([x0 - reach * eps, x0 - eps, x0 + eps]);
                v
            }
        }
    }

    /// One draw of the signal `X ~ F`.
    fn sample_signal(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ConcaveCdf::Mixture { support, weights } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut theta = *support.last().unwrap();
                for (&t, &w) in support.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        theta = t;
                        break;
                    }
                }
                let v: f64 = rng.gen();
                theta * v
            }
            _ => {
                let u: f64 = rng.gen();
                self.quantile(u)
            }
        }
    }

    /// Short text form used in sample headers and configs.
    pub fn describe(&self) -> String {
        match self {
            ConcaveCdf::Mixture { support, weights } => {
                let parts: Vec<String> =
                    weights.iter().zip(support).map(|(w, t)| format!("{w}@{t}")).collect();
                format!("mixture:{}", parts.join(","))
            }
            ConcaveCdf::SqrtBench { scale } => {
                if *scale == 5.0 {
                    "sqrt5".into()
                } else {
                    format!("sqrt:{scale}")
                }
            }
            ConcaveCdf::Perturbed { base, x0, eps, .. } => {
                format!("perturbed:{}@x0={x0},eps={eps}", base.describe())
            }
        }
    }
}

pub(crate) fn kernel_breakpoints(kernel: &NoiseKernel) -> Vec<f64> {
    match kernel {
        NoiseKernel::Exponential => vec![],
        NoiseKernel::Uniform01 | NoiseKernel::Triangular => vec![1.0],
        NoiseKernel::Custom { xs, .. } => xs.clone(),
    }
}

/// Where a sample came from; written to the sidecar header next to the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub kernel: String,
    pub truth: String,
    pub n: usize,
    pub seed: u64,
}

/// A sorted sample of noisy observations `Zᵢ = Xᵢ + εᵢ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    observations: Vec<f64>,
    provenance: Option<Provenance>,
}

impl Sample {
    pub fn new(mut observations: Vec<f64>, provenance: Option<Provenance>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::Invalid("sample: need at least one observation".into()));
        }
        if observations.iter().any(|z| !z.is_finite() || *z <= 0.0) {
            return Err(Error::Invalid("sample: observations must be finite and positive".into()));
        }
        observations.sort_by(|a, b| a.total_cmp(b));
        Ok(Sample { observations, provenance })
    }

    pub fn from_observations(observations: Vec<f64>) -> Result<Self> {
        Sample::new(observations, None)
    }

    /// Ascending observations.
    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest observation `Z₍ₙ₎`.
    pub fn max(&self) -> f64 {
        *self.observations.last().unwrap()
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Distinct observed values with multiplicities (ties collapse to one
    /// candidate support point but keep their weight in empirical averages).
    pub fn distinct_with_counts(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &z in &self.observations {
            match out.last_mut() {
                Some((v, c)) if *v == z => *c += 1,
                _ => out.push((z, 1)),
            }
        }
        out
    }
}

/// Draws `n` observations `Z = X + ε` with a ChaCha stream seeded by `seed`.
/// The draw order is fixed (signal first, then noise, one observation at a
/// time), so a seed fully determines the sample.
pub fn draw_sample(
    truth: &ConcaveCdf,
    kernel: &NoiseKernel,
    n: usize,
    seed: u64,
) -> Result<Sample> {
    if n == 0 {
        return Err(Error::Invalid("draw_sample: n must be positive".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut obs = Vec::with_capacity(n);
    while obs.len() < n {
        let x = truth.sample_signal(&mut rng);
        let u: f64 = rng.gen();
        let z = x + kernel.noise_quantile(u);
        // z = 0 has probability zero; redrawing keeps the stream deterministic
        if z > 0.0 {
            obs.push(z);
        }
    }
    Sample::new(
        obs,
        Some(Provenance {
            kernel: kernel.name().to_string(),
            truth: truth.describe(),
            n,
            seed,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn two_point() -> ConcaveCdf {
        ConcaveCdf::mixture(&[1.0, 2.0], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn mixture_constructor_validates() {
        assert!(ConcaveCdf::mixture(&[], &[]).is_err());
        assert!(ConcaveCdf::mixture(&[1.0], &[0.9]).is_err());
        assert!(ConcaveCdf::mixture(&[-1.0], &[1.0]).is_err());
        assert!(ConcaveCdf::mixture(&[1.0, 2.0], &[0.5, 0.6]).is_err());
    }

    #[test]
    fn mixture_merges_duplicates_and_sorts() {
        let m = ConcaveCdf::mixture(&[2.0, 1.0, 2.0], &[0.25, 0.5, 0.25]).unwrap();
        let (sup, wts) = m.as_mixture().unwrap();
        assert_eq!(sup, &[1.0, 2.0]);
        assert_eq!(wts, &[0.5, 0.5]);
    }

    #[test]
    fn mixture_cdf_density_spot_values() {
        let m = two_point();
        assert_eq!(m.cdf(0.0), 0.0);
        assert_relative_eq!(m.cdf(0.5), 0.5 * 0.5 + 0.5 * 0.25);
        assert_relative_eq!(m.cdf(1.5), 0.5 + 0.5 * 0.75);
        assert_eq!(m.cdf(2.0), 1.0);
        assert_eq!(m.cdf(3.0), 1.0);
        // density: 0.5/1 + 0.5/2 on [0,1), then 0.25 on [1,2)
        assert_relative_eq!(m.density(0.3), 0.75);
        assert_relative_eq!(m.density(1.7), 0.25);
        assert_eq!(m.density(2.5), 0.0);
        assert_eq!(m.right_endpoint(), 2.0);
    }

    #[test]
    fn concavity_midpoint_property() {
        let m = ConcaveCdf::mixture(&[0.5, 1.3, 2.2, 4.0], &[0.1, 0.4, 0.3, 0.2]).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                let x = 0.12 * i as f64;
                let y = 0.12 * j as f64;
                let mid = m.cdf(0.5 * (x + y));
                assert!(mid >= 0.5 * (m.cdf(x) + m.cdf(y)) - 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_benchmark_values() {
        let f = ConcaveCdf::sqrt_benchmark();
        assert_relative_eq!(f.cdf(1.25), 0.5);
        assert_eq!(f.cdf(5.0), 1.0);
        assert_relative_eq!(f.density(1.0), 0.5 / 5.0f64.sqrt());
        assert_relative_eq!(f.quantile(0.5), 1.25);
        assert_relative_eq!(f.density_derivative(1.0), -0.25 / 5.0f64.sqrt());
        assert_eq!(f.right_endpoint(), 5.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let m = ConcaveCdf::mixture(&[0.8, 1.7, 3.1], &[0.3, 0.45, 0.25]).unwrap();
        for u in [0.0, 0.05, 0.3, 0.62, 0.99] {
            assert_abs_diff_eq!(m.cdf(m.quantile(u)), u, epsilon = 1e-12);
        }
        let s = ConcaveCdf::sqrt_benchmark();
        for u in [0.1, 0.5, 0.9] {
            assert_abs_diff_eq!(s.cdf(s.quantile(u)), u, epsilon = 1e-12);
        }
    }

    #[test]
    fn convolved_density_closed_form_spot_values() {
        let f1 = ConcaveCdf::mixture(&[1.0], &[1.0]).unwrap();
        let k = NoiseKernel::Exponential;
        assert_relative_eq!(
            f1.convolved_density(&k, 1.0).unwrap(),
            1.0 - (-1.0f64).exp(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            f1.convolved_density(&k, 2.0).unwrap(),
            (-2.0f64).exp() * (1.0f64.exp() - 1.0),
            epsilon = 1e-14
        );
        assert_eq!(f1.convolved_density(&k, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn convolved_density_matches_quadrature_oracle() {
        let m = ConcaveCdf::mixture(&[0.7, 1.9, 3.4], &[0.25, 0.35, 0.4]).unwrap();
        for k in [NoiseKernel::Exponential, NoiseKernel::Uniform01, NoiseKernel::Triangular] {
            for z in [0.2, 0.8, 1.5, 2.7, 4.1] {
                let closed = m.convolved_density(&k, z).unwrap();
                let quad = m.convolved_density_quadrature(&k, z, 1e-11).unwrap();
                assert_abs_diff_eq!(closed, quad, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn sqrt_benchmark_convolved_density() {
        // ∫₀¹ e^{-(1-x)} / (2√(5x)) dx, frozen from an independent
        // high-resolution quadrature.
        let f = ConcaveCdf::sqrt_benchmark();
        let g1 = f.convolved_density(&NoiseKernel::Exponential, 1.0).unwrap();
        assert_abs_diff_eq!(g1, 0.2406364709513, epsilon = 1e-10);
    }

    #[test]
    fn sampling_is_deterministic_and_positive() {
        let truth = two_point();
        let k = NoiseKernel::Exponential;
        let a = draw_sample(&truth, &k, 50, 7).unwrap();
        let b = draw_sample(&truth, &k, 50, 7).unwrap();
        assert_eq!(a.observations(), b.observations());
        assert!(a.observations().iter().all(|z| *z > 0.0));
        assert!(a.observations().windows(2).all(|w| w[0] <= w[1]));
        let c = draw_sample(&truth, &k, 50, 8).unwrap();
        assert_ne!(a.observations(), c.observations());
        let p = a.provenance().unwrap();
        assert_eq!(p.kernel, "exponential");
        assert_eq!(p.truth, "mixture:0.5@1,0.5@2");
        assert_eq!((p.n, p.seed), (50, 7));
    }

    #[test]
    fn sample_statistics_match_model() {
        // Z = X + ε with X ~ half/half uniform on [0,1], [0,2]: E X = 0.75;
        // exponential noise: E ε = 1. Var X = E X² - (E X)² = (1/6 + 4/6)/2…
        // keep it simple: E Z = 1.75, and check the empirical CDF against the
        // model CDF P(Z ≤ z) = Σ wⱼ (K̄(z) - K̄(z-θⱼ))/θⱼ, K̄(t) = ∫₀ᵗ K.
        let truth = two_point();
        let k = NoiseKernel::Exponential;
        let n = 4000;
        let s = draw_sample(&truth, &k, n, 20260814).unwrap();
        let mean = s.observations().iter().sum::<f64>() / n as f64;
        assert_abs_diff_eq!(mean, 1.75, epsilon = 0.06);

        let kbar = |t: f64| if t <= 0.0 { 0.0 } else { t - 1.0 + (-t).exp() };
        let model = |z: f64| 0.5 * (kbar(z) - kbar(z - 1.0)) + 0.25 * (kbar(z) - kbar(z - 2.0));
        let mut worst = 0.0f64;
        for (i, &z) in s.observations().iter().enumerate() {
            let emp_hi = (i + 1) as f64 / n as f64;
            let emp_lo = i as f64 / n as f64;
            let m = model(z);
            worst = worst.max((emp_hi - m).abs().max((emp_lo - m).abs()));
        }
        // 0.1% Kolmogorov-Smirnov critical value ≈ 1.95/√n
        assert!(worst < 1.95 / (n as f64).sqrt(), "KS distance {worst}");
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::from_observations(vec![]).is_err());
        assert!(Sample::from_observations(vec![1.0, -2.0]).is_err());
        assert!(Sample::from_observations(vec![1.0, 0.0]).is_err());
        assert!(Sample::from_observations(vec![f64::NAN]).is_err());
    }

    #[test]
    fn distinct_counts_collapse_ties() {
        let s = Sample::from_observations(vec![2.0, 1.0, 2.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.distinct_with_counts(), vec![(1.0, 1), (2.0, 3), (3.0, 1)]);
        assert_eq!(s.max(), 3.0);
        assert_eq!(s.len(), 5);
    }

    #[test]
    fn describe_round_trips_names() {
        assert_eq!(ConcaveCdf::sqrt_benchmark().describe(), "sqrt5");
        assert_eq!(two_point().describe(), "mixture:0.5@1,0.5@2");
    }
}
