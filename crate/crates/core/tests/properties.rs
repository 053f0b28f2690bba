//! Randomized invariants: shape constraints of the model family, agreement
//! of closed forms with quadrature, and optimality of the fitted estimates
//! against arbitrary feasible competitors.

use deconcave::{
    draw_sample, fit_mle, log_likelihood, minimax_bound_cdf, numeric::integrate, perturb,
    solve_reciprocal, survival_inner_product, ConcaveCdf, LocalQuantities, NoiseKernel, UnProcess,
};
use proptest::prelude::*;

fn mixtures() -> impl Strategy<Value = ConcaveCdf> {
    prop::collection::vec((0.05f64..8.0, 0.05f64..1.0), 1..=4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.1).sum();
        let thetas: Vec<f64> = parts.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = parts.iter().map(|p| p.1 / total).collect();
        ConcaveCdf::mixture(&thetas, &weights).unwrap()
    })
}

fn kernels() -> impl Strategy<Value = NoiseKernel> {
    prop::sample::select(vec![
        NoiseKernel::Exponential,
        NoiseKernel::Uniform01,
        NoiseKernel::Triangular,
    ])
}

proptest! {
    #[test]
    fn cdf_is_a_concave_distribution_function(f in mixtures(), x in 0.0f64..10.0, y in 0.0f64..10.0) {
        let (fx, fy) = (f.cdf(x), f.cdf(y));
        prop_assert!((0.0..=1.0).contains(&fx));
        if x <= y {
            prop_assert!(fx <= fy + 1e-15);
        }
        let mid = f.cdf(0.5 * (x + y));
        prop_assert!(mid >= 0.5 * (fx + fy) - 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf(f in mixtures(), u in 0.01f64..0.99) {
        let x = f.quantile(u);
        prop_assert!((f.cdf(x) - u).abs() <= 1e-9);
    }

    #[test]
    fn survival_inner_product_matches_quadrature(a in 0.05f64..10.0, b in 0.05f64..10.0) {
        let num = integrate(
            |x| (1.0 - x / a).max(0.0) * (1.0 - x / b).max(0.0),
            &[0.0, a.min(b), a.max(b)],
            1e-12,
        ).unwrap();
        prop_assert!((survival_inner_product(a, b) - num).abs() <= 1e-9);
    }

    #[test]
    fn component_gram_is_positive_semidefinite(
        thetas in prop::collection::vec(0.05f64..10.0, 2..=6),
        coef in prop::collection::vec(-1.0f64..1.0, 6),
    ) {
        let mut form = 0.0;
        for (i, &a) in thetas.iter().enumerate() {
            for (j, &b) in thetas.iter().enumerate() {
                form += coef[i] * coef[j] * survival_inner_product(a, b);
            }
        }
        prop_assert!(form >= -1e-12);
    }

    #[test]
    fn minimax_bound_scales_as_its_formula(scale_fp in 0.1f64..10.0, scale_g in 0.1f64..10.0) {
        let base = LocalQuantities { x0: 1.0, f0: 1.0, f0_prime: -1.0, g0: 1.0 };
        let moved = LocalQuantities { f0_prime: -scale_fp, g0: scale_g, ..base };
        let k = NoiseKernel::Exponential;
        let ratio = minimax_bound_cdf(&moved, &k) / minimax_bound_cdf(&base, &k);
        let expected = scale_fp.powf(0.2) * scale_g.powf(0.4);
        prop_assert!((ratio / expected - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn perturbation_only_changes_the_window(
        x0 in 0.6f64..3.0,
        eps in 1e-3f64..0.05,
    ) {
        let truth = ConcaveCdf::sqrt_benchmark();
        prop_assume!(x0 - 10.0 * eps > 0.05);
        let p = perturb(&truth, x0, eps).unwrap();
        let ConcaveCdf::Perturbed { reach, .. } = &p else { unreachable!() };
        let (a, c) = (x0 - reach * eps, x0 + eps);
        for t in [0.5 * a, a - 1e-9, c + 1e-9, c + 1.0] {
            prop_assert!((p.cdf(t) - truth.cdf(t)).abs() <= 1e-14);
        }
        // concavity survives the flattening
        let (u, v) = (0.8 * a, c + 0.2);
        let mid = p.cdf(0.5 * (u + v));
        prop_assert!(mid >= 0.5 * (p.cdf(u) + p.cdf(v)) - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hellinger_satisfies_the_triangle_inequality(
        a in mixtures(),
        b in mixtures(),
        c in mixtures(),
    ) {
        let k = NoiseKernel::Exponential;
        let h = |p: &ConcaveCdf, q: &ConcaveCdf| {
            deconcave::hellinger_squared(p, q, &k, 1e-11).unwrap().max(0.0).sqrt()
        };
        prop_assert!(h(&a, &c) <= h(&a, &b) + h(&b, &c) + 1e-7);
    }

    #[test]
    fn convolved_density_matches_quadrature(
        f in mixtures(),
        k in kernels(),
        z in 0.05f64..10.0,
    ) {
        let closed = f.convolved_density(&k, z).unwrap();
        let num = f.convolved_density_quadrature(&k, z, 1e-10).unwrap();
        prop_assert!((closed - num).abs() <= 1e-7, "closed {closed} vs quadrature {num}");
    }

    #[test]
    fn least_squares_fit_beats_feasible_competitors(
        seed in 0u64..1_000_000,
        n in 3usize..=8,
        mask in 1u8..=255,
        raw in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let truth = ConcaveCdf::sqrt_benchmark();
        let k = NoiseKernel::Exponential;
        let sample = draw_sample(&truth, &k, n, seed).unwrap();
        let recip = solve_reciprocal(&k, 1e-3, sample.max()).unwrap();
        let un = UnProcess::new(&sample, recip).unwrap();
        let fit = deconcave::fit_lse_from(&un, 1e-10, 200, None).unwrap();

        let candidates = un.candidates();
        let chosen: Vec<f64> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> (i % 8) & 1 == 1)
            .map(|(_, &t)| t)
            .collect();
        prop_assume!(!chosen.is_empty());
        let total: f64 = raw[..chosen.len()].iter().sum();
        let weights: Vec<f64> = raw[..chosen.len()].iter().map(|w| w / total).collect();
        let rival = ConcaveCdf::mixture(&chosen, &weights).unwrap();
        prop_assert!(fit.objective <= un.objective(&rival).unwrap() + 1e-10);
    }

    #[test]
    fn likelihood_fit_beats_feasible_competitors(
        seed in 0u64..1_000_000,
        n in 3usize..=8,
        mask in 1u8..=255,
        raw in prop::collection::vec(0.01f64..1.0, 8),
    ) {
        let truth = ConcaveCdf::sqrt_benchmark();
        let k = NoiseKernel::Exponential;
        let sample = draw_sample(&truth, &k, n, seed).unwrap();
        let fit = fit_mle(&sample, &k, 1e-9, 300).unwrap();

        let distinct = sample.distinct_with_counts();
        let chosen: Vec<f64> = distinct
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> (i % 8) & 1 == 1)
            .map(|(_, d)| d.0)
            .collect();
        prop_assume!(!chosen.is_empty());
        let total: f64 = raw[..chosen.len()].iter().sum();
        let weights: Vec<f64> = raw[..chosen.len()].iter().map(|w| w / total).collect();
        let rival = ConcaveCdf::mixture(&chosen, &weights).unwrap();
        prop_assert!(fit.loglik >= log_likelihood(&rival, &sample, &k).unwrap() - 1e-10);
    }
}
