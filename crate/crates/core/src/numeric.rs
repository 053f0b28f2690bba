//! Small numeric utilities shared across the crate: adaptive quadrature,
//! bisection, seeded-stream derivation, medians and log-log slopes, and a
//! thin wrapper over dense linear solves.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Adaptive Simpson integration of `f` over consecutive panels.
///
/// `edges` must be a sorted list of at least two panel boundaries; the
/// integrand is assumed smooth inside each panel (put kinks and jumps on
/// edges). `tol` is an absolute tolerance for the whole integral.
pub fn integrate(f: impl Fn(f64) -> f64, edges: &[f64], tol: f64) -> Result<f64> {
    if edges.len() < 2 {
        return Err(Error::Invalid("integrate: need at least two panel edges".into()));
    }
    if edges.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Invalid("integrate: edges must be sorted".into()));
    }
    let panels = edges.len() - 1;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a == b {
            continue;
        }
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (f(a), f(m), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(&f, a, b, fa, fm, fb, whole, panel_tol, 52)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (1.0 + a.abs()) {
        let value = left + right + delta / 15.0;
        if !value.is_finite() {
            return Err(Error::QuadratureFailure {
                lo: a,
                hi: b,
                reason: "non-finite integrand".into(),
            });
        }
        return Ok(value);
    }
    if depth == 0 {
        return Err(Error::QuadratureFailure {
            lo: a,
            hi: b,
            reason: "recursion limit reached".into(),
        });
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Bisection root finding on `[lo, hi]`; requires a sign change.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Invalid(format!(
            "bisect: no sign change on [{lo}, {hi}] (f = {fa:e}, {fb:e})"
        )));
    }
    let mut fa = fa;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a <= tol {
            return Ok(0.5 * (a + b));
        }
    }
    Ok(0.5 * (a + b))
}

/// splitmix64 step; the standard 64-bit finalizer-based generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives one stream seed from several components (base seed, sample size,
/// replication index, ...) so replications are independent of evaluation
/// order and worker layout.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut state = 0x6a09e667f3bcc908; // fractional bits of sqrt(2)
    let mut out = 0;
    for &p in parts {
        state ^= p;
        out = splitmix64(&mut state);
    }
    out
}

/// Median of a slice (average of the two central order statistics for even
/// lengths). Panics on empty input.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Solves the dense system `A x = b` (row-major square `a`).
pub fn solve_linear(a: &[f64], b: &[f64], dim: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), dim * dim);
    debug_assert_eq!(b.len(), dim);
    if dim == 0 {
        return Some(Vec::new());
    }
    let m = DMatrix::from_row_slice(dim, dim, a);
    let rhs = DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        // Simpson is exact on cubics; the adaptive wrapper should agree to
        // rounding on [0, 2].
        let v = integrate(|x| x * x * x - 2.0 * x + 1.0, &[0.0, 2.0], 1e-12).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn integrates_across_panels_with_kink() {
        let f = |x: f64| if x < 1.0 { x } else { 2.0 - x };
        let v = integrate(f, &[0.0, 1.0, 2.0], 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn integrate_matches_exp_tail() {
        let v = integrate(|x: f64| (-x).exp(), &[0.0, 1.0, 5.0, 30.0], 1e-11).unwrap();
        assert_relative_eq!(v, 1.0 - (-30.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert_relative_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-11);
    }

    #[test]
    fn bisect_rejects_same_sign() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn slope_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -0.4 * v + 7.0).collect();
        assert_relative_eq!(ls_slope(&x, &y), -0.4, epsilon = 1e-12);
    }

    #[test]
    fn mix_seed_depends_on_every_part() {
        let a = mix_seed(&[1, 2, 3]);
        assert_ne!(a, mix_seed(&[1, 2, 4]));
        assert_ne!(a, mix_seed(&[0, 2, 3]));
        assert_eq!(a, mix_seed(&[1, 2, 3]));
    }

    #[test]
    fn solves_small_system() {
        // [2 1; 1 3] x = [3; 5] -> x = [4/5, 7/5]
        let x = solve_linear(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0], 2).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.4, epsilon = 1e-12);
    }
}
