//! Meijer `G^{k,0}_{0,k}(−; ν₁..ν_k | y)` by Mellin–Barnes quadrature on a
//! vertical line to the right of every Gamma pole.

use super::bessel::ln_bessel_k;
use super::gamma::{digamma_real, ln_gamma};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, AdaptiveOptions};
use crate::tolerances::{MELLIN_BARNES_REL_TOL, MELLIN_BARNES_TAIL_DROP};
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

/// Largest log-cancellation accepted on the line when `y < 1`.
const SMALL_Y_LOSS: f64 = 2.0;

/// Largest truncation height tried for the Mellin–Barnes line.
const MAX_HALF_HEIGHT: f64 = 4000.0;

/// Meijer `G^{k,0}_{0,k}(−; ν | y)` for `y > 0`, always by Mellin–Barnes
/// quadrature.
///
/// The line `Re u = c` is placed at the real saddle point of the integrand
/// (where `Σ ψ(c + ν_j) = ln y`), but never closer to the rightmost Gamma
/// pole than `min(1/2, 2/|ln y|)`. For small `y` the saddle runs into that
/// pole, and the narrower gap caps the cancellation factor `y^{−gap}` at
/// `e²`.
pub fn meijer_g_m0(params: &[f64], y: f64) -> Result<f64> {
    check_arguments(params, y)?;
    let (ln_value, _) = ln_mellin_barnes(params, y)?;
    Ok(ln_value.exp())
}

/// Natural logarithm of [`meijer_g_m0`], for arguments where the value
/// itself leaves the `f64` range.
pub fn ln_meijer_g_m0(params: &[f64], y: f64) -> Result<f64> {
    check_arguments(params, y)?;
    Ok(ln_mellin_barnes(params, y)?.0)
}

fn check_arguments(params: &[f64], y: f64) -> Result<()> {
    if params.is_empty() {
        return Err(Error::Domain("meijer_g_m0 needs at least one parameter".into()));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::Domain("meijer_g_m0 parameters must be finite".into()));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("meijer_g_m0 argument {y} must be finite and > 0")));
    }
    Ok(())
}

/// Natural logarithm of `G^{k,0}_{0,k}` together with the line abscissa used.
fn ln_mellin_barnes(params: &[f64], y: f64) -> Result<(f64, f64)> {
    let ln_y = y.ln();
    let min_nu = params.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap = if ln_y < 0.0 { (SMALL_Y_LOSS / -ln_y).min(0.5) } else { 0.5 };
    let c_min = -min_nu + gap;
    let slope = |c: f64| params.iter().map(|&nu| digamma_real(c + nu)).sum::<f64>() - ln_y;
    let c = if slope(c_min) >= 0.0 {
        c_min
    } else {
        let mut lo = c_min;
        let mut hi = c_min + 1.0;
        while slope(hi) < 0.0 {
            lo = hi;
            hi = c_min + 2.0 * (hi - c_min);
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let ln_integrand = |sigma: f64| {
        let u = Complex64::new(c, sigma);
        params.iter().map(|&nu| ln_gamma(u + nu)).sum::<Complex64>() - u * ln_y
    };
    let peak = ln_integrand(0.0).re;
    let mut half_height = 1.0;
    while ln_integrand(half_height).re > peak - MELLIN_BARNES_TAIL_DROP {
        half_height *= 1.25;
        if half_height > MAX_HALF_HEIGHT {
            return Err(Error::QuadratureFailure(format!(
                "Mellin-Barnes integrand for G(y = {y}) does not decay by |Im u| = {MAX_HALF_HEIGHT}"
            )));
        }
    }
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: MELLIN_BARNES_REL_TOL, max_segments: 2000 };
    let result = integrate(|s: f64| (ln_integrand(s) - peak).exp().re, 0.0, half_height, opts)?;
    if !(result.value > 0.0) {
        return Err(Error::QuadratureFailure(format!(
            "Mellin-Barnes value for G(y = {y}) is not positive ({})",
            result.value
        )));
    }
    Ok((result.value.ln() + peak - PI.ln(), c))
}

/// `ln G^{k,0}_{0,k}(ν | y)` with closed forms for `k ≤ 2`.
pub(crate) fn ln_meijer_g_fast(params: &[f64], y: f64) -> Result<f64> {
    check_arguments(params, y)?;
    match params {
        [nu] => Ok(nu * y.ln() - y),
        [a, b] => {
            let k = ln_bessel_k(Complex64::new(a - b, 0.0), 2.0 * y.sqrt())?;
            Ok(LN_2 + 0.5 * (a + b) * y.ln() + k.re)
        }
        _ => Ok(ln_mellin_barnes(params, y)?.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_parameter_is_exponential() {
        let y: f64 = 1.5;
        let g = meijer_g_m0(&[2.0], y).unwrap();
        let closed = y * y * (-y).exp();
        assert!(((g - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn two_parameters_give_bessel_k() {
        let y: f64 = 4.0;
        let g = meijer_g_m0(&[1.0, 0.0], y).unwrap();
        let closed = ln_meijer_g_fast(&[1.0, 0.0], y).unwrap().exp();
        assert!(((g - closed) / closed).abs() < 1e-10);
    }

    #[test]
    fn three_parameters_match_mpmath() {
        let g = meijer_g_m0(&[0.0, 0.0, 0.0], 50.0).unwrap();
        let frozen = 1.516_669_599_854_180_8e-5;
        assert!(((g - frozen) / frozen).abs() < 1e-10);
        let g = meijer_g_m0(&[1.0, 0.5, 2.0, 0.0], 0.3).unwrap();
        let frozen = 0.593_791_451_045_094_7;
        assert!(((g - frozen) / frozen).abs() < 1e-10);
    }

    #[test]
    fn three_parameter_tail_follows_the_asymptotic() {
        // G ~ (2π)/√3 · y^θ e^{−3 y^{1/3}}, θ = −1/3 for ν = (0, 0, 0).
        let ratio = |y: f64| {
            let asym = 2.0 * PI / 3f64.sqrt() * y.powf(-1.0 / 3.0) * (-3.0 * y.cbrt()).exp();
            meijer_g_m0(&[0.0, 0.0, 0.0], y).unwrap() / asym
        };
        let errors: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&y| (ratio(y) - 1.0).abs()).collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
        assert!(errors[2] < 0.01);
    }

    #[test]
    fn non_positive_argument_is_rejected() {
        assert!(matches!(meijer_g_m0(&[0.0], 0.0), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn one_parameter_matches_pointwise(y in 0.01..20.0f64, nu in 0.0..4.0f64) {
            let g = meijer_g_m0(&[nu], y).unwrap();
            let closed = y.powf(nu) * (-y).exp();
            prop_assert!(((g - closed) / closed).abs() < 1e-10);
        }
    }
}
