//! Complex log-Gamma from the Lanczos approximation, with the reflection
//! formula for `Re z < 1/2` and a cancellation-free `log sin(πz)`.

use super::LogComplex;
use crate::error::{Error, Result};
use crate::tolerances::POLE_TOLERANCE;
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

/// Lanczos shift parameter `g`.
const LANCZOS_G: f64 = 7.0;

/// Lanczos coefficients for `g = 7` and nine terms.
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln √(2π)`.
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Returns `log Γ(z)` as a [`LogComplex`].
///
/// Fails with [`Error::Pole`] when `z` lies within [`POLE_TOLERANCE`] of a
/// non-positive integer and with [`Error::Domain`] for non-finite input.
pub fn log_gamma(z: Complex64) -> Result<LogComplex> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("log_gamma argument {z} is not finite")));
    }
    if is_pole(z) {
        return Err(Error::Pole { re: z.re, im: z.im });
    }
    Ok(LogComplex::from_log(ln_gamma(z)))
}

/// True when `z` is within [`POLE_TOLERANCE`] of a non-positive integer.
pub(crate) fn is_pole(z: Complex64) -> bool {
    let k = z.re.round();
    k <= 0.0 && (z - Complex64::new(k, 0.0)).norm() < POLE_TOLERANCE
}

/// Unchecked complex `log Γ(z)`.
///
/// The imaginary part is a continuous-enough branch for exponentiation; it is
/// not reduced to `(−π, π]`. At a pole the real part is `+∞`.
pub(crate) fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma_lanczos(Complex64::new(1.0, 0.0) - z)
    } else {
        ln_gamma_lanczos(z)
    }
}

/// Lanczos sum for `Re z ≥ 1/2`.
fn ln_gamma_lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (z + 0.5) * t.ln() - t + acc.ln() + LN_SQRT_2PI
}

/// Real `ln Γ(x)` for `x > 0`.
pub fn ln_gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        return ln_gamma_real(x + 1.0) - x.ln();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (z + 0.5) * t.ln() - t + acc.ln() + LN_SQRT_2PI
}

/// `exp(w) − 1` for complex `w`, accurate when `w` is small.
fn expm1_complex(w: Complex64) -> Complex64 {
    let (s, c) = w.im.sin_cos();
    let em1 = w.re.exp_m1();
    let half = (0.5 * w.im).sin();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// `log sin(πz)` without overflow for large `|Im z|` and without
/// cancellation near the zeros of the sine.
pub(crate) fn ln_sin_pi(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return ln_sin_pi(z.conj()).conj();
    }
    // Shift to |Re r| ≤ 1/2; sin(π(r + k)) = (−1)^k sin(πr).
    let k = z.re.round();
    let r = Complex64::new(z.re - k, z.im);
    // sin(πr) = e^{−iπr} (e^{2iπr} − 1) / (2i), with |e^{2iπr}| ≤ 1.
    let w = Complex64::new(-2.0 * PI * r.im, 2.0 * PI * r.re);
    let e = expm1_complex(w);
    -Complex64::i() * PI * r + e.ln() - Complex64::new(LN_2, 0.5 * PI) + Complex64::new(0.0, PI * k)
}

/// Digamma function `ψ(x)` for real `x > 0`.
pub(crate) fn digamma_real(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    acc + x.ln() - 0.5 * inv - series
}
