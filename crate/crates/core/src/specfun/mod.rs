//! Overflow-safe special functions of complex order and positive real
//! argument: log-Gamma, modified Bessel functions `I` and `K`, and the
//! Meijer function `G^{k,0}_{0,k}`.
//!
//! Every Gamma product used by the kernels is assembled as a complex
//! logarithm and exponentiated once, through [`LogComplex`].

mod bessel;
mod gamma;
mod meijer;

pub use bessel::{bessel_i, bessel_j_real, bessel_k};
pub use gamma::{log_gamma, ln_gamma_real};
pub use meijer::{ln_meijer_g_m0, meijer_g_m0};

pub(crate) use bessel::{ln_bessel_i, ln_bessel_k, ln_hyp0f1};
pub(crate) use gamma::ln_gamma;
pub(crate) use meijer::ln_meijer_g_fast;

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Largest log-modulus that still exponentiates to a finite `f64`.
pub const MAX_LN_F64: f64 = 709.78;

/// A complex number stored as `exp(log_modulus + i·phase)`.
///
/// The phase is kept in `(−π, π]`. A zero value is represented by a
/// `log_modulus` of negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    /// Natural logarithm of the modulus.
    pub log_modulus: f64,
    /// Argument in radians, normalized into `(−π, π]`.
    pub phase: f64,
}

/// Reduces an angle into `(−π, π]`.
fn normalize_phase(phase: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut p = phase.rem_euclid(two_pi);
    if p > PI {
        p -= two_pi;
    }
    if p <= -PI {
        p += two_pi;
    }
    p
}

impl LogComplex {
    /// The value one.
    pub const ONE: LogComplex = LogComplex { log_modulus: 0.0, phase: 0.0 };

    /// Builds a value from its log-modulus and an arbitrary phase.
    pub fn new(log_modulus: f64, phase: f64) -> Self {
        LogComplex { log_modulus, phase: normalize_phase(phase) }
    }

    /// Builds a value from a complex logarithm `w`, i.e. represents `exp(w)`.
    pub fn from_log(w: Complex64) -> Self {
        Self::new(w.re, w.im)
    }

    /// Builds the logarithmic representation of an ordinary complex number.
    pub fn from_complex(z: Complex64) -> Self {
        if z == Complex64::new(0.0, 0.0) {
            LogComplex { log_modulus: f64::NEG_INFINITY, phase: 0.0 }
        } else {
            LogComplex { log_modulus: z.norm().ln(), phase: z.arg() }
        }
    }

    /// Complex logarithm `log_modulus + i·phase` (principal branch).
    pub fn ln(self) -> Complex64 {
        Complex64::new(self.log_modulus, self.phase)
    }

    /// Converts back to an ordinary complex number.
    ///
    /// Returns [`Error::Overflow`] when the modulus exceeds the `f64` range.
    pub fn exp(self) -> Result<Complex64> {
        if self.log_modulus > MAX_LN_F64 {
            return Err(Error::Overflow(format!(
                "log-modulus {} exceeds the double-precision range",
                self.log_modulus
            )));
        }
        if self.log_modulus == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(Complex64::from_polar(self.log_modulus.exp(), self.phase))
    }

    /// Complex conjugate.
    pub fn conj(self) -> Self {
        Self::new(self.log_modulus, -self.phase)
    }

    /// Reciprocal.
    pub fn recip(self) -> Self {
        Self::new(-self.log_modulus, -self.phase)
    }
}

impl std::ops::Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        LogComplex::new(self.log_modulus + rhs.log_modulus, self.phase + rhs.phase)
    }
}

impl std::ops::Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: LogComplex) -> LogComplex {
        LogComplex::new(self.log_modulus - rhs.log_modulus, self.phase - rhs.phase)
    }
}

/// Exponentiates a complex logarithm, reporting overflow as an error.
pub(crate) fn exp_checked(w: Complex64) -> Result<Complex64> {
    LogComplex::from_log(w).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_is_normalized() {
        let z = LogComplex::new(0.0, 3.0 * PI);
        assert!((z.phase - PI).abs() < 1e-12);
        let w = LogComplex::new(0.0, -PI);
        assert!((w.phase - PI).abs() < 1e-12);
    }

    #[test]
    fn multiplication_adds_fields() {
        let a = LogComplex::from_complex(Complex64::new(1.0, 2.0));
        let b = LogComplex::from_complex(Complex64::new(-3.0, 0.5));
        let prod = (a * b).exp().unwrap();
        let direct = Complex64::new(1.0, 2.0) * Complex64::new(-3.0, 0.5);
        assert!((prod - direct).norm() < 1e-13);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(LogComplex::new(800.0, 0.0).exp(), Err(Error::Overflow(_))));
    }

    #[test]
    fn zero_round_trips() {
        let z = LogComplex::from_complex(Complex64::new(0.0, 0.0));
        assert_eq!(z.exp().unwrap(), Complex64::new(0.0, 0.0));
    }
}
