//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every public operation reports failure through this enum; no NaN or
/// infinity is returned silently from the public API.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The argument sits on a pole of the Gamma function.
    #[error("Gamma function pole at {re} + {im}i")]
    Pole {
        /// Real part of the offending argument.
        re: f64,
        /// Imaginary part of the offending argument.
        im: f64,
    },
    /// A series did not reach its stopping criterion within the term cap.
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    /// A quadrature rule could not meet its tolerance.
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    /// An argument lies outside the supported domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A value left the representable double-precision range.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Two contours of a double integral come closer than allowed.
    #[error("contours too close: distance {distance} < {minimum}")]
    Separation {
        /// Smallest distance found between the discretized contours.
        distance: f64,
        /// Required minimum distance.
        minimum: f64,
    },
    /// A computed squared singular value is not positive.
    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),
    /// A determinant that must be positive came out non-positive.
    #[error("sign error: {0}")]
    Sign(String),
    /// A histogram grid has fewer than two edges or is not increasing.
    #[error("empty or invalid grid: {0}")]
    EmptyGrid(String),
    /// An invalid model configuration or request.
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
