//! Coupled product-matrix point process: exact sampling, finite-`n`
//! correlation kernels in two independent representations, hard-edge
//! limiting kernels and their scaling-limit verification.
//!
//! The model consists of `m` complex Gaussian matrices `G_1..G_m` where the
//! last factor is coupled to the product of the others through a parameter
//! `b`. The squared singular values of all partial products `G_l···G_1` form
//! a multi-level determinantal point process.

pub mod contours;
pub mod error;
pub mod kernel_finite;
pub mod kernel_limit;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod specfun;
pub mod tolerances;
pub mod validation;

pub use error::{Error, Result};

/// Complex scalar type used for contour variables and complex orders.
pub type ComplexScalar = num_complex::Complex64;
