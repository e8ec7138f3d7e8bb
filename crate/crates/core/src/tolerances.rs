//! Centralized numerical tolerances.
//!
//! Every threshold used by the library, the validation suite and the
//! acceptance tests is defined here with its rationale. Acceptance
//! thresholds are the targets the checks must meet; internal tolerances are
//! the accuracy the algorithms aim for so that those targets have margin.

// ─────────────────────────────────────────────────────────────────────
// Special functions
// ─────────────────────────────────────────────────────────────────────

/// Distance from a non-positive integer at which `log Γ` reports a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

/// Stopping rule for power series: stop once the latest term is below this
/// fraction of the partial sum (and the remaining terms shrink geometrically).
pub const SERIES_REL_TOL: f64 = 1e-16;

/// Hard cap on the number of power-series terms.
pub const SERIES_TERM_CAP: usize = 10_000;

/// Distance kept between the `K_κ` integration line and the boundary
/// `|Im τ| = π/2` of the strip where the cosh integrand decays.
///
/// Smaller values keep the line closer to the saddle for large imaginary
/// orders; larger values widen the analyticity strip of the trapezoid rule.
pub const BESSEL_K_LINE_MARGIN: f64 = 0.15;

/// Convergence test of the `K_κ` trapezoid rule, relative to the integral of
/// the integrand modulus along the line.
pub const BESSEL_K_TRAPEZOID_TOL: f64 = 1e-14;

/// Relative tolerance of the Mellin–Barnes integral for `G^{k,0}_{0,k}`.
///
/// Three digits of margin under the required relative accuracy of `1e−9`.
pub const MELLIN_BARNES_REL_TOL: f64 = 1e-12;

/// Drop of the Mellin–Barnes log-integrand (from its peak) at which the
/// vertical line is truncated; `e^{−40} ≈ 4e−18`.
pub const MELLIN_BARNES_TAIL_DROP: f64 = 40.0;

// ─────────────────────────────────────────────────────────────────────
// Contours
// ─────────────────────────────────────────────────────────────────────

/// Gap between the `t` rectangle `Σ_n` and the `u` line `Re u = −1/2`.
pub const CONTOUR_GAP: f64 = 0.05;

/// Half-height of the `t` rectangle `Σ_n` and of the loop `Σ_∞`.
pub const T_CONTOUR_HALF_HEIGHT: f64 = 0.5;

/// Ratio of panel length to the distance from the other contour; keeps the
/// `1/(u − t)` singularity at least six panel half-widths away.
pub const PANEL_GRADING_RATIO: f64 = 1.0 / 3.0;

/// Panel length far from the other contour.
pub const MAX_PANEL_LENGTH: f64 = 0.25;

/// Gauss–Legendre nodes per panel at the coarse level; the fine level of
/// each double-contour evaluation doubles it.
pub const NODES_PER_PANEL: usize = 8;

/// Drop of a log-integrand (from its peak) at which an infinite contour is
/// truncated; `e^{−40} ≈ 4e−18`.
pub const CONTOUR_TAIL_DROP: f64 = 40.0;

/// Default absolute tolerance of kernel evaluations.
pub const KERNEL_ABS_TOL: f64 = 1e-9;

/// Separation tolerance: contours closer than `CONTOUR_GAP·(1 − this)` fail.
pub const SEPARATION_SLACK: f64 = 1e-9;

/// Two points of one level closer than this are a collision; the joint
/// density is a removable `0/0` there and is not evaluated.
pub const COLLISION_SPACING: f64 = 1e-12;

/// Required relative agreement of the two `ψ_k` routes of the oracle.
pub const PSI_ROUTE_REL_TOL: f64 = 1e-8;

/// Inner levels of a nested quadrature run this factor tighter than the
/// outermost one, so that their noise stays below the outer error target.
pub const NESTED_TOL_FACTOR: f64 = 1e-2;

// ─────────────────────────────────────────────────────────────────────
// Acceptance thresholds
// ─────────────────────────────────────────────────────────────────────

/// Criterion 1: `‖A·C − I‖_max`.
pub const HANKEL_INVERSE_TOL: f64 = 1e-10;

/// Criterion 2: relative agreement of the finite-sum and contour kernels.
pub const REPRESENTATION_REL_TOL: f64 = 1e-6;

/// Criterion 3: relative agreement of brute-force and determinantal
/// correlation functions.
pub const EYNARD_MEHTA_REL_TOL: f64 = 1e-4;

/// Criterion 4: deviation of the integrated joint density from one.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Criterion 5: histogram bins must sit within this many standard errors.
pub const MONTE_CARLO_SIGMAS: f64 = 3.0;

/// Criterion 6: relative agreement at `b = 1e−4` with the Ginibre kernel.
pub const SMALL_COUPLING_REL_TOL: f64 = 1e-3;

/// Criterion 7: the integral identity for `I`.
pub const I_INTEGRAL_REL_TOL: f64 = 1e-8;

/// Criterion 7: small-coupling limit of `2(b√y)^u K_u(2b√y)/Γ(u)`,
/// checked at `b = 1e−6`.
pub const K_SMALL_B_REL_TOL: f64 = 1e-4;

/// Criterion 7: pointwise exponential representation of `G^{1,0}`.
pub const G_EXP_REL_TOL: f64 = 1e-10;

/// Criterion 7: `K_u = K_{−u}`.
pub const K_SYMMETRY_TOL: f64 = 1e-10;

/// Criterion 7: the finite Gamma-ratio sum identity.
pub const SUM_GAMMA_REL_TOL: f64 = 1e-10;

/// Criterion 8: Bessel-kernel reduction of the limiting kernel.
pub const BESSEL_KERNEL_REL_TOL: f64 = 1e-8;

/// Criterion 9: final sup-distance of each scaling-limit sequence.
pub const SCALING_FINAL_TOL: f64 = 5e-2;

/// Criterion 9: interpolating kernel at `α = 1e−3` vs the Ginibre limit.
pub const INTERPOLATING_SMALL_ALPHA_REL_TOL: f64 = 1e-2;

/// Criterion 9: mass of the rescaled Gaussian term at `b²/n = 10⁴`.
pub const DELTA_MASS_TOL: f64 = 1e-3;

/// Criterion 10: the `m = 2` legacy identity.
pub const LEGACY_MAP_REL_TOL: f64 = 1e-8;
