//! Real-line quadrature: Gauss–Legendre rules by Newton iteration and an
//! adaptive Gauss–Kronrod (7/15) integrator for real- or complex-valued
//! integrands on finite and semi-infinite intervals.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

/// Value types the adaptive integrator accepts.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    /// Additive identity.
    fn zero() -> Self;
    /// Modulus used for error control.
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Outcome of a quadrature: value, error estimate and number of integrand
/// evaluations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T = Complex64> {
    /// Approximation of the integral.
    pub value: T,
    /// Non-negative estimate of the absolute error.
    pub error_estimate: f64,
    /// Number of integrand evaluations.
    pub nodes_used: usize,
}

/// Stopping parameters of the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOptions {
    /// Absolute error target.
    pub abs_tol: f64,
    /// Relative error target (relative to the current integral estimate).
    pub rel_tol: f64,
    /// Maximum number of subintervals before giving up.
    pub max_segments: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-12, max_segments: 1000 }
    }
}

/// A Gauss–Legendre rule on `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    /// Nodes in increasing order.
    pub nodes: Vec<f64>,
    /// Matching positive weights.
    pub weights: Vec<f64>,
}

/// Largest Gauss–Legendre order served from the cache.
const MAX_CACHED_ORDER: usize = 64;

/// Computes an `n`-point Gauss–Legendre rule by Newton iteration on the
/// Legendre three-term recurrence.
fn compute_gauss_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

/// Returns the cached `n`-point Gauss–Legendre rule (`1 ≤ n ≤ 64`), or
/// computes it on the fly for larger `n`.
pub fn gauss_legendre(n: usize) -> std::borrow::Cow<'static, GaussRule> {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    if n <= MAX_CACHED_ORDER {
        let rules = RULES.get_or_init(|| (1..=MAX_CACHED_ORDER).map(compute_gauss_rule).collect());
        std::borrow::Cow::Borrowed(&rules[n - 1])
    } else {
        std::borrow::Cow::Owned(compute_gauss_rule(n))
    }
}

/// Kronrod abscissae of the 15-point rule (non-negative half).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

/// Kronrod weights matching [`XGK`].
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights of the embedded 7-point rule (nodes `XGK[1,3,5,7]`).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One Gauss–Kronrod panel: `(kronrod value, error estimate)`.
fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut values = [(T::zero(), T::zero()); 7];
    let mut abs_sum = fc.magnitude() * WGK[7];
    for (j, &x) in XGK.iter().take(7).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        values[j] = (f1, f2);
        kronrod = kronrod + (f1 + f2) * WGK[j];
        abs_sum += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[7] * (fc - mean).magnitude();
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((*f1 - mean).magnitude() + (*f2 - mean).magnitude());
    }
    let abs_half = half.abs();
    let mut err = (kronrod - gauss).magnitude() * abs_half;
    let resasc = asc * abs_half;
    let resabs = abs_sum * abs_half;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (kronrod * half, err)
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// The subinterval with the largest error is bisected until the total error
/// estimate meets `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    opts: AdaptiveOptions,
) -> Result<QuadratureResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits [{a}, {b}] must be finite")));
    }
    let mut segments: Vec<(f64, f64, T, f64)> = Vec::new();
    let (v, e) = gk15(&mut f, a, b);
    segments.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let total = segments.iter().fold(T::zero(), |acc, s| acc + s.2);
        let error: f64 = segments.iter().map(|s| s.3).sum();
        if !total.magnitude().is_finite() || !error.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand value on [{a}, {b}]"
            )));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if error <= target {
            return Ok(QuadratureResult { value: total, error_estimate: error, nodes_used: evaluations });
        }
        if segments.len() >= opts.max_segments {
            let worst = segments
                .iter()
                .max_by(|x, y| x.3.total_cmp(&y.3))
                .map(|s| (s.0, s.1))
                .unwrap_or((a, b));
            return Err(Error::QuadratureFailure(format!(
                "adaptive rule on [{a}, {b}] reached {} segments with error {error:e} > {target:e}; worst panel [{}, {}]",
                segments.len(),
                worst.0,
                worst.1
            )));
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("segment list is never empty");
        let (lo, hi, _, _) = segments.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evaluations += 30;
        segments.push((lo, mid, v1, e1));
        segments.push((mid, hi, v2, e2));
    }
}

/// Integrates `f` over `[a, ∞)` through the map `x = a + scale·s/(1−s)`.
pub fn integrate_semi_infinite<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    scale: f64,
    opts: AdaptiveOptions,
) -> Result<QuadratureResult<T>> {
    integrate(
        |s: f64| {
            let one_minus = 1.0 - s;
            let x = a + scale * s / one_minus;
            f(x) * (scale / (one_minus * one_minus))
        },
        0.0,
        1.0,
        opts,
    )
}
