//! Brute-force ground truth for very small systems.
//!
//! Everything here works from the joint density of all `m·n` points and
//! from plain adaptive quadrature; nothing goes through the kernel
//! machinery. Determinants are expanded by cofactors (`n ≤ 4`) after the
//! entries have been rescaled row- and column-wise from their logarithms.
//!
//! Normalizations use `Z_{n,m}(b) = (n!)^m b^{n(n−1)/2} ∏_j ∏_{l=0}^{m−1}
//! Γ(j+ν_l)`, with the `l = 0` factor `∏_j Γ(j)` included.

use crate::error::{Error, Result};
use crate::model::{ModelConfig, PointConfiguration};
use crate::quadrature::{integrate_semi_infinite, AdaptiveOptions, QuadratureResult};
use crate::specfun::{ln_bessel_i, ln_bessel_k, ln_gamma, ln_gamma_real, ln_meijer_g_m0};
use crate::tolerances::{COLLISION_SPACING, NESTED_TOL_FACTOR, PSI_ROUTE_REL_TOL};
use num_complex::Complex64;
use std::cell::RefCell;
use std::f64::consts::{LN_2, PI};

/// Largest `n` accepted by the cofactor expansion.
pub const MAX_ORACLE_N: usize = 4;

/// Largest number of variables integrated by [`brute_correlation`].
pub const MAX_QUADRATURE_DIMENSION: usize = 4;

/// Real part of the line carrying the contour route of `ψ_k`.
const PSI_LINE: f64 = 1.0;

/// Exponents below this underflow `f64`; the integrand is zero there.
const UNDERFLOW_LN: f64 = -745.0;

/// Tightest relative tolerance asked of an inner quadrature stage.
const NESTED_TOL_FLOOR: f64 = 1e-13;

/// Above this argument `I_k` is taken from its large-argument expansion.
const BESSEL_I_ASYMPTOTIC_ARG: f64 = 60.0;

/// Segment budget of each one-dimensional stage of a nested quadrature.
const NESTED_MAX_SEGMENTS: usize = 400;

/// A full point configuration of the coupled model.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDensityQuery {
    /// Model parameters.
    pub cfg: ModelConfig,
    /// All `m` levels with `n` positive points each.
    pub y: PointConfiguration,
}

/// Sign and log-modulus of a real number.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SignedLog {
    sign: f64,
    ln: f64,
}

impl SignedLog {
    fn times(self, other: SignedLog) -> SignedLog {
        SignedLog { sign: self.sign * other.sign, ln: self.ln + other.ln }
    }
}

/// Determinant of a small matrix by Laplace expansion along the first row.
fn cofactor_det(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => {
            let mut total = 0.0;
            for col in 0..n {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(k, _)| k != col).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * a[0][col] * cofactor_det(&minor);
            }
            total
        }
    }
}

/// Determinant of `[exp(ln_entries[j][k])]`, returned as sign and log.
///
/// Rows and then columns are divided by their largest entry before the
/// expansion, so entries spanning many orders of magnitude do not overflow.
fn log_det(ln_entries: &[Vec<f64>]) -> SignedLog {
    let n = ln_entries.len();
    let mut shift = 0.0;
    let mut ln = ln_entries.to_vec();
    for row in ln.iter_mut() {
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top.is_finite() {
            shift += top;
            row.iter_mut().for_each(|v| *v -= top);
        }
    }
    for k in 0..n {
        let top = ln.iter().map(|row| row[k]).fold(f64::NEG_INFINITY, f64::max);
        if top.is_finite() {
            shift += top;
            ln.iter_mut().for_each(|row| row[k] -= top);
        }
    }
    let scaled: Vec<Vec<f64>> = ln.iter().map(|row| row.iter().map(|v| v.exp()).collect()).collect();
    let det = cofactor_det(&scaled);
    SignedLog { sign: det.signum() * (det != 0.0) as u8 as f64, ln: det.abs().ln() + shift }
}

fn ln_factorial(n: usize) -> f64 {
    ln_gamma_real(n as f64 + 1.0)
}

/// `ln Z_{n,m}(b)` of the coupled model.
pub fn log_normalization(cfg: &ModelConfig) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.n;
    let mut ln = cfg.m as f64 * ln_factorial(n) + (n * (n - 1) / 2) as f64 * cfg.b.ln();
    for j in 1..=n {
        for l in 0..cfg.m {
            ln += ln_gamma_real(j as f64 + cfg.nu_f(l));
        }
    }
    Ok(ln)
}

/// `ln Z^{Gin}_{n,M}` of the uncoupled product of `M = nus.len()` factors,
/// where `nus` lists `ν_1..ν_M`.
pub fn log_ginibre_normalization(n: usize, nus: &[u32]) -> f64 {
    let mut ln = nus.len() as f64 * ln_factorial(n);
    for j in 1..=n {
        ln += ln_gamma_real(j as f64);
        for &nu in nus {
            ln += ln_gamma_real(j as f64 + nu as f64);
        }
    }
    ln
}

fn check_points(y: &PointConfiguration, n: usize, levels: usize) -> Result<()> {
    if n > MAX_ORACLE_N {
        return Err(Error::Domain(format!("oracle densities need n ≤ {MAX_ORACLE_N}, got {n}")));
    }
    if y.levels.len() != levels {
        return Err(Error::Config(format!("expected {levels} levels, got {}", y.levels.len())));
    }
    for (l, level) in y.levels.iter().enumerate() {
        if level.len() != n {
            return Err(Error::Config(format!("level {} has {} points, expected {n}", l + 1, level.len())));
        }
        if let Some(bad) = level.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("point {bad} on level {} is not positive", l + 1)));
        }
        for i in 0..n {
            for j in i + 1..n {
                if (level[i] - level[j]).abs() < COLLISION_SPACING {
                    return Err(Error::Domain(format!(
                        "points {} and {} on level {} collide",
                        level[i],
                        level[j],
                        l + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// `det[(y_j^{l+1})^{ν} / (y_k^l)^{ν+1} · e^{−y_j^{l+1}/y_k^l}]`.
fn transition_det(upper: &[f64], lower: &[f64], nu: f64) -> SignedLog {
    let ln: Vec<Vec<f64>> = upper
        .iter()
        .map(|&yu| lower.iter().map(|&yl| nu * yu.ln() - (nu + 1.0) * yl.ln() - yu / yl).collect())
        .collect();
    log_det(&ln)
}

/// `det[(y_j^1)^{ν_1+k−1} e^{−y_j^1}]`.
fn first_level_det(points: &[f64], nu1: f64) -> SignedLog {
    let ln: Vec<Vec<f64>> = points
        .iter()
        .map(|&y| (0..points.len()).map(|k| (nu1 + k as f64) * y.ln() - y).collect())
        .collect();
    log_det(&ln)
}

/// `det[y_j^{(k−1)/2} I_{k−1}(2b√y_j)]` for `b > 0`.
fn bessel_det(points: &[f64], b: f64) -> Result<SignedLog> {
    let mut ln = Vec::with_capacity(points.len());
    for &y in points {
        let mut row = Vec::with_capacity(points.len());
        for k in 0..points.len() {
            row.push(0.5 * k as f64 * y.ln() + ln_bessel_i_integer(k, 2.0 * b * y.sqrt())?);
        }
        ln.push(row);
    }
    Ok(log_det(&ln))
}

/// `ln I_k(z)` for integer `k ≥ 0` and `z > 0`: the power series for
/// moderate `z`, the large-argument expansion
/// `e^z/√(2πz) Σ_j (−1)^j a_j(k)/z^j` beyond [`BESSEL_I_ASYMPTOTIC_ARG`].
fn ln_bessel_i_integer(k: usize, z: f64) -> Result<f64> {
    if z < BESSEL_I_ASYMPTOTIC_ARG {
        return Ok(ln_bessel_i(Complex64::new(k as f64, 0.0), z)?.re);
    }
    let mu = 4.0 * (k * k) as f64;
    let (mut term, mut sum) = (1.0_f64, 1.0_f64);
    for j in 1..40 {
        let odd = (2 * j - 1) as f64;
        let next = -term * (mu - odd * odd) / (8.0 * j as f64 * z);
        if next.abs() >= term.abs() || next == 0.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(z - 0.5 * (2.0 * PI * z).ln() + sum.ln())
}

fn vandermonde(points: &[f64]) -> SignedLog {
    let mut out = SignedLog { sign: 1.0, ln: 0.0 };
    for j in 0..points.len() {
        for k in j + 1..points.len() {
            let d = points[k] - points[j];
            out = out.times(SignedLog { sign: d.signum(), ln: d.abs().ln() });
        }
    }
    out
}

/// Unnormalized product of determinants of the coupled density. At `b = 0`
/// the Ginibre form with `ν_m = 0` is used, which is the continuous limit.
fn unnormalized(cfg: &ModelConfig, y: &PointConfiguration) -> Result<SignedLog> {
    if cfg.b == 0.0 {
        let mut nus = cfg.nus.clone();
        nus.push(0);
        return Ok(ginibre_unnormalized(&nus, y));
    }
    let m = cfg.m;
    let mut acc = bessel_det(y.level(m), cfg.b)?;
    let coupled: Vec<Vec<f64>> = y
        .level(m)
        .iter()
        .map(|&ym| y.level(m - 1).iter().map(|&yl| -yl.ln() - ym / yl - cfg.b * cfg.b * yl).collect())
        .collect();
    acc = acc.times(log_det(&coupled));
    for l in 1..m - 1 {
        acc = acc.times(transition_det(y.level(l + 1), y.level(l), cfg.nu_f(l + 1)));
    }
    Ok(acc.times(first_level_det(y.level(1), cfg.nu_f(1))))
}

fn ginibre_unnormalized(nus: &[u32], y: &PointConfiguration) -> SignedLog {
    let levels = nus.len();
    let mut acc = vandermonde(y.level(levels));
    for l in 1..levels {
        acc = acc.times(transition_det(y.level(l + 1), y.level(l), nus[l] as f64));
    }
    acc.times(first_level_det(y.level(1), nus[0] as f64))
}

fn positive_log(value: SignedLog, what: &str) -> Result<f64> {
    if value.sign > 0.0 && value.ln.is_finite() {
        Ok(value.ln)
    } else {
        Err(Error::Sign(format!("{what}: product of determinants is not positive (sign {}, log {})", value.sign, value.ln)))
    }
}

/// Logarithm of the normalized joint density `P_{n,m}(y; b)` of all levels.
///
/// Fails with [`Error::Sign`] when the product of determinants is not
/// positive and with [`Error::Domain`] for colliding points.
pub fn log_joint_density(q: &JointDensityQuery) -> Result<f64> {
    q.cfg.validate()?;
    check_points(&q.y, q.cfg.n, q.cfg.m)?;
    let value = positive_log(unnormalized(&q.cfg, &q.y)?, "joint density")?;
    let ln_z = if q.cfg.b == 0.0 {
        let mut nus = q.cfg.nus.clone();
        nus.push(0);
        log_ginibre_normalization(q.cfg.n, &nus)
    } else {
        log_normalization(&q.cfg)?
    };
    Ok(value - ln_z)
}

/// Logarithm of the normalized joint density of the uncoupled product of
/// `nus.len()` factors with `ν_1..ν_M = nus`.
pub fn log_ginibre_density(nus: &[u32], y: &PointConfiguration) -> Result<f64> {
    if nus.is_empty() {
        return Err(Error::Config("at least one factor is needed".into()));
    }
    let n = y.levels.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Config("empty point configuration".into()));
    }
    check_points(y, n, nus.len())?;
    let value = positive_log(ginibre_unnormalized(nus, y), "Ginibre density")?;
    Ok(value - log_ginibre_normalization(n, nus))
}

fn check_psi_arguments(cfg: &ModelConfig, k: usize, y: f64) -> Result<()> {
    cfg.validate()?;
    if k == 0 || k > cfg.n {
        return Err(Error::Config(format!("psi index k = {k} must lie in 1..={}", cfg.n)));
    }
    if !(cfg.b > 0.0) {
        return Err(Error::Domain("psi_k needs b > 0".into()));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("psi_k argument {y} must be positive")));
    }
    Ok(())
}

fn psi_parameters(cfg: &ModelConfig, k: usize) -> Vec<f64> {
    let mut params = vec![cfg.nu_f(1) + (k - 1) as f64];
    params.extend((2..cfg.m).map(|l| cfg.nu_f(l)));
    params
}

fn quad_failure(stage: &str, err: Error) -> Error {
    match err {
        Error::QuadratureFailure(msg) => Error::QuadratureFailure(format!("{stage}: {msg}")),
        other => other,
    }
}

/// Route used to evaluate `ψ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiRoute {
    /// Single integral of `G^{m−1,0}_{0,m−1}` against `e^{−y/t − b²t} dt/t`.
    Quadrature,
    /// Mellin–Barnes integral over the line `Re u = 1`.
    Contour,
}

/// `ln ψ_k(y)` by the chosen route.
///
/// Both integrands are divided by their value at a reference point before
/// integration, so that `ψ_k` far outside the `f64` range (large `b√y`) is
/// still available as a logarithm.
pub fn ln_psi(cfg: &ModelConfig, k: usize, y: f64, route: PsiRoute) -> Result<f64> {
    check_psi_arguments(cfg, k, y)?;
    let params = psi_parameters(cfg, k);
    match route {
        PsiRoute::Quadrature => ln_psi_quadrature(cfg.b, &params, y),
        PsiRoute::Contour => ln_psi_contour(cfg.b, &params, y),
    }
}

fn ln_psi_quadrature(b: f64, params: &[f64], y: f64) -> Result<f64> {
    let failure = RefCell::new(None);
    let b2 = b * b;
    // In s = ln t the weight e^{−y/t − b²t} peaks at t = √y/b and both
    // tails decay at least exponentially.
    let centre = 0.5 * y.ln() - b.ln();
    let ln_integrand = |s: f64| -> Result<f64> {
        let t = s.exp();
        Ok(ln_meijer_g_m0(params, t)? - y / t - b2 * t)
    };
    let reference = ln_integrand(centre)?;
    let integrand = |s: f64| {
        let t = s.exp();
        if !(-y / t - b2 * t - reference > UNDERFLOW_LN - 50.0) {
            return 0.0;
        }
        match ln_integrand(s) {
            Ok(v) => (v - reference).exp(),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-12, max_segments: 2000 };
    let upper = integrate_semi_infinite(&integrand, centre, 4.0, opts);
    let lower = integrate_semi_infinite(|s: f64| integrand(2.0 * centre - s), centre, 4.0, opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let total = upper.map_err(|e| quad_failure("psi quadrature", e))?.value
        + lower.map_err(|e| quad_failure("psi quadrature", e))?.value;
    Ok(total.ln() + reference)
}

/// With `ν_m = 0` the factor `Γ(u+ν_m)/Γ(u)` cancels, leaving
/// `Γ(u+ν_1+k−1) ∏_{l=2}^{m−1} Γ(u+ν_l) · 2 b^u y^{−u/2} K_u(2b√y)`.
/// The integrand is conjugate-symmetric, so only `Im u ≥ 0` is integrated.
fn ln_psi_contour(b: f64, params: &[f64], y: f64) -> Result<f64> {
    let z = 2.0 * b * y.sqrt();
    let ln_scale = b.ln() - 0.5 * y.ln();
    let ln_integrand = |tau: f64| -> Result<Complex64> {
        let u = Complex64::new(PSI_LINE, tau);
        let mut ln = LN_2 + u * ln_scale;
        for p in params {
            ln += ln_gamma(u + p);
        }
        Ok(ln + ln_bessel_k(u, z)?)
    };
    let reference = ln_integrand(0.0)?.re;
    let failure = RefCell::new(None);
    let integrand = |tau: f64| match ln_integrand(tau) {
        Ok(v) => (v - reference).exp().re,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-12, max_segments: 2000 };
    let result = integrate_semi_infinite(integrand, 0.0, 2.0, opts);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let value = result.map_err(|e| quad_failure("psi contour", e))?.value / PI;
    if !(value > 0.0) {
        return Err(Error::Sign(format!("psi contour value {value:e} is not positive")));
    }
    Ok(value.ln() + reference)
}

/// `ln ψ_k(y)` by both routes; fails unless they agree to
/// [`PSI_ROUTE_REL_TOL`].
pub fn ln_psi_checked(cfg: &ModelConfig, k: usize, y: f64) -> Result<f64> {
    let quad = ln_psi(cfg, k, y, PsiRoute::Quadrature)?;
    let line = ln_psi(cfg, k, y, PsiRoute::Contour)?;
    let rel = (quad - line).abs().exp_m1();
    if !(rel <= PSI_ROUTE_REL_TOL) {
        return Err(Error::QuadratureFailure(format!(
            "psi_{k}({y}) routes disagree: ln values {quad} (quadrature) and {line} (contour), rel {rel:e}"
        )));
    }
    Ok(quad)
}

/// Normalized density of the squared singular values of the total product
/// `G_m···G_1` alone, `(n!)^{m−1}/Z · det[y^{(k−1)/2} I_{k−1}(2b√y_j)] ·
/// det[ψ_k(y_j)]`, with every `ψ_k` value cross-checked by both routes.
pub fn total_product_density(cfg: &ModelConfig, points: &[f64]) -> Result<f64> {
    cfg.validate()?;
    if points.len() != cfg.n {
        return Err(Error::Config(format!("expected {} points, got {}", cfg.n, points.len())));
    }
    if !(cfg.b > 0.0) {
        return Err(Error::Domain("total_product_density needs b > 0".into()));
    }
    let y = PointConfiguration { levels: vec![points.to_vec()] };
    check_points(&y, cfg.n, 1)?;
    let mut ln_psi = Vec::with_capacity(cfg.n);
    for &yj in points {
        let mut row = Vec::with_capacity(cfg.n);
        for k in 1..=cfg.n {
            row.push(ln_psi_checked(cfg, k, yj)?);
        }
        ln_psi.push(row);
    }
    let value = bessel_det(points, cfg.b)?.times(log_det(&ln_psi));
    let ln = positive_log(value, "total product density")?;
    Ok((ln + (cfg.m - 1) as f64 * ln_factorial(cfg.n) - log_normalization(cfg)?).exp())
}

/// Iterated one-dimensional adaptive quadrature of `f` over `(0, ∞)^d`,
/// with `scales[i]` the length scale of the map of variable `i`.
///
/// The outermost variable uses `rel_tol`; inner stages are tightened by
/// [`NESTED_TOL_FACTOR`] per level. The error estimate is that of the
/// outermost stage.
fn nested_quadrature(f: &dyn Fn(&[f64]) -> Result<f64>, scales: &[f64], rel_tol: f64) -> Result<QuadratureResult<f64>> {
    let failure = RefCell::new(None);
    let mut vars = vec![0.0; scales.len()];
    let result = nested_stage(f, scales, rel_tol, 0, &mut vars, &failure);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    result
}

fn nested_stage(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    scales: &[f64],
    rel_tol: f64,
    depth: usize,
    vars: &mut Vec<f64>,
    failure: &RefCell<Option<Error>>,
) -> Result<QuadratureResult<f64>> {
    if depth == scales.len() {
        return match f(vars) {
            Ok(v) => Ok(QuadratureResult { value: v, error_estimate: 0.0, nodes_used: 1 }),
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                Ok(QuadratureResult { value: f64::NAN, error_estimate: 0.0, nodes_used: 1 })
            }
        };
    }
    let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol, max_segments: NESTED_MAX_SEGMENTS };
    integrate_semi_infinite(
        |x: f64| {
            vars[depth] = x;
            match nested_stage(f, scales, (rel_tol * NESTED_TOL_FACTOR).max(NESTED_TOL_FLOOR), depth + 1, vars, failure) {
                Ok(r) => r.value,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        scales[depth],
        opts,
    )
    .map_err(|e| quad_failure(&format!("nested stage {depth}"), e))
}

/// Correlation function `ρ` of the coupled model at the given
/// `(level, x)` points, by integrating the joint density over every other
/// point and multiplying by `n!/(n−k_l)!` for each level with `k_l` fixed
/// points.
///
/// With no points the result is the total mass of the density. Needs
/// `n ≤ 2`, `m ≤ 3` and at most [`MAX_QUADRATURE_DIMENSION`] free
/// variables; `rel_tol` applies to the outermost integration.
pub fn brute_correlation(cfg: &ModelConfig, points: &[(usize, f64)], rel_tol: f64) -> Result<QuadratureResult<f64>> {
    cfg.validate()?;
    if cfg.n > 2 || cfg.m > 3 {
        return Err(Error::Domain(format!("brute_correlation needs n ≤ 2 and m ≤ 3, got n = {}, m = {}", cfg.n, cfg.m)));
    }
    let (n, m) = (cfg.n, cfg.m);
    let mut fixed = vec![Vec::new(); m];
    for &(l, x) in points {
        if l == 0 || l > m {
            return Err(Error::Config(format!("level {l} outside 1..={m}")));
        }
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain(format!("point {x} must be positive")));
        }
        fixed[l - 1].push(x);
        if fixed[l - 1].len() > n {
            return Err(Error::Config(format!("more than n = {n} points on level {l}")));
        }
    }
    let free: Vec<(usize, usize)> =
        (0..m).flat_map(|l| (fixed[l].len()..n).map(move |slot| (l, slot))).collect();
    if free.len() > MAX_QUADRATURE_DIMENSION {
        return Err(Error::Domain(format!(
            "{} free variables exceed the quadrature dimension cap {MAX_QUADRATURE_DIMENSION}",
            free.len()
        )));
    }
    let ln_prefactor: f64 = fixed.iter().map(|f| ln_factorial(n) - ln_factorial(n - f.len())).sum();
    let ln_z = if cfg.b == 0.0 {
        let mut nus = cfg.nus.clone();
        nus.push(0);
        log_ginibre_normalization(n, &nus)
    } else {
        log_normalization(cfg)?
    };
    let template: Vec<Vec<f64>> = fixed.iter().map(|f| {
        let mut level = f.clone();
        level.resize(n, 0.0);
        level
    }).collect();
    let density = |vars: &[f64]| -> Result<f64> {
        let mut levels = template.clone();
        for (&(l, slot), &v) in free.iter().zip(vars) {
            levels[l][slot] = v;
        }
        let value = unnormalized(cfg, &PointConfiguration { levels })?;
        Ok(value.sign * (value.ln - ln_z).exp())
    };
    // Each level's mean is of order its index, so the map scale follows it.
    let scales: Vec<f64> = free.iter().map(|&(l, _)| (l + 1) as f64).collect();
    let mut result = nested_quadrature(&density, &scales, rel_tol)?;
    let factor = ln_prefactor.exp();
    result.value *= factor;
    result.error_estimate *= factor;
    Ok(result)
}

/// Outcome of an Andréief check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AndreiefResidual {
    /// `∫ det[φ_i(y_j)] det[ψ_i(y_j)] dy` over `(0, ∞)^n` by quadrature.
    pub integral: f64,
    /// `n! · det[∫ φ_i ψ_j]`.
    pub moment_side: f64,
    /// `|integral − moment_side| / |moment_side|`.
    pub residual: f64,
}

/// Compares the `n`-fold integral of `det[φ_i(y_j)]·det[ψ_i(y_j)]` with
/// `n!` times the determinant of the moment matrix `∫_0^∞ φ_i ψ_j`.
pub fn andreief_check(
    phis: &[&dyn Fn(f64) -> f64],
    psis: &[&dyn Fn(f64) -> f64],
    rel_tol: f64,
) -> Result<AndreiefResidual> {
    let n = phis.len();
    if n == 0 || n > MAX_ORACLE_N || psis.len() != n {
        return Err(Error::Config(format!(
            "andreief_check needs 1 ≤ n ≤ {MAX_ORACLE_N} functions of each kind, got {} and {}",
            phis.len(),
            psis.len()
        )));
    }
    let product = |vars: &[f64]| -> Result<f64> {
        let a: Vec<Vec<f64>> = (0..n).map(|i| vars.iter().map(|&y| phis[i](y)).collect()).collect();
        let b: Vec<Vec<f64>> = (0..n).map(|i| vars.iter().map(|&y| psis[i](y)).collect()).collect();
        Ok(cofactor_det(&a) * cofactor_det(&b))
    };
    let integral = nested_quadrature(&product, &vec![1.0; n], rel_tol)?.value;
    let mut moments = vec![vec![0.0; n]; n];
    let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: rel_tol * NESTED_TOL_FACTOR, max_segments: 2000 };
    for i in 0..n {
        for j in 0..n {
            moments[i][j] = integrate_semi_infinite(|y: f64| phis[i](y) * psis[j](y), 0.0, 1.0, opts)
                .map_err(|e| quad_failure("moment", e))?
                .value;
        }
    }
    let moment_side = ln_factorial(n).exp() * cofactor_det(&moments);
    let residual = (integral - moment_side).abs() / moment_side.abs().max(f64::MIN_POSITIVE);
    Ok(AndreiefResidual { integral, moment_side, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_finite::{correlation_function, Representation};
    use crate::specfun::bessel_i;

    fn cfg(n: usize, m: usize, nus: Vec<u32>, b: f64) -> ModelConfig {
        ModelConfig::new(n, m, nus, b).unwrap()
    }

    fn query(cfg: &ModelConfig, levels: Vec<Vec<f64>>) -> JointDensityQuery {
        JointDensityQuery { cfg: cfg.clone(), y: PointConfiguration { levels } }
    }

    #[test]
    fn cofactor_expansion_matches_known_determinants() {
        let a = vec![vec![2.0, 0.0, 1.0], vec![1.0, 3.0, 2.0], vec![1.0, 1.0, 2.0]];
        assert!((cofactor_det(&a) - 6.0).abs() < 1e-14);
        let hilbert: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).collect()).collect();
        assert!((cofactor_det(&hilbert) - 1.0 / 6_048_000.0).abs() < 1e-18);
        let ln: Vec<Vec<f64>> = a.iter().map(|r| r.iter().map(|v: &f64| v.ln()).collect()).collect();
        let sl = log_det(&ln);
        assert_eq!(sl.sign, 1.0);
        assert!((sl.ln - 6.0_f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn bessel_i_expansion_joins_the_series() {
        for k in 0..4 {
            for z in [60.0, 85.0, 150.0] {
                let series = ln_bessel_i(Complex64::new(k as f64, 0.0), z).unwrap().re;
                let expansion = ln_bessel_i_integer(k, z + 1e-300).unwrap();
                let forced = {
                    let mu = 4.0 * (k * k) as f64;
                    let (mut term, mut sum) = (1.0_f64, 1.0_f64);
                    for j in 1..30 {
                        let odd = (2 * j - 1) as f64;
                        term *= -(mu - odd * odd) / (8.0 * j as f64 * z);
                        sum += term;
                    }
                    z - 0.5 * (2.0 * PI * z).ln() + sum.ln()
                };
                assert!((series - expansion).abs() < 1e-13 * series, "k = {k}, z = {z}");
                assert!((series - forced).abs() < 1e-13 * series, "k = {k}, z = {z}");
            }
        }
    }

    #[test]
    fn one_point_two_levels_is_the_explicit_product() {
        let c = cfg(1, 2, vec![0], 0.6);
        let (y2, y1) = (1.7_f64, 0.9_f64);
        let expected = bessel_i(Complex64::new(0.0, 0.0), 2.0 * 0.6 * y2.sqrt()).unwrap().re
            * (1.0 / y1)
            * (-y2 / y1 - 0.36 * y1).exp()
            * (-y1).exp();
        let got = log_joint_density(&query(&c, vec![vec![y1], vec![y2]])).unwrap().exp();
        assert!((got - expected).abs() < 1e-14 * expected);
        assert!(log_normalization(&c).unwrap().abs() < 1e-14);
    }

    #[test]
    fn small_coupling_approaches_the_ginibre_density() {
        let c = cfg(3, 3, vec![1, 2], 1e-6);
        let levels = vec![vec![0.4, 1.1, 2.5], vec![0.7, 1.9, 4.2], vec![0.5, 2.2, 6.0]];
        let coupled = log_joint_density(&query(&c, levels.clone())).unwrap();
        let ginibre = log_ginibre_density(&[1, 2, 0], &PointConfiguration { levels: levels.clone() }).unwrap();
        assert!((coupled - ginibre).abs() < 1e-5, "{coupled} vs {ginibre}");
        let at_zero = log_joint_density(&query(&c.with_b(0.0), levels)).unwrap();
        assert!((at_zero - ginibre).abs() < 1e-12);
    }

    #[test]
    fn density_is_symmetric_within_levels() {
        let c = cfg(3, 2, vec![1], 0.8);
        let base = vec![vec![0.3, 1.4, 2.9], vec![0.6, 2.0, 5.5]];
        let reference = log_joint_density(&query(&c, base.clone())).unwrap();
        for (level, perm) in [(0usize, [2usize, 0, 1]), (1, [1, 0, 2]), (1, [2, 1, 0])] {
            let mut levels = base.clone();
            levels[level] = perm.iter().map(|&i| base[level][i]).collect();
            let permuted = log_joint_density(&query(&c, levels)).unwrap();
            assert!((permuted - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn collisions_and_bad_points_are_rejected() {
        let c = cfg(2, 2, vec![0], 0.5);
        let collide = query(&c, vec![vec![1.0, 1.0 + 1e-13], vec![0.5, 2.0]]);
        assert!(matches!(log_joint_density(&collide), Err(Error::Domain(_))));
        let negative = query(&c, vec![vec![1.0, -2.0], vec![0.5, 2.0]]);
        assert!(matches!(log_joint_density(&negative), Err(Error::Domain(_))));
        let short = query(&c, vec![vec![1.0], vec![0.5, 2.0]]);
        assert!(matches!(log_joint_density(&short), Err(Error::Config(_))));
        let big = cfg(5, 2, vec![0], 0.5);
        let pts: Vec<f64> = (1..=5).map(|i| i as f64).collect();
        assert!(log_joint_density(&query(&big, vec![pts.clone(), pts])).is_err());
    }

    #[test]
    fn non_positive_determinant_product_is_a_sign_error() {
        let value = SignedLog { sign: -1.0, ln: 0.3 };
        assert!(matches!(positive_log(value, "test"), Err(Error::Sign(_))));
        let zero = SignedLog { sign: 0.0, ln: f64::NEG_INFINITY };
        assert!(matches!(positive_log(zero, "test"), Err(Error::Sign(_))));
    }

    #[test]
    fn joint_density_integrates_to_one() {
        for c in [cfg(1, 2, vec![0], 0.7), cfg(1, 2, vec![2], 1.3), cfg(1, 3, vec![1, 0], 0.5)] {
            let mass = brute_correlation(&c, &[], 1e-8).unwrap();
            assert!((mass.value - 1.0).abs() < 1e-6, "{c:?}: {}", mass.value);
        }
    }

    #[test]
    fn psi_routes_agree() {
        let c = cfg(2, 3, vec![1, 0], 0.5);
        let quad = ln_psi(&c, 2, 1.3, PsiRoute::Quadrature).unwrap().exp();
        let line = ln_psi(&c, 2, 1.3, PsiRoute::Contour).unwrap().exp();
        assert!((quad - line).abs() < 1e-8 * quad, "{quad} vs {line}");
        // m = 2: ψ_k(y) = 2 (y/(1+b²))^{a/2} K_a(2√(y(1+b²))) with a = ν₁+k−1.
        let c2 = cfg(2, 2, vec![1], 0.9);
        let (y, a) = (0.8_f64, 2.0_f64);
        let s = 1.0 + 0.81;
        let closed = 2.0 * (y / s).powf(a / 2.0) * bessel_k_real(a, 2.0 * (y * s).sqrt());
        for route in [PsiRoute::Quadrature, PsiRoute::Contour] {
            let value = ln_psi(&c2, 2, y, route).unwrap().exp();
            assert!((value - closed).abs() < 1e-9 * closed, "{value} vs {closed}");
        }
    }

    fn bessel_k_real(order: f64, x: f64) -> f64 {
        crate::specfun::bessel_k(Complex64::new(order, 0.0), x).unwrap().re
    }

    #[test]
    fn total_product_density_is_the_level_m_marginal() {
        let c = cfg(1, 2, vec![1], 0.6);
        let y2 = 1.4;
        let marginal = brute_correlation(&c, &[(2, y2)], 1e-10).unwrap().value;
        let direct = total_product_density(&c, &[y2]).unwrap();
        assert!((marginal - direct).abs() < 1e-8 * direct, "{marginal} vs {direct}");
    }

    #[test]
    fn total_product_density_of_two_points_is_symmetric_and_positive() {
        let c = cfg(2, 3, vec![1, 0], 0.5);
        let a = total_product_density(&c, &[0.7, 2.3]).unwrap();
        let b = total_product_density(&c, &[2.3, 0.7]).unwrap();
        assert!(a > 0.0);
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn strong_coupling_collapses_onto_one_factor_fewer() {
        // x = √y / b tends to the single-factor Laguerre density x^ν e^{−x}/ν!.
        let nu = 1u32;
        let b = 200.0;
        let c = cfg(1, 2, vec![nu], b);
        for x in [0.5, 1.0, 2.5] {
            let y = b * b * x * x;
            let rescaled = total_product_density(&c, &[y]).unwrap() * 2.0 * b * b * x;
            let limit = x * (-x).exp();
            assert!((rescaled - limit).abs() < 2e-2 * limit, "x = {x}: {rescaled} vs {limit}");
        }
    }

    #[test]
    fn marginal_of_the_lower_levels_is_the_uncoupled_product() {
        let c = cfg(1, 3, vec![1, 2], 0.9);
        let (y1, y2) = (0.8, 1.9);
        let marginal = brute_correlation(&c, &[(1, y1), (2, y2)], 1e-10).unwrap().value;
        let ginibre = log_ginibre_density(&[1, 2], &PointConfiguration { levels: vec![vec![y1], vec![y2]] })
            .unwrap()
            .exp();
        assert!((marginal - ginibre).abs() < 1e-8 * ginibre, "{marginal} vs {ginibre}");
    }

    #[test]
    fn brute_correlation_matches_the_kernel_at_two_points() {
        let c = cfg(2, 2, vec![0], 0.3);
        let x = 1.2;
        let brute = brute_correlation(&c, &[(2, x)], 1e-7).unwrap().value;
        let kernel = correlation_function(&[(2, x)], &c, Representation::Sum).unwrap();
        assert!((brute - kernel).abs() < 1e-4 * kernel, "{brute} vs {kernel}");
    }

    #[test]
    fn brute_correlation_rejects_large_problems() {
        assert!(brute_correlation(&cfg(3, 2, vec![0], 0.5), &[], 1e-6).is_err());
        assert!(brute_correlation(&cfg(2, 3, vec![0, 0], 0.5), &[(1, 1.0)], 1e-6).is_err());
        assert!(brute_correlation(&cfg(1, 2, vec![0], 0.5), &[(3, 1.0)], 1e-6).is_err());
        assert!(brute_correlation(&cfg(1, 2, vec![0], 0.5), &[(1, 1.0), (1, 2.0)], 1e-6).is_err());
    }

    #[test]
    fn andreief_single_function_pair() {
        let phi = |y: f64| (-y).exp();
        let psi = |y: f64| y * y;
        let r = andreief_check(&[&phi], &[&psi], 1e-10).unwrap();
        assert!((r.moment_side - 2.0).abs() < 1e-10);
        assert!(r.residual < 1e-10);
    }

    #[test]
    fn andreief_with_gamma_moments() {
        let phis: Vec<Box<dyn Fn(f64) -> f64>> =
            (0..3).map(|i| Box::new(move |y: f64| y.powi(i) * (-y).exp()) as Box<dyn Fn(f64) -> f64>).collect();
        let psis: Vec<Box<dyn Fn(f64) -> f64>> =
            (0..3).map(|j| Box::new(move |y: f64| y.powi(j)) as Box<dyn Fn(f64) -> f64>).collect();
        let phis: Vec<&dyn Fn(f64) -> f64> = phis.iter().map(|f| f.as_ref()).collect();
        let psis: Vec<&dyn Fn(f64) -> f64> = psis.iter().map(|f| f.as_ref()).collect();
        let r = andreief_check(&phis, &psis, 1e-9).unwrap();
        // det[Γ(i+j+1)]_{i,j=0..2} = 0!·1!·2! · 0!·1!·2! = 4, times 3!.
        assert!((r.moment_side - 24.0).abs() < 1e-8);
        assert!(r.residual < 1e-8, "residual {}", r.residual);
    }

    #[test]
    fn andreief_with_the_bessel_exponential_pairing() {
        let b = 0.7;
        let xs = [0.6, 1.5];
        let phi = |k: usize| move |y: f64| y.powf(0.5 * k as f64) * bessel_i(Complex64::new(k as f64, 0.0), 2.0 * b * y.sqrt()).unwrap().re;
        let psi = |x: f64| move |y: f64| (-y / x).exp();
        let (p0, p1, q0, q1) = (phi(0), phi(1), psi(xs[0]), psi(xs[1]));
        let r = andreief_check(&[&p0, &p1], &[&q0, &q1], 1e-9).unwrap();
        assert!(r.residual < 1e-7, "residual {}", r.residual);
        // Moments are x_k^j b^{j−1} e^{b² x_k}, j = 1, 2.
        let mom = |j: i32, x: f64| x.powi(j) * b.powi(j - 1) * (b * b * x).exp();
        let det = mom(1, xs[0]) * mom(2, xs[1]) - mom(1, xs[1]) * mom(2, xs[0]);
        assert!((r.moment_side - 2.0 * det).abs() < 1e-9 * det.abs());
    }
}
