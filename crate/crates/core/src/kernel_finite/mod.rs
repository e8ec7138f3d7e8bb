//! Finite-`n` correlation kernel `K_{n,m}(r,x;s,y;b)` of the coupled product
//! process, in two independent forms:
//!
//! * [`kernel_sum`]: `−φ_{r,s}(x,y) + Σ_{p<n} w_p P_{r,p}(x) Q_{s,p}(y)` with
//!   `w_p = Γ(ν_1+p+1)/(Γ(ν_1+1)² p!)`, built on the explicit inverse of the
//!   moment matrix (see [`hankel_system`]);
//! * [`kernel_contour`]: `−φ_{r,s}(x,y)` plus a double contour integral over
//!   a loop around `0..n−1` and the line `Re u = −1/2`.
//!
//! The sum form is the default. It is exact up to rounding for moderate `n`
//! but its alternating sums lose digits as `n` grows; the contour form stays
//! stable and is the one used for large-`n` limits.

mod contour;
mod hankel;
mod transition;

pub use contour::{
    kernel_contour, kernel_contour_grid, kernel_ginibre_finite, kernel_ginibre_finite_grid, p_func_contour,
    q_func_contour,
};
pub use hankel::{exact_hankel_system, exact_identity_residual, hankel_system, HankelSystem};

pub(crate) use contour::ln_q_last;
pub(crate) use transition::{check_level, check_positive, Transitions};

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::specfun::{bessel_i, bessel_k, ln_gamma_real, ln_hyp0f1, MAX_LN_F64};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Arguments `(r, x; s, y)` of a kernel evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelRequest {
    /// Level of the first argument, `1..=m`.
    pub r: usize,
    /// First point, `x > 0`.
    pub x: f64,
    /// Level of the second argument, `1..=m`.
    pub s: usize,
    /// Second point, `y > 0`.
    pub y: f64,
}

impl KernelRequest {
    /// Checks levels against `m` and positivity of the points.
    pub fn validate(&self, m: usize) -> Result<()> {
        check_level(self.r, m)?;
        check_level(self.s, m)?;
        check_positive(self.x)?;
        check_positive(self.y)
    }
}

/// A numerically integrated kernel value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEvaluation {
    /// Real part of the computed value.
    pub value: f64,
    /// Discretization error estimate plus the discarded imaginary part.
    pub error_estimate: f64,
}

/// Which kernel representation to use when assembling correlation functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    /// Finite sums over the explicit inverse moment matrix.
    #[default]
    Sum,
    /// Double contour integral.
    Contour,
}

/// Finite-sum kernel of one configuration. Building it tabulates the
/// transition integrals once; evaluations are then cheap.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    transitions: Transitions,
}

fn ln_factorial(k: usize) -> f64 {
    ln_gamma_real(k as f64 + 1.0)
}

/// `(−p)_i` for `i ≤ p`.
fn falling_sign_pochhammer(p: usize, i: usize) -> f64 {
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    sign * (ln_factorial(p) - ln_factorial(p - i)).exp()
}

/// A vector stored as `e^{scale}·values`.
#[derive(Debug, Clone)]
struct Scaled {
    scale: f64,
    values: Vec<f64>,
}

/// Splits log-values into their maximum and the normalized exponentials.
fn normalize(ln_values: &[f64]) -> (f64, Vec<f64>) {
    let scale = ln_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if scale.is_finite() { scale } else { 0.0 };
    (scale, ln_values.iter().map(|v| (v - scale).exp()).collect())
}

fn unscale(s: Scaled, what: &str) -> Result<Vec<f64>> {
    if s.scale > MAX_LN_F64 {
        return Err(Error::Overflow(format!("{what} exceeds the f64 range (log scale {:.1})", s.scale)));
    }
    let factor = s.scale.exp();
    Ok(s.values.into_iter().map(|v| v * factor).collect())
}

impl FiniteKernel {
    /// Prepares the kernel of `cfg`.
    pub fn new(cfg: &ModelConfig) -> Result<Self> {
        Ok(FiniteKernel { transitions: Transitions::new(cfg)? })
    }

    /// The configuration.
    pub fn config(&self) -> &ModelConfig {
        self.transitions.config()
    }

    /// `φ_{r,s}(x, y)`.
    pub fn phi(&self, r: usize, s: usize, x: f64, y: f64) -> Result<f64> {
        self.transitions.phi(r, s, x, y)
    }

    /// `P_{r,p}(x)` for `p = 0..n−1`.
    pub fn p_values(&self, r: usize, x: f64) -> Result<Vec<f64>> {
        unscale(self.scaled_p(r, x)?, "P_{r,p}")
    }

    /// `Q_{s,p}(y)` for `p = 0..n−1`.
    pub fn q_values(&self, s: usize, y: f64) -> Result<Vec<f64>> {
        unscale(self.scaled_q(s, y)?, "Q_{s,p}")
    }

    /// `P_{r,p}(x) = e^{scale}·values[p]`, with the terms normalized by their
    /// largest modulus so that `₀F₁` growth on the last level cannot
    /// overflow.
    fn scaled_p(&self, r: usize, x: f64) -> Result<Scaled> {
        let cfg = self.config();
        check_level(r, cfg.m)?;
        check_positive(x)?;
        let nu1 = cfg.nu_f(1);
        // Term i: Γ(ν_1+1) x^i / (i! ∏_{l=1}^{r} Γ(ν_l+i+1)), times ₀F₁(; i+1; b²x)
        // on the last level (where ν_m = 0 supplies the second i!).
        let ln_terms = (0..cfg.n)
            .map(|i| {
                let mut ln = ln_gamma_real(nu1 + 1.0) + i as f64 * x.ln() - ln_factorial(i);
                ln -= (1..=r).map(|l| ln_gamma_real(cfg.nu_f(l) + i as f64 + 1.0)).sum::<f64>();
                if r == cfg.m {
                    ln += ln_hyp0f1(Complex64::new(i as f64 + 1.0, 0.0), cfg.b * cfg.b * x)?.re;
                }
                Ok(ln)
            })
            .collect::<Result<Vec<f64>>>()?;
        let (scale, terms) = normalize(&ln_terms);
        let values = (0..cfg.n)
            .map(|p| (0..=p).map(|i| falling_sign_pochhammer(p, i) * terms[i]).sum())
            .collect();
        Ok(Scaled { scale, values })
    }

    /// `Q_{s,p}(y) = e^{scale}·values[p]`.
    fn scaled_q(&self, s: usize, y: f64) -> Result<Scaled> {
        let cfg = self.config();
        let nu1 = cfg.nu_f(1);
        let ln_phis = (0..cfg.n)
            .map(|j| self.transitions.ln_phi_from_origin(s, j, y))
            .collect::<Result<Vec<f64>>>()?;
        let (scale, phis) = normalize(&ln_phis);
        // (−p)_j / ((ν_1+1)_j j!)
        let weight = |p: usize, j: usize| {
            let ln_poch = ln_gamma_real(nu1 + 1.0 + j as f64) - ln_gamma_real(nu1 + 1.0);
            falling_sign_pochhammer(p, j) * (-ln_poch - ln_factorial(j)).exp()
        };
        let values = (0..cfg.n)
            .map(|p| (0..=p).map(|j| weight(p, j) * phis[j]).sum())
            .collect();
        Ok(Scaled { scale, values })
    }

    /// `w_p = Γ(ν_1+p+1)/(Γ(ν_1+1)² p!)`.
    fn weights(&self) -> Vec<f64> {
        let nu1 = self.config().nu_f(1);
        (0..self.config().n)
            .map(|p| (ln_gamma_real(nu1 + p as f64 + 1.0) - 2.0 * ln_gamma_real(nu1 + 1.0) - ln_factorial(p)).exp())
            .collect()
    }

    /// `K_{n,m}(r,x;s,y;b)` by finite sums.
    pub fn kernel(&self, req: KernelRequest) -> Result<f64> {
        req.validate(self.config().m)?;
        Ok(self.kernel_grid(&[(req.r, req.x)], &[(req.s, req.y)])?[0][0])
    }

    /// Kernel matrix over every pair of `rows` and `cols`, reusing the
    /// `P` and `Q` vectors.
    pub fn kernel_grid(&self, rows: &[(usize, f64)], cols: &[(usize, f64)]) -> Result<Vec<Vec<f64>>> {
        let w = self.weights();
        let ps = rows.iter().map(|&(r, x)| self.scaled_p(r, x)).collect::<Result<Vec<_>>>()?;
        let qs = cols.iter().map(|&(s, y)| self.scaled_q(s, y)).collect::<Result<Vec<_>>>()?;
        rows.iter()
            .zip(&ps)
            .map(|(&(r, x), p)| {
                cols.iter()
                    .zip(&qs)
                    .map(|(&(s, y), q)| {
                        let sum: f64 = w.iter().zip(p.values.iter().zip(&q.values)).map(|(w, (a, b))| w * a * b).sum();
                        Ok(sum * (p.scale + q.scale).exp() - self.phi(r, s, x, y)?)
                    })
                    .collect()
            })
            .collect()
    }
}

/// `φ_{r,s}(x, y)` of `cfg`.
pub fn phi(r: usize, s: usize, x: f64, y: f64, cfg: &ModelConfig) -> Result<f64> {
    FiniteKernel::new(cfg)?.phi(r, s, x, y)
}

fn check_index(p: usize, n: usize) -> Result<()> {
    if p >= n {
        return Err(Error::Domain(format!("index p = {p} must be below n = {n}")));
    }
    Ok(())
}

/// `P_{r,p}(x)` by its finite sum.
pub fn p_func(r: usize, p: usize, x: f64, cfg: &ModelConfig) -> Result<f64> {
    check_index(p, cfg.n)?;
    Ok(FiniteKernel::new(cfg)?.p_values(r, x)?[p])
}

/// `Q_{s,p}(y)` by its finite sum.
pub fn q_func(s: usize, p: usize, y: f64, cfg: &ModelConfig) -> Result<f64> {
    check_index(p, cfg.n)?;
    Ok(FiniteKernel::new(cfg)?.q_values(s, y)?[p])
}

/// `K_{n,m}(r,x;s,y;b)` by finite sums.
pub fn kernel_sum(req: KernelRequest, cfg: &ModelConfig) -> Result<f64> {
    FiniteKernel::new(cfg)?.kernel(req)
}

/// Correlation function `ρ(points) = det[K(l_i, x_i; l_j, x_j)]`.
///
/// `points` lists `(level, position)` pairs; at most `n` per level.
pub fn correlation_function(points: &[(usize, f64)], cfg: &ModelConfig, representation: Representation) -> Result<f64> {
    for l in 1..=cfg.m {
        let count = points.iter().filter(|p| p.0 == l).count();
        if count > cfg.n {
            return Err(Error::Domain(format!("{count} points on level {l} exceeds n = {}", cfg.n)));
        }
    }
    if points.is_empty() {
        return Ok(1.0);
    }
    let values = match representation {
        Representation::Sum => FiniteKernel::new(cfg)?.kernel_grid(points, points)?,
        Representation::Contour => kernel_contour_grid(cfg, points, points)?
            .into_iter()
            .map(|row| row.into_iter().map(|e| e.value).collect())
            .collect(),
    };
    Ok(block_determinant(&values))
}

/// Determinant of a kernel matrix given as rows.
pub fn block_determinant(values: &[Vec<f64>]) -> f64 {
    let k = values.len();
    DMatrix::from_fn(k, k, |i, j| values[i][j]).determinant()
}

/// Coupling and density scale of the `m = 2` legacy parametrization:
/// `b = (1−μ)/(2√μ)` and the factor `1/μ` with which `K_{n,2}(2, ζ/μ; 2, η/μ)`
/// equals the legacy kernel in `(ζ, η)`.
pub fn m2_parameter_map(mu: f64) -> Result<(f64, f64)> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Domain(format!("mu = {mu} must lie in (0, 1)")));
    }
    Ok(((1.0 - mu) / (2.0 * mu.sqrt()), 1.0 / mu))
}

/// Legacy `m = 2` kernel `Σ_{k<n} P_k(ζ) Q_k(η)` with
///
/// `P_k(ζ) = (−1)^k (ν+k)! k!/√μ · Σ_i (−k)_i/((ν+i)! i!) (2√ζ/(1−μ))^i I_i((1−μ)√ζ/μ)`,
/// `Q_k(η) = 2(−1)^k/(√μ (k!)²) · Σ_l (−k)_l/((ν+l)! l!) (2√η/(1+μ))^{l+ν} K_{l+ν}((1+μ)√η/μ)`.
pub fn legacy_m2_kernel(n: usize, nu: u32, mu: f64, zeta: f64, eta: f64) -> Result<f64> {
    m2_parameter_map(mu)?;
    check_positive(zeta)?;
    check_positive(eta)?;
    let nu_f = nu as f64;
    let ln_fact = |k: f64| ln_gamma_real(k + 1.0);
    let i_arg = (1.0 - mu) * zeta.sqrt() / mu;
    let k_arg = (1.0 + mu) * eta.sqrt() / mu;
    let i_vals = (0..n)
        .map(|i| Ok(bessel_i(Complex64::new(i as f64, 0.0), i_arg)?.re))
        .collect::<Result<Vec<f64>>>()?;
    let k_vals = (0..n)
        .map(|l| Ok(bessel_k(Complex64::new(l as f64 + nu_f, 0.0), k_arg)?.re))
        .collect::<Result<Vec<f64>>>()?;
    let mut total = 0.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut p_sum = 0.0;
        let mut q_sum = 0.0;
        for i in 0..=k {
            let coeff = falling_sign_pochhammer(k, i) * (-ln_fact(nu_f + i as f64) - ln_fact(i as f64)).exp();
            p_sum += coeff * (2.0 * zeta.sqrt() / (1.0 - mu)).powi(i as i32) * i_vals[i];
            q_sum += coeff * (2.0 * eta.sqrt() / (1.0 + mu)).powf(i as f64 + nu_f) * k_vals[i];
        }
        let p = sign * (ln_fact(nu_f + k as f64) + ln_fact(k as f64)).exp() / mu.sqrt() * p_sum;
        let q = 2.0 * sign / (mu.sqrt() * (ln_fact(k as f64) * 2.0).exp()) * q_sum;
        total += p * q;
    }
    Ok(total)
}

/// Both sides of the legacy identity: `(K_legacy(ζ,η), (1/μ)·K_{n,2}(2,ζ/μ;2,η/μ;b))`.
pub fn legacy_identity_sides(n: usize, nu: u32, mu: f64, zeta: f64, eta: f64) -> Result<(f64, f64)> {
    let (b, scale) = m2_parameter_map(mu)?;
    let cfg = ModelConfig::new(n, 2, vec![nu], b)?;
    let k = kernel_sum(KernelRequest { r: 2, x: zeta / mu, s: 2, y: eta / mu }, &cfg)?;
    Ok((legacy_m2_kernel(n, nu, mu, zeta, eta)?, scale * k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, AdaptiveOptions};

    /// Reference values from a 20-digit evaluation of the finite sums,
    /// cross-checked against direct residue summation of the contour form,
    /// at n = 2, m = 2, ν_1 = 1, b = 0.5, x = 0.7, y = 1.3.
    const REFERENCE: [((usize, usize), f64); 4] = [
        ((1, 1), 0.51549388652383483881),
        ((1, 2), -0.014443912277891500333),
        ((2, 1), 0.61777762905644808069),
        ((2, 2), 0.20591153975207258246),
    ];

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn sum_kernel_matches_reference_values() {
        let cfg = ModelConfig::new(2, 2, vec![1], 0.5).unwrap();
        let k = FiniteKernel::new(&cfg).unwrap();
        for ((r, s), want) in REFERENCE {
            let got = k.kernel(KernelRequest { r, x: 0.7, s, y: 1.3 }).unwrap();
            assert!(rel(got, want) < 1e-13, "({r},{s}): {got} vs {want}");
        }
    }

    #[test]
    fn single_term_p_values() {
        let cfg = ModelConfig::new(2, 3, vec![2, 1], 0.5).unwrap();
        let p = p_func(2, 0, 0.8, &cfg).unwrap();
        assert!((p - 1.0).abs() < 1e-15, "Γ(3)/(Γ(3)Γ(2)) = 1, got {p}");
        let i0 = bessel_i(Complex64::new(0.0, 0.0), 1.0).unwrap().re;
        let pm = p_func(3, 0, 1.0, &cfg).unwrap();
        assert!((pm - i0).abs() < 1e-14);
        let q = q_func(1, 0, 1.4, &cfg).unwrap();
        assert!((q - 1.4f64.powi(2) * (-1.4f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn first_level_is_the_laguerre_kernel() {
        // Orthonormal Laguerre construction: Σ_p p!/Γ(p+ν+1) L_p^ν(x) L_p^ν(y) y^ν e^{−y}.
        fn laguerre(p: usize, nu: f64, x: f64) -> f64 {
            let (mut prev, mut cur) = (0.0, 1.0);
            for k in 0..p {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 + nu - x) * cur - (kf + nu) * prev) / (kf + 1.0);
                prev = cur;
                cur = next;
            }
            cur
        }
        for n in 1..=5 {
            let cfg = ModelConfig::new(n, 3, vec![2, 1], 0.8).unwrap();
            let k = FiniteKernel::new(&cfg).unwrap();
            for (x, y) in [(0.3, 0.3), (1.1, 2.7), (4.0, 0.6)] {
                let got = k.kernel(KernelRequest { r: 1, x, s: 1, y }).unwrap();
                let want: f64 = (0..n)
                    .map(|p| {
                        (ln_factorial(p) - ln_gamma_real(p as f64 + 3.0)).exp()
                            * laguerre(p, 2.0, x)
                            * laguerre(p, 2.0, y)
                            * y.powi(2)
                            * (-y).exp()
                    })
                    .sum();
                assert!(rel(got, want) < 1e-12, "n={n} ({x},{y}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn lower_levels_do_not_depend_on_coupling() {
        let base = ModelConfig::new(3, 3, vec![1, 2], 0.01).unwrap();
        for (r, s) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            let req = KernelRequest { r, x: 0.9, s, y: 1.7 };
            let k0 = kernel_sum(req, &base).unwrap();
            for b in [1.0, 5.0] {
                let kb = kernel_sum(req, &base.with_b(b)).unwrap();
                assert!(rel(kb, k0) < 1e-10, "({r},{s}) b={b}: {kb} vs {k0}");
            }
        }
    }

    #[test]
    fn each_level_carries_n_points() {
        let opts = AdaptiveOptions { abs_tol: 1e-10, rel_tol: 1e-9, max_segments: 400 };
        for (n, nus, b) in [(1usize, vec![0u32], 0.6), (3, vec![1, 0], 0.5), (4, vec![0, 1], 1.2)] {
            let cfg = ModelConfig::new(n, nus.len() + 1, nus, b).unwrap();
            let k = FiniteKernel::new(&cfg).unwrap();
            for l in 1..=cfg.m {
                // x = e^s over [1e−9, 1e7]; the mass outside is far below 1e−4.
                let density = |s: f64| {
                    let x = s.exp();
                    x * k.kernel(KernelRequest { r: l, x, s: l, y: x }).unwrap()
                };
                let total = integrate(density, 1e-9f64.ln(), 1e7f64.ln(), opts).unwrap().value;
                assert!((total - n as f64).abs() < 1e-4, "n={n} level {l}: {total}");
            }
        }
    }

    #[test]
    fn two_point_determinant_is_nonnegative() {
        let cfg = ModelConfig::new(3, 3, vec![0, 1], 0.7).unwrap();
        for l in 1..=3 {
            for (x, y) in [(0.2, 0.3), (1.0, 1.01), (0.5, 4.0)] {
                let rho = correlation_function(&[(l, x), (l, y)], &cfg, Representation::Sum).unwrap();
                assert!(rho >= -1e-9, "level {l}: {rho}");
            }
        }
        assert!(correlation_function(&[(1, 0.1), (1, 0.2), (1, 0.3), (1, 0.4)], &cfg, Representation::Sum).is_err());
    }

    #[test]
    fn legacy_map_values() {
        assert!((m2_parameter_map(0.25).unwrap().0 - 0.75).abs() < 1e-15);
        assert!(m2_parameter_map(1.0 - 1e-12).unwrap().0 < 1e-11);
        assert!(m2_parameter_map(0.0).is_err());
        assert!(m2_parameter_map(1.0).is_err());
    }

    #[test]
    fn legacy_identity_holds_with_inverse_mu() {
        for (zeta, eta) in [(0.7, 1.2), (0.3, 0.3), (2.0, 0.9)] {
            let (legacy, ours) = legacy_identity_sides(3, 1, 0.36, zeta, eta).unwrap();
            assert!(rel(ours, legacy) < 1e-10, "({zeta},{eta}): {ours} vs {legacy}");
        }
    }
}
