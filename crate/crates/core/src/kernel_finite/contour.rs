//! Double contour form of the finite-`n` kernels.
//!
//! `S = (2πi)^{−2} ∫_{Re u = −1/2} du ∮_{Σ_n} dt F_r(t; x) G_s(u; y) / (u − t)`
//! with
//!
//! * `F_r(t; x) = Γ(t−n+1) x^t p_r(t, x) / ∏_{j=0}^{r} Γ(t+ν_j+1)`,
//! * `G_s(u; y) = ∏_{j=0}^{s} Γ(u+ν_j+1) y^{−u−1} q_s(u+1, y) / Γ(u−n+1)`,
//!
//! where `p_m(t, x) = ₀F₁(; t+1; b²x)`, `q_m(u, y) = 2(b√y)^u K_u(2b√y)/Γ(u)`
//! and `p_r = q_s = 1` on the other levels. The `t` loop is a rectangle
//! around `0..n−1` whose left side sits at `Re t = −1/4`; the `u` line is cut
//! where its factor has decayed by `e^{−40}` from its peak.

use super::transition::Transitions;
use super::{check_index, KernelEvaluation, KernelRequest};
use crate::contours::{decay_cutoff, integrate_contour, ContourSpec, SeparablePlan};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::quadrature::QuadratureResult;
use crate::specfun::{exp_checked, ln_bessel_k, ln_gamma, ln_gamma_real, ln_hyp0f1, ln_meijer_g_fast};
use crate::tolerances::{CONTOUR_TAIL_DROP, T_CONTOUR_HALF_HEIGHT};
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

/// Abscissa of the `u` line.
const U_LINE: f64 = -0.5;

/// Left side of the `t` rectangle; `Re t > −1/2` keeps it clear of the line.
const T_LOOP_LEFT: f64 = -0.25;

/// Probe spacing used when locating the end of the `u` line.
const HEIGHT_PROBE_STEP: f64 = 0.5;

/// Largest admissible half-height of the `u` line.
const MAX_LINE_HEIGHT: f64 = 20_000.0;

/// Abscissa of the single-contour lines for `Q_{s,p}`.
const Q_LINE: f64 = 0.5;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Loop around `0..n−1` used for finite-`n` kernels.
pub(crate) fn finite_t_contour(n: usize) -> ContourSpec {
    ContourSpec::rectangle_loop(T_LOOP_LEFT, n as f64 - 0.5, T_CONTOUR_HALF_HEIGHT)
}

/// Half-height beyond which `ln|factor(σ)|` stays `40` below its peak.
/// `ln_abs` must be symmetric in `σ`.
pub(crate) fn u_line_height(ln_abs: impl Fn(f64) -> f64) -> Result<f64> {
    decay_cutoff(ln_abs, 0.0, HEIGHT_PROBE_STEP, MAX_LINE_HEIGHT, CONTOUR_TAIL_DROP)
}

/// `ln q_m(w, y) = ln(2 (b√y)^w K_w(2b√y) / Γ(w))`, with `q = 1` at `b = 0`.
pub(crate) fn ln_q_last(w: Complex64, y: f64, b: f64) -> Result<Complex64> {
    if b == 0.0 {
        return Ok(c(0.0, 0.0));
    }
    let z = b * y.sqrt();
    Ok(LN_2 + w * z.ln() + ln_bessel_k(w, 2.0 * z)? - ln_gamma(w))
}

/// The pieces shared by the coupled kernel and the uncoupled product kernel.
#[derive(Debug, Clone)]
struct FiniteContourModel {
    n: usize,
    /// `ν_0, ν_1, …, ν_M`.
    chain: Vec<f64>,
    /// Coupling of the last level, if any.
    coupling: Option<f64>,
}

impl FiniteContourModel {
    fn levels(&self) -> usize {
        self.chain.len() - 1
    }

    fn ln_f(&self, r: usize, x: f64, t: Complex64) -> Result<Complex64> {
        let mut ln = ln_gamma(t - (self.n as f64 - 1.0)) + t * x.ln();
        for nu in &self.chain[..=r] {
            ln -= ln_gamma(t + nu + 1.0);
        }
        if let (Some(b), true) = (self.coupling, r == self.levels()) {
            ln += ln_hyp0f1(t + 1.0, b * b * x)?;
        }
        Ok(ln)
    }

    fn ln_g(&self, s: usize, y: f64, u: Complex64) -> Result<Complex64> {
        let mut ln = -ln_gamma(u - (self.n as f64 - 1.0)) - (u + 1.0) * y.ln();
        for nu in &self.chain[..=s] {
            ln += ln_gamma(u + nu + 1.0);
        }
        if let (Some(b), true) = (self.coupling, s == self.levels()) {
            ln += ln_q_last(u + 1.0, y, b)?;
        }
        Ok(ln)
    }

    /// `S` for every pair of `rows` × `cols`.
    fn grid(&self, rows: &[(usize, f64)], cols: &[(usize, f64)]) -> Result<Vec<Vec<QuadratureResult>>> {
        let mut height: f64 = 1.0;
        for &(s, y) in cols {
            let h = u_line_height(|sigma| self.ln_g(s, y, c(U_LINE, sigma)).map(|v| v.re).unwrap_or(f64::NAN))?;
            height = height.max(h);
        }
        let plan = SeparablePlan::new(&ContourSpec::vertical_line(U_LINE, height), &finite_t_contour(self.n))?;
        plan.evaluate_grid(
            rows.len(),
            cols.len(),
            |ix, t| self.ln_f(rows[ix].0, rows[ix].1, t),
            |iy, u| self.ln_g(cols[iy].0, cols[iy].1, u),
        )
    }
}

fn validate_points(points: &[(usize, f64)], m: usize) -> Result<()> {
    for &(l, x) in points {
        KernelRequest { r: l, x, s: l, y: x }.validate(m)?;
    }
    Ok(())
}

fn assemble(
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
    s: Vec<Vec<QuadratureResult>>,
    phi: impl Fn(usize, usize, f64, f64) -> Result<f64>,
) -> Result<Vec<Vec<KernelEvaluation>>> {
    rows.iter()
        .zip(s)
        .map(|(&(r, x), row)| {
            cols.iter()
                .zip(row)
                .map(|(&(s, y), q)| {
                    Ok(KernelEvaluation {
                        value: q.value.re - phi(r, s, x, y)?,
                        error_estimate: q.error_estimate + q.value.im.abs(),
                    })
                })
                .collect()
        })
        .collect()
}

/// Contour-form kernel `K_{n,m}(r_i,x_i; s_j,y_j; b)` for every row/column
/// pair, sharing one discretization.
pub fn kernel_contour_grid(
    cfg: &ModelConfig,
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
) -> Result<Vec<Vec<KernelEvaluation>>> {
    cfg.validate()?;
    validate_points(rows, cfg.m)?;
    validate_points(cols, cfg.m)?;
    let model = FiniteContourModel {
        n: cfg.n,
        chain: (0..=cfg.m).map(|l| cfg.nu_f(l)).collect(),
        coupling: Some(cfg.b),
    };
    let transitions = Transitions::new(cfg)?;
    let s = model.grid(rows, cols)?;
    assemble(rows, cols, s, |r, s, x, y| transitions.phi(r, s, x, y))
}

/// Contour-form kernel at a single pair of arguments.
pub fn kernel_contour(req: KernelRequest, cfg: &ModelConfig) -> Result<KernelEvaluation> {
    Ok(kernel_contour_grid(cfg, &[(req.r, req.x)], &[(req.s, req.y)])?[0][0])
}

/// Kernel of the uncoupled product of `nus.len()` Ginibre matrices with
/// `ν_1..ν_M = nus`, for every row/column pair.
pub fn kernel_ginibre_finite_grid(
    n: usize,
    nus: &[u32],
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
) -> Result<Vec<Vec<KernelEvaluation>>> {
    if n == 0 || nus.is_empty() {
        return Err(Error::Config("need n ≥ 1 and at least one level".into()));
    }
    let levels = nus.len();
    validate_points(rows, levels)?;
    validate_points(cols, levels)?;
    let mut chain = vec![0.0];
    chain.extend(nus.iter().map(|&v| v as f64));
    let model = FiniteContourModel { n, chain: chain.clone(), coupling: None };
    let s = model.grid(rows, cols)?;
    assemble(rows, cols, s, |r, s, x, y| {
        if s <= r {
            return Ok(0.0);
        }
        Ok((ln_meijer_g_fast(&chain[r + 1..=s], y / x)? - x.ln()).exp())
    })
}

/// Uncoupled product kernel at a single pair of arguments; levels run over
/// `1..=nus.len()`.
pub fn kernel_ginibre_finite(req: KernelRequest, n: usize, nus: &[u32]) -> Result<KernelEvaluation> {
    Ok(kernel_ginibre_finite_grid(n, nus, &[(req.r, req.x)], &[(req.s, req.y)])?[0][0])
}

/// Integrates once at the default resolution to learn the scale, then to
/// relative accuracy `1e−12` of that scale.
fn integrate_scaled(spec: &ContourSpec, f: impl Fn(Complex64) -> Complex64) -> Result<Complex64> {
    let rough = integrate_contour(spec, &f, f64::INFINITY)?;
    let scale = rough.value.norm().max(f64::MIN_POSITIVE);
    Ok(integrate_contour(spec, &f, 1e-12 * scale)?.value)
}

/// `P_{r,p}(x)` from its loop-integral form around `0..p`.
pub fn p_func_contour(r: usize, p: usize, x: f64, cfg: &ModelConfig) -> Result<f64> {
    cfg.validate()?;
    check_index(p, cfg.n)?;
    KernelRequest { r, x, s: r, y: x }.validate(cfg.m)?;
    let chain: Vec<f64> = (0..=cfg.m).map(|l| cfg.nu_f(l)).collect();
    let b2x = cfg.b * cfg.b * x;
    let ln_f = |t: Complex64| -> Result<Complex64> {
        let mut ln = ln_gamma(t - p as f64) + t * x.ln();
        for nu in &chain[..=r] {
            ln -= ln_gamma(t + nu + 1.0);
        }
        if r == cfg.m {
            ln += ln_hyp0f1(t + 1.0, b2x)?;
        }
        Ok(ln)
    };
    let spec = ContourSpec::rectangle_loop(-0.5, p as f64 + 0.5, 0.5);
    let integral = integrate_scaled(&spec, |t| ln_f(t).and_then(exp_checked).unwrap_or(c(f64::NAN, 0.0)))
        .map_err(|e| match e {
            Error::QuadratureFailure(msg) => Error::QuadratureFailure(format!("P_{{{r},{p}}}: {msg}")),
            other => other,
        })?;
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let prefactor = sign * (ln_gamma_real(cfg.nu_f(1) + 1.0) + ln_gamma_real(p as f64 + 1.0)).exp();
    Ok(prefactor * (integral / c(0.0, 2.0 * PI)).re)
}

/// `Q_{s,p}(y)` from its line-integral form on `Re u = 1/2`.
pub fn q_func_contour(s: usize, p: usize, y: f64, cfg: &ModelConfig) -> Result<f64> {
    cfg.validate()?;
    check_index(p, cfg.n)?;
    KernelRequest { r: s, x: y, s, y }.validate(cfg.m)?;
    let chain: Vec<f64> = (0..=cfg.m).map(|l| cfg.nu_f(l)).collect();
    let ln_h = |u: Complex64| -> Result<Complex64> {
        let mut ln = -ln_gamma(u - p as f64) - u * y.ln();
        for nu in &chain[..=s] {
            ln += ln_gamma(u + nu);
        }
        if s == cfg.m {
            // 2 b^u y^{−u/2} K_u(2b√y)/Γ(u) = y^{−u}·q_m(u, y).
            ln += ln_q_last(u, y, cfg.b)?;
        }
        Ok(ln)
    };
    let height = u_line_height(|sigma| ln_h(c(Q_LINE, sigma)).map(|v| v.re).unwrap_or(f64::NAN))?;
    let spec = ContourSpec::vertical_line(Q_LINE, height);
    let integral = integrate_scaled(&spec, |u| ln_h(u).and_then(exp_checked).unwrap_or(c(f64::NAN, 0.0)))?;
    let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
    let nu1 = cfg.nu_f(1);
    let prefactor = sign * (ln_gamma_real(1.0 + nu1) - ln_gamma_real(1.0 + nu1 + p as f64)).exp();
    Ok(prefactor * (integral / c(0.0, 2.0 * PI)).re)
}
