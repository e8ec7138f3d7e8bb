//! Transition functions between levels.
//!
//! The integrals `∫_0^∞ G^{k,0}_{0,k}(ν | t) e^{−a/t − βt} dt/t` that appear
//! in `φ_{r,m}` and `φ_{0,m}` are computed by the trapezoid rule in
//! `s = ln t` over a table of `ln G(e^s)`. The integrand is analytic in a
//! strip around the real `s` axis and decays doubly exponentially at both
//! ends, so the rule converges geometrically in `1/h`.

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::specfun::{ln_bessel_k, ln_meijer_g_fast};
use num_complex::Complex64;

/// Step of the trapezoid rule in `ln t`.
const LOG_STEP: f64 = 0.125;

/// Left end of the table in `ln t`. With `a ≥ MIN_INNER_SCALE` the factor
/// `e^{−a/t}` is below `e^{−10000}` there.
const LOG_T_MIN: f64 = -37.0;

/// Smallest admissible `a` in `e^{−a/t}`.
pub(crate) const MIN_INNER_SCALE: f64 = 1e-12;

/// The table stops once `ln G` has fallen this far below its running peak.
const TABLE_TAIL_DROP: f64 = 800.0;

/// Hard cap on the right end of the table in `ln t`.
const LOG_T_MAX: f64 = 60.0;

/// Laplace-type integrals of a fixed `G^{k,0}_{0,k}`.
#[derive(Debug, Clone)]
pub(crate) enum GTable {
    /// `k = 1`: `G = t^ν e^{−t}` and the integral is a `K` Bessel function.
    Exponential { nu: f64 },
    /// `ln G(e^{s_0 + i h})` for `i = 0, 1, …`.
    Tabulated { ln_g: Vec<f64> },
}

impl GTable {
    /// Prepares the integrals for the parameter list `params` (non-empty).
    pub(crate) fn new(params: &[f64]) -> Result<Self> {
        match params {
            [] => Err(Error::Domain("G table needs at least one parameter".into())),
            [nu] => Ok(GTable::Exponential { nu: *nu }),
            _ => {
                let mut ln_g = Vec::new();
                let mut peak = f64::NEG_INFINITY;
                let mut s = LOG_T_MIN;
                loop {
                    let v = ln_meijer_g_fast(params, s.exp())?;
                    peak = peak.max(v);
                    ln_g.push(v);
                    if v < peak - TABLE_TAIL_DROP {
                        break;
                    }
                    s += LOG_STEP;
                    if s > LOG_T_MAX {
                        return Err(Error::NonConvergence(format!("G{params:?} does not decay before t = e^{LOG_T_MAX}")));
                    }
                }
                Ok(GTable::Tabulated { ln_g })
            }
        }
    }

    /// `ln ∫_0^∞ G(t) e^{−a/t − βt} dt/t` for `a ≥ 1e−12`, `β ≥ 0`.
    pub(crate) fn ln_laplace(&self, a: f64, beta: f64) -> Result<f64> {
        if !(a >= MIN_INNER_SCALE) || !a.is_finite() {
            return Err(Error::Domain(format!("inner scale {a} is below {MIN_INNER_SCALE}")));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::Domain(format!("damping {beta} must be finite and ≥ 0")));
        }
        match self {
            GTable::Exponential { nu } => {
                // ∫ t^{ν−1} e^{−a/t − (1+β)t} dt = 2 (a/(1+β))^{ν/2} K_ν(2√(a(1+β))).
                let k = ln_bessel_k(Complex64::new(*nu, 0.0), 2.0 * (a * (1.0 + beta)).sqrt())?;
                Ok(std::f64::consts::LN_2 + 0.5 * nu * (a / (1.0 + beta)).ln() + k.re)
            }
            GTable::Tabulated { ln_g } => {
                let exponent = |i: usize| {
                    let s = LOG_T_MIN + i as f64 * LOG_STEP;
                    ln_g[i] - a * (-s).exp() - beta * s.exp()
                };
                let peak = (0..ln_g.len()).map(exponent).fold(f64::NEG_INFINITY, f64::max);
                if !peak.is_finite() {
                    return Err(Error::QuadratureFailure("transition integrand vanishes on the table".into()));
                }
                let sum: f64 = (0..ln_g.len()).map(|i| (exponent(i) - peak).exp()).sum();
                Ok(peak + (sum * LOG_STEP).ln())
            }
        }
    }
}

/// Transition functions `φ_{r,s}` and `φ_{0,s}(j+1, ·)` of one configuration,
/// with the `G` tables they need built up front.
#[derive(Debug, Clone)]
pub(crate) struct Transitions {
    cfg: ModelConfig,
    /// `ψ` tables for `φ_{0,m}(j+1, ·)`, parameters `(ν_1+j, ν_2..ν_{m−1})`.
    psi: Vec<GTable>,
    /// `φ_{r,m}` tables for `r ≤ m−2`, parameters `(ν_{r+1}..ν_{m−1})`.
    phi_to_last: Vec<GTable>,
}

impl Transitions {
    pub(crate) fn new(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let tail: Vec<f64> = (2..cfg.m).map(|l| cfg.nu_f(l)).collect();
        let psi = (0..cfg.n)
            .map(|j| {
                let mut params = vec![cfg.nu_f(1) + j as f64];
                params.extend_from_slice(&tail);
                GTable::new(&params)
            })
            .collect::<Result<Vec<_>>>()?;
        let phi_to_last = (1..cfg.m.saturating_sub(1))
            .map(|r| GTable::new(&(r + 1..cfg.m).map(|l| cfg.nu_f(l)).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Transitions { cfg: cfg.clone(), psi, phi_to_last })
    }

    pub(crate) fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    /// `φ_{r,s}(x, y)` for levels `1 ≤ r, s ≤ m`.
    pub(crate) fn phi(&self, r: usize, s: usize, x: f64, y: f64) -> Result<f64> {
        let m = self.cfg.m;
        check_level(r, m)?;
        check_level(s, m)?;
        check_positive(x)?;
        check_positive(y)?;
        let b2 = self.cfg.b * self.cfg.b;
        if s <= r {
            Ok(0.0)
        } else if s < m {
            let params: Vec<f64> = (r + 1..=s).map(|l| self.cfg.nu_f(l)).collect();
            Ok((ln_meijer_g_fast(&params, y / x)? - x.ln()).exp())
        } else if r == m - 1 {
            Ok((-y / x - b2 * x).exp() / x)
        } else {
            // Substituting t = xτ: (1/x)∫ G(τ) e^{−(y/x)/τ − b²xτ} dτ/τ.
            Ok((self.phi_to_last[r - 1].ln_laplace(y / x, b2 * x)? - x.ln()).exp())
        }
    }

    /// `ln φ_{0,s}(j+1, y)` for `0 ≤ j < n`.
    pub(crate) fn ln_phi_from_origin(&self, s: usize, j: usize, y: f64) -> Result<f64> {
        check_level(s, self.cfg.m)?;
        check_positive(y)?;
        if s < self.cfg.m {
            let mut params = vec![self.cfg.nu_f(1) + j as f64];
            params.extend((2..=s).map(|l| self.cfg.nu_f(l)));
            ln_meijer_g_fast(&params, y)
        } else {
            let b = self.cfg.b;
            self.psi[j].ln_laplace(y, b * b)
        }
    }

    /// `φ_{0,s}(j+1, y)` for `0 ≤ j < n`.
    #[cfg(test)]
    pub(crate) fn phi_from_origin(&self, s: usize, j: usize, y: f64) -> Result<f64> {
        Ok(self.ln_phi_from_origin(s, j, y)?.exp())
    }
}

pub(crate) fn check_level(l: usize, m: usize) -> Result<()> {
    if l == 0 || l > m {
        return Err(Error::Domain(format!("level {l} outside 1..={m}")));
    }
    Ok(())
}

pub(crate) fn check_positive(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("argument {x} must be finite and positive")));
    }
    Ok(())
}
