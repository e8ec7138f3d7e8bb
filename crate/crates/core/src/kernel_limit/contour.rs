//! Double contour form of the hard-edge limiting kernels.
//!
//! The `t` loop `Σ_∞` is truncated where its factor has decayed. The `u`
//! integral runs over the vertical line `Re u = −1/2` for columns on the
//! coupled level, and over a left-opening wedge with vertex at `−1/2` for
//! all other columns.
//!
//! Without the coupled factor the line integrand need not decay: for the
//! one-level kernel `|Γ(u+1)Γ(u+ν+1) sin πu| ~ π|Im u|^ν`, so the line
//! integral only exists as an oscillatory limit. The sector between the
//! upper half-line and the upper ray (and its mirror image) contains no pole
//! of the integrand, and on every ray strictly inside the left half-plane
//! the factor decays like `1/Γ(−u)`, so the wedge gives the same value with
//! an absolutely convergent integrand. With the coupled factor the line
//! integrand decays like `e^{−(m−1)π|Im u|/2}`, while on the wedge
//! `q_m(u+1, y; α)` grows like `(α√y)^{2u}` before it decays, which for
//! small `α` would cost every digit to cancellation.
//!
//! With the reflection formula `Γ(1+z) sin πz = −π/Γ(−z)` the weight
//! `sin πu / sin πt` combines with the `j = 0` Gamma factors into
//! `Γ(−t)/Γ(−u)`, the same shape as the ratio `Γ(t−n+1)/Γ(u−n+1)` of the
//! finite-`n` kernel.

use crate::contours::{decay_cutoff, ContourSpec, SeparablePlan};
use crate::error::Result;
use crate::kernel_finite::ln_q_last;
use crate::quadrature::QuadratureResult;
use crate::specfun::{ln_gamma, ln_hyp0f1};
use crate::tolerances::{CONTOUR_TAIL_DROP, T_CONTOUR_HALF_HEIGHT};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Vertex of the `u` wedge; the vertical line `Re u = −1/2` passes through it.
const U_VERTEX: f64 = -0.5;

/// Angle of the upper wedge ray from the positive real axis.
const U_WEDGE_ANGLE: f64 = 0.75 * PI;

/// Left side of `Σ_∞`.
const T_LOOP_LEFT: f64 = -0.25;

/// Probe spacing used when truncating either contour.
const PROBE_STEP: f64 = 0.5;

/// Largest admissible wedge radius and loop length.
const MAX_CONTOUR_REACH: f64 = 2_000.0;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `ν_0 = 0, ν_1, …, ν_M` and an optional coupling `α` of level `M`.
#[derive(Debug, Clone)]
pub(super) struct LimitContourModel {
    pub(super) chain: Vec<f64>,
    pub(super) coupling: Option<f64>,
}

impl LimitContourModel {
    fn levels(&self) -> usize {
        self.chain.len() - 1
    }

    fn coupled(&self, level: usize) -> Option<f64> {
        self.coupling.filter(|_| level == self.levels())
    }

    /// `ln[Γ(−t) x^t p_r(t, x) / ∏_{j=1}^{r} Γ(t+ν_j+1)]`.
    fn ln_f(&self, r: usize, x: f64, t: Complex64) -> Result<Complex64> {
        let mut ln = ln_gamma(-t) + t * x.ln();
        for nu in &self.chain[1..=r] {
            ln -= ln_gamma(t + nu + 1.0);
        }
        if let Some(alpha) = self.coupled(r) {
            ln += ln_hyp0f1(t + 1.0, alpha * alpha * x)?;
        }
        Ok(ln)
    }

    /// `ln[∏_{j=1}^{s} Γ(u+ν_j+1) y^{−u−1} q_s(u+1, y) / Γ(−u)]`.
    fn ln_g(&self, s: usize, y: f64, u: Complex64) -> Result<Complex64> {
        let mut ln = -ln_gamma(-u) - (u + 1.0) * y.ln();
        for nu in &self.chain[1..=s] {
            ln += ln_gamma(u + nu + 1.0);
        }
        if let Some(alpha) = self.coupled(s) {
            ln += ln_q_last(u + 1.0, y, alpha)?;
        }
        Ok(ln)
    }

    /// `u` contour for a set of columns: the wedge when no column carries
    /// the coupled factor, otherwise the vertical line.
    fn u_contour(&self, cols: &[(usize, f64)], coupled: bool) -> Result<ContourSpec> {
        if coupled {
            let mut height: f64 = 1.0;
            for &(s, y) in cols {
                let h = decay_cutoff(
                    |sigma| self.ln_g(s, y, c(U_VERTEX, sigma)).map(|v| v.re).unwrap_or(f64::NAN),
                    0.0,
                    PROBE_STEP,
                    MAX_CONTOUR_REACH,
                    CONTOUR_TAIL_DROP,
                )?;
                height = height.max(h);
            }
            return Ok(ContourSpec::vertical_line(U_VERTEX, height));
        }
        let ray = Complex64::from_polar(1.0, U_WEDGE_ANGLE);
        let mut radius: f64 = 1.0;
        for &(s, y) in cols {
            let reach = decay_cutoff(
                |rho| self.ln_g(s, y, c(U_VERTEX, 0.0) + ray * rho).map(|v| v.re).unwrap_or(f64::NAN),
                0.0,
                PROBE_STEP,
                MAX_CONTOUR_REACH,
                CONTOUR_TAIL_DROP,
            )?;
            radius = radius.max(reach);
        }
        Ok(ContourSpec::wedge(U_VERTEX, U_WEDGE_ANGLE, radius))
    }

    /// The double-contour term for every pair of `rows` × `cols`.
    pub(super) fn grid(&self, rows: &[(usize, f64)], cols: &[(usize, f64)]) -> Result<Vec<Vec<QuadratureResult>>> {
        let h = T_CONTOUR_HALF_HEIGHT;
        let mut right_cut: f64 = 1.0;
        for &(r, x) in rows {
            let cut = decay_cutoff(
                |sigma| self.ln_f(r, x, c(sigma, h)).map(|v| v.re).unwrap_or(f64::NAN),
                T_LOOP_LEFT,
                PROBE_STEP,
                MAX_CONTOUR_REACH,
                CONTOUR_TAIL_DROP,
            )?;
            right_cut = right_cut.max(cut);
        }
        let t_loop = ContourSpec::truncated_infinite_loop(T_LOOP_LEFT, right_cut, h);
        let empty = QuadratureResult { value: c(0.0, 0.0), error_estimate: 0.0, nodes_used: 0 };
        let mut out = vec![vec![empty; cols.len()]; rows.len()];
        let (with_q, plain): (Vec<usize>, Vec<usize>) =
            (0..cols.len()).partition(|&j| self.coupled(cols[j].0).is_some());
        for (group, coupled) in [(with_q, true), (plain, false)] {
            if group.is_empty() {
                continue;
            }
            let gcols: Vec<_> = group.iter().map(|&j| cols[j]).collect();
            let plan = SeparablePlan::new(&self.u_contour(&gcols, coupled)?, &t_loop)?;
            let values = plan.evaluate_grid(
                rows.len(),
                gcols.len(),
                |ix, t| self.ln_f(rows[ix].0, rows[ix].1, t),
                |iy, u| self.ln_g(gcols[iy].0, gcols[iy].1, u),
            )?;
            for (row_out, row) in out.iter_mut().zip(values) {
                for (&j, v) in group.iter().zip(row) {
                    row_out[j] = v;
                }
            }
        }
        Ok(out)
    }
}
