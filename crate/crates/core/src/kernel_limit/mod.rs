//! Hard-edge limits of the multi-level kernels.
//!
//! * [`kernel_ginibre_infinite`]: the multi-level Meijer G-kernel
//!   `K^{Gin}_{∞,M}(r,x;s,y)` of `M` uncoupled Ginibre levels;
//! * [`kernel_interpolating`]: its one-parameter deformation
//!   `K^{int}_{∞,m}(r,x;s,y;α)` reached when `b(n)/√n → α`;
//! * [`bessel_kernel_closed_form`]: the classical hard-edge Bessel kernel,
//!   used as an independent reference for the one-level case;
//! * [`scaling`]: numerical verification of the three coupling regimes.
//!
//! All limiting kernels share one contour evaluator (see [`contour`]).

mod contour;
pub mod scaling;

pub use scaling::{
    delta_mass_check, verify_scaling_limit, DeltaMass, LimitBlock, LimitRegime, ScalingReport,
};

use crate::error::{Error, Result};
use crate::kernel_finite::{KernelEvaluation, KernelRequest, Transitions};
use crate::model::ModelConfig;
use crate::specfun::{bessel_j_real, ln_meijer_g_fast};
use contour::LimitContourModel;

/// Largest `4x` accepted by [`bessel_kernel_closed_form`]; the power series
/// of `J_ν(2√x)` is restricted to arguments up to 30.
const BESSEL_MAX_ARGUMENT: f64 = 225.0;

fn validate_points(points: &[(usize, f64)], m: usize) -> Result<()> {
    for &(l, x) in points {
        KernelRequest { r: l, x, s: l, y: x }.validate(m)?;
    }
    Ok(())
}

fn chain_of(nus: &[u32]) -> Vec<f64> {
    std::iter::once(0.0).chain(nus.iter().map(|&v| v as f64)).collect()
}

/// `(1/x) G^{s−r,0}_{0,s−r}(ν_{r+1},…,ν_s | y/x)` for `s > r`, else `0`.
fn ginibre_phi(chain: &[f64], r: usize, s: usize, x: f64, y: f64) -> Result<f64> {
    if s <= r {
        return Ok(0.0);
    }
    Ok((ln_meijer_g_fast(&chain[r + 1..=s], y / x)? - x.ln()).exp())
}

fn combine(
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
    model: &LimitContourModel,
    phi: impl Fn(usize, usize, f64, f64) -> Result<f64>,
) -> Result<Vec<Vec<KernelEvaluation>>> {
    let s = model.grid(rows, cols)?;
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

/// `K^{Gin}_{∞,M}(r_i,x_i; s_j,y_j)` with `M = nus.len()` levels and
/// `ν_1..ν_M = nus`, for every row/column pair.
pub fn kernel_ginibre_infinite_grid(
    nus: &[u32],
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
) -> Result<Vec<Vec<KernelEvaluation>>> {
    if nus.is_empty() {
        return Err(Error::Config("the limiting kernel needs at least one level".into()));
    }
    validate_points(rows, nus.len())?;
    validate_points(cols, nus.len())?;
    let chain = chain_of(nus);
    let model = LimitContourModel { chain: chain.clone(), coupling: None };
    combine(rows, cols, &model, |r, s, x, y| ginibre_phi(&chain, r, s, x, y))
}

/// `K^{Gin}_{∞,M}(r,x;s,y)` at one pair of arguments.
pub fn kernel_ginibre_infinite(req: KernelRequest, nus: &[u32]) -> Result<KernelEvaluation> {
    Ok(kernel_ginibre_infinite_grid(nus, &[(req.r, req.x)], &[(req.s, req.y)])?[0][0])
}

/// `K^{int}_{∞,m}(r_i,x_i; s_j,y_j; α)` with `m = nus.len() + 1` levels and
/// `ν_1..ν_{m−1} = nus`, for every row/column pair.
///
/// Pairs with `r = m` or `s = m` use the coupled double integral and the
/// transition function `φ_{r,s}(x,y;α)`, which is the finite-`n` one with
/// `b = α`. Pairs with both levels below `m` are evaluated by the uncoupled
/// evaluator, i.e. as `K^{Gin}_{∞,m−1}`.
pub fn kernel_interpolating_grid(
    alpha: f64,
    nus: &[u32],
    rows: &[(usize, f64)],
    cols: &[(usize, f64)],
) -> Result<Vec<Vec<KernelEvaluation>>> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("α = {alpha} must be finite and positive")));
    }
    let cfg = ModelConfig::new(1, nus.len() + 1, nus.to_vec(), alpha)?;
    let m = cfg.m;
    validate_points(rows, m)?;
    validate_points(cols, m)?;
    let mut chain = chain_of(nus);
    chain.push(0.0);
    let coupled = LimitContourModel { chain: chain.clone(), coupling: Some(alpha) };
    let uncoupled = LimitContourModel { chain: chain.clone(), coupling: None };
    let transitions = Transitions::new(&cfg)?;
    let mut out = vec![vec![KernelEvaluation { value: 0.0, error_estimate: 0.0 }; cols.len()]; rows.len()];
    // Split the grid by whether the last level is involved.
    let split = |points: &[(usize, f64)]| -> (Vec<usize>, Vec<usize>) {
        (0..points.len()).partition(|&i| points[i].0 == m)
    };
    let (rows_top, rows_low) = split(rows);
    let (cols_top, cols_low) = split(cols);
    let pick = |idx: &[usize], pts: &[(usize, f64)]| idx.iter().map(|&i| pts[i]).collect::<Vec<_>>();
    let blocks: [(&[usize], &[usize], bool); 4] = [
        (&rows_top, &cols_top, true),
        (&rows_top, &cols_low, true),
        (&rows_low, &cols_top, true),
        (&rows_low, &cols_low, false),
    ];
    for (ri, ci, uses_last) in blocks {
        if ri.is_empty() || ci.is_empty() {
            continue;
        }
        let (brows, bcols) = (pick(ri, rows), pick(ci, cols));
        let values = if uses_last {
            combine(&brows, &bcols, &coupled, |r, s, x, y| transitions.phi(r, s, x, y))?
        } else {
            combine(&brows, &bcols, &uncoupled, |r, s, x, y| ginibre_phi(&chain, r, s, x, y))?
        };
        for (a, row) in ri.iter().zip(values) {
            for (b, v) in ci.iter().zip(row) {
                out[*a][*b] = v;
            }
        }
    }
    Ok(out)
}

/// `K^{int}_{∞,m}(r,x;s,y;α)` at one pair of arguments.
pub fn kernel_interpolating(req: KernelRequest, alpha: f64, nus: &[u32]) -> Result<KernelEvaluation> {
    Ok(kernel_interpolating_grid(alpha, nus, &[(req.r, req.x)], &[(req.s, req.y)])?[0][0])
}

/// Hard-edge Bessel kernel in the normalization of the one-level limit:
///
/// `B(x,y) = [J_ν(2√x) √y J_ν'(2√y) − √x J_ν'(2√x) J_ν(2√y)] / (x − y)`,
///
/// with `B(x,x) = J_ν(2√x)² − J_{ν+1}(2√x) J_{ν−1}(2√x)`. It is symmetric;
/// the contour form of `K^{Gin}_{∞,1}(1,x;1,y)` equals `(y/x)^{ν/2} B(x,y)`.
pub fn bessel_kernel_closed_form(nu: f64, x: f64, y: f64) -> Result<f64> {
    for v in [x, y] {
        if !(v > 0.0 && v <= BESSEL_MAX_ARGUMENT) {
            return Err(Error::Domain(format!("Bessel kernel argument {v} outside (0, {BESSEL_MAX_ARGUMENT}]")));
        }
    }
    let (zx, zy) = (2.0 * x.sqrt(), 2.0 * y.sqrt());
    let j = |order: f64, z: f64| bessel_j_real(order, z);
    if x == y {
        return Ok(j(nu, zx)?.powi(2) - j(nu + 1.0, zx)? * j(nu - 1.0, zx)?);
    }
    // J_ν'(z) = (J_{ν−1}(z) − J_{ν+1}(z)) / 2.
    let dj = |z: f64| -> Result<f64> { Ok(0.5 * (j(nu - 1.0, z)? - j(nu + 1.0, z)?)) };
    Ok((j(nu, zx)? * y.sqrt() * dj(zy)? - x.sqrt() * dj(zx)? * j(nu, zy)?) / (x - y))
}
