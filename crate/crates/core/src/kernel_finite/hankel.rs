//! The moment matrix `A` of the biorthogonal system and its explicit inverse.
//!
//! `a_ij = b^{j−1} Γ(i+j−1+ν_1) ∏_{l=2}^{m−1} Γ(j+ν_l)` factors as a Hankel
//! matrix of Gamma values times a diagonal matrix, so its inverse is the
//! classical Laguerre-moment inverse scaled by that diagonal.
//!
//! The entries span tens of orders of magnitude already at `n = 12`, and
//! `A·C` formed in `f64` loses every digit to cancellation. The identity
//! check is therefore done in exact rational arithmetic with
//! [`exact_identity_residual`]; the `f64` residual is available as a
//! diagnostic only.

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::specfun::{ln_gamma_real, MAX_LN_F64};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `A` and its closed-form inverse `C`, both in `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelSystem {
    /// `a[(i−1, j−1)] = a_ij`.
    pub a: DMatrix<f64>,
    /// `c[(j−1, k−1)] = c_jk`.
    pub c: DMatrix<f64>,
}

impl HankelSystem {
    /// `‖A·C − I‖_max` evaluated in `f64`. Meaningless beyond `n ≈ 6`.
    pub fn residual_f64(&self) -> f64 {
        let n = self.a.nrows();
        (&self.a * &self.c - DMatrix::<f64>::identity(n, n)).amax()
    }
}

fn require_coupling(cfg: &ModelConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.b == 0.0 && cfg.n > 1 {
        return Err(Error::Domain("the moment matrix is singular at b = 0 for n > 1".into()));
    }
    Ok(())
}

fn exp_entry(ln: f64, what: &str) -> Result<f64> {
    if ln > MAX_LN_F64 {
        return Err(Error::Overflow(format!("{what} exceeds the f64 range (log {ln:.1})")));
    }
    Ok(ln.exp())
}

/// `ln(b^{j−1} ∏_{l=2}^{m−1} Γ(j+ν_l))`, the column scaling of `A`.
fn ln_column_scale(cfg: &ModelConfig, j: usize) -> f64 {
    let ln_b = if j == 1 { 0.0 } else { (j as f64 - 1.0) * cfg.b.ln() };
    ln_b + (2..cfg.m).map(|l| ln_gamma_real(j as f64 + cfg.nu_f(l))).sum::<f64>()
}

/// Builds `A` and `C`, each entry assembled from log-Gamma sums.
pub fn hankel_system(cfg: &ModelConfig) -> Result<HankelSystem> {
    require_coupling(cfg)?;
    let n = cfg.n;
    let nu1 = cfg.nu_f(1);
    let mut a = DMatrix::zeros(n, n);
    for i in 1..=n {
        for j in 1..=n {
            let ln = ln_column_scale(cfg, j) + ln_gamma_real((i + j - 1) as f64 + nu1);
            a[(i - 1, j - 1)] = exp_entry(ln, "a_ij")?;
        }
    }
    // α_{kl} = Σ_p Γ(ν_1+p+1)/(p! Γ(ν_1+1)²)·(−p)_k(−p)_l/((ν_1+1)_k (ν_1+1)_l k! l!)
    // with (−p)_k = (−1)^k p!/(p−k)!, then c_jk = α_{j−1,k−1} / colscale_j.
    let ln_poch = |k: usize| ln_gamma_real(nu1 + 1.0 + k as f64) - ln_gamma_real(nu1 + 1.0);
    let ln_fact = |k: usize| ln_gamma_real(k as f64 + 1.0);
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            let mut sum = 0.0;
            for p in j.max(k)..n {
                let ln_term = ln_gamma_real(nu1 + p as f64 + 1.0) - ln_fact(p) - 2.0 * ln_gamma_real(nu1 + 1.0)
                    + (ln_fact(p) - ln_fact(p - j))
                    + (ln_fact(p) - ln_fact(p - k))
                    - ln_poch(j)
                    - ln_poch(k)
                    - ln_fact(j)
                    - ln_fact(k)
                    - ln_column_scale(cfg, j + 1);
                sum += exp_entry(ln_term, "c_jk")?;
            }
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            c[(j, k)] = sign * sum;
        }
    }
    Ok(HankelSystem { a, c })
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// `Γ(k)` for a positive integer `k`.
fn gamma_int(k: usize) -> BigInt {
    factorial(k - 1)
}

/// Rising factorial `(a)_k` for an integer `a`.
fn pochhammer(a: i64, k: usize) -> BigInt {
    (0..k as i64).fold(BigInt::one(), |acc, i| acc * BigInt::from(a + i))
}

/// Exact `A` and `C` over the rationals; `b` is taken as the exact binary
/// value of the `f64`.
pub fn exact_hankel_system(cfg: &ModelConfig) -> Result<(Vec<Vec<BigRational>>, Vec<Vec<BigRational>>)> {
    require_coupling(cfg)?;
    let n = cfg.n;
    let nu1 = cfg.nu(1) as usize;
    let b = BigRational::from_float(cfg.b).ok_or_else(|| Error::Domain("b is not finite".into()))?;
    let column_scale = |j: usize| -> BigRational {
        let mut scale = BigRational::one();
        for _ in 1..j {
            scale *= &b;
        }
        for l in 2..cfg.m {
            scale *= BigRational::from_integer(gamma_int(j + cfg.nu(l) as usize));
        }
        scale
    };
    let a: Vec<Vec<BigRational>> = (1..=n)
        .map(|i| (1..=n).map(|j| column_scale(j) * BigRational::from_integer(gamma_int(i + j - 1 + nu1))).collect())
        .collect();
    let gamma_nu1_sq = BigRational::from_integer(gamma_int(nu1 + 1).pow(2));
    let c: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let scale = column_scale(j + 1);
            (0..n)
                .map(|k| {
                    let mut sum = BigRational::zero();
                    for p in 0..n {
                        let num = BigRational::from_integer(
                            gamma_int(nu1 + p + 1) * pochhammer(-(p as i64), j) * pochhammer(-(p as i64), k),
                        );
                        let den = BigRational::from_integer(
                            factorial(p)
                                * pochhammer(nu1 as i64 + 1, j)
                                * pochhammer(nu1 as i64 + 1, k)
                                * factorial(j)
                                * factorial(k),
                        );
                        sum += num / den / &gamma_nu1_sq;
                    }
                    sum / &scale
                })
                .collect()
        })
        .collect();
    Ok((a, c))
}

/// `‖A·C − I‖_max` with `A`, `C` and the product formed exactly.
pub fn exact_identity_residual(cfg: &ModelConfig) -> Result<f64> {
    let (a, c) = exact_hankel_system(cfg)?;
    let n = cfg.n;
    let mut worst = BigRational::zero();
    for i in 0..n {
        for k in 0..n {
            let mut entry = BigRational::zero();
            for j in 0..n {
                entry += &a[i][j] * &c[j][k];
            }
            if i == k {
                entry -= BigRational::one();
            }
            let abs = entry.abs();
            if abs > worst {
                worst = abs;
            }
        }
    }
    Ok(worst.to_f64().unwrap_or(f64::INFINITY))
}

/// Exact determinant by Gaussian elimination over the
/// rationals.
#[cfg(test)]
fn exact_determinant(mut m: Vec<Vec<BigRational>>) -> BigRational {
    let n = m.len();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for k in col..n {
                let delta = &factor * &m[col][k];
                m[r][k] -= delta;
            }
        }
    }
    det
}
