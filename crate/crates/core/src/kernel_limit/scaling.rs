//! Numerical verification of the hard-edge scaling limits in the three
//! coupling regimes.
//!
//! Every level below `m` is rescaled as `x ↦ x/n`. Level `m` is rescaled the
//! same way in the weak and interpolating regimes, and as `x ↦ b²x²/n²` in
//! the strong regime, where it collapses onto level `m − 1`. The finite-`n`
//! kernel is multiplied by the square roots of the Jacobians of both
//! arguments and conjugated by the gauge `h_m(x) = e^{2b²x/n}/√(2π)` on the
//! strongly coupled level, which reproduces the prefactors
//!
//! * `(√2 b √y / n^{3/2}) · e^{2b²y/n}/√(2π)` for `r < m = s`,
//! * `(√2 b √x / n^{3/2}) · √(2π) e^{−2b²x/n}` for `r = m > s`,
//! * `(2b² √(xy) / n²) · e^{2b²(y−x)/n}` for `r = s = m`.
//!
//! The convergence check is trend-based: the sup-distance to the limit must
//! strictly decrease along the sequence of `n`.

use super::{kernel_ginibre_infinite_grid, kernel_interpolating_grid};
use crate::error::{Error, Result};
use crate::kernel_finite::kernel_contour_grid;
use crate::model::ModelConfig;
use crate::quadrature::{integrate, AdaptiveOptions};
use std::f64::consts::{LN_2, PI};

/// Pairs `(m−1, x; m, y)` closer than this are skipped in the strong regime:
/// the rescaled kernel contains a Gaussian of width `√(x n)/b` that tends to
/// `δ(x − y)` there, which has no pointwise limit.
pub const DELTA_EXCLUSION: f64 = 0.5;

/// Relative tolerance when checking that `b` follows the regime's law.
const COUPLING_LAW_TOL: f64 = 1e-12;

/// Half-width of the integration window of [`delta_mass_check`], in units
/// of the standard deviation of the Gaussian factor.
const DELTA_WINDOW_SIGMAS: f64 = 12.0;

/// How the coupling grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitRegime {
    /// `b = n^{1/4}`, so `b/√n → 0`.
    Weak,
    /// `b = α√n`.
    Interpolating {
        /// Limit of `b/√n`.
        alpha: f64,
    },
    /// `b = n`, so `b/√n → ∞`.
    Strong,
}

impl LimitRegime {
    /// Checks `α` in the interpolating case.
    pub fn validate(&self) -> Result<()> {
        match *self {
            LimitRegime::Interpolating { alpha } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(Error::Domain(format!("α = {alpha} must be finite and positive")))
            }
            _ => Ok(()),
        }
    }

    /// `b(n)` of this regime.
    pub fn coupling(&self, n: usize) -> f64 {
        let nf = n as f64;
        match *self {
            LimitRegime::Weak => nf.powf(0.25),
            LimitRegime::Interpolating { alpha } => alpha * nf.sqrt(),
            LimitRegime::Strong => nf,
        }
    }

    /// Configurations `(n, m, ν, b(n))` for each `n`, sharing `m` and `ν`
    /// with `base`.
    pub fn sequence(&self, base: &ModelConfig, ns: &[usize]) -> Result<Vec<ModelConfig>> {
        self.validate()?;
        ns.iter()
            .map(|&n| ModelConfig::new(n, base.m, base.nus.clone(), self.coupling(n)))
            .collect()
    }

    /// Short lowercase label.
    pub fn label(&self) -> &'static str {
        match self {
            LimitRegime::Weak => "weak",
            LimitRegime::Interpolating { .. } => "interpolating",
            LimitRegime::Strong => "strong",
        }
    }
}

/// Which limiting relation a pair of levels follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitBlock {
    /// Both arguments rescaled by `1/n`.
    Uniform,
    /// Strong regime, `r < m = s`.
    IntoLast,
    /// Strong regime, `r = m > s`.
    OutOfLast,
    /// Strong regime, `r = s = m`.
    LastLast,
}

/// Outcome of [`verify_scaling_limit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    /// Regime of the sequence.
    pub regime: LimitRegime,
    /// Limiting relation used.
    pub block: LimitBlock,
    /// Row level.
    pub r: usize,
    /// Column level.
    pub s: usize,
    /// Limit-variable pairs `(x, y)` that entered the sup-norm.
    pub points: Vec<(f64, f64)>,
    /// Sizes along the sequence.
    pub ns: Vec<usize>,
    /// Sup-distance to the limit at each `n`.
    pub distances: Vec<f64>,
    /// Largest quadrature error estimate (finite side plus limit side),
    /// after rescaling, at each `n`.
    pub error_estimates: Vec<f64>,
}

impl ScalingReport {
    /// Whether the distances strictly decrease along the sequence.
    pub fn strictly_decreasing(&self) -> bool {
        self.distances.windows(2).all(|w| w[1] < w[0])
    }

    /// Distance at the largest `n`.
    pub fn final_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(f64::NAN)
    }
}

fn block_of(regime: LimitRegime, r: usize, s: usize, m: usize) -> LimitBlock {
    if regime != LimitRegime::Strong {
        return LimitBlock::Uniform;
    }
    match (r == m, s == m) {
        (false, false) => LimitBlock::Uniform,
        (false, true) => LimitBlock::IntoLast,
        (true, false) => LimitBlock::OutOfLast,
        (true, true) => LimitBlock::LastLast,
    }
}

/// Point of the finite-`n` process and log of the square root of the
/// Jacobian for a limit variable `x` on level `l`.
fn finite_point(cfg: &ModelConfig, regime: LimitRegime, l: usize, x: f64) -> (f64, f64) {
    let nf = cfg.n as f64;
    if regime == LimitRegime::Strong && l == cfg.m {
        let b = cfg.b;
        (b * b * x * x / (nf * nf), 0.5 * (LN_2 + 2.0 * b.ln() + x.ln() - 2.0 * nf.ln()))
    } else {
        (x / nf, -0.5 * nf.ln())
    }
}

/// `ln h_l(x)` of the gauge.
fn ln_gauge(cfg: &ModelConfig, regime: LimitRegime, l: usize, x: f64) -> f64 {
    if regime == LimitRegime::Strong && l == cfg.m {
        2.0 * cfg.b * cfg.b / cfg.n as f64 * x - 0.5 * (2.0 * PI).ln()
    } else {
        0.0
    }
}

fn check_sequence(regime: LimitRegime, cfgs: &[ModelConfig]) -> Result<()> {
    regime.validate()?;
    let first = cfgs.first().ok_or_else(|| Error::Config("empty configuration sequence".into()))?;
    for w in cfgs.windows(2) {
        if w[1].n <= w[0].n {
            return Err(Error::Config("n must strictly increase along the sequence".into()));
        }
    }
    for cfg in cfgs {
        cfg.validate()?;
        if cfg.m != first.m || cfg.nus != first.nus {
            return Err(Error::Config("all configurations must share m and ν".into()));
        }
        let expected = regime.coupling(cfg.n);
        if (cfg.b - expected).abs() > COUPLING_LAW_TOL * expected {
            return Err(Error::Config(format!(
                "b = {} at n = {} does not follow the {} law b(n) = {expected}",
                cfg.b,
                cfg.n,
                regime.label()
            )));
        }
    }
    Ok(())
}

/// Limit kernel on the grid for the given regime.
fn limit_values(
    regime: LimitRegime,
    cfg: &ModelConfig,
    r: usize,
    s: usize,
    xs: &[f64],
    ys: &[f64],
) -> Result<Vec<Vec<(f64, f64)>>> {
    let m = cfg.m;
    let to_points = |l: usize, v: &[f64]| v.iter().map(|&x| (l, x)).collect::<Vec<_>>();
    let grid = match regime {
        LimitRegime::Weak => {
            let mut nus = cfg.nus.clone();
            nus.push(0);
            kernel_ginibre_infinite_grid(&nus, &to_points(r, xs), &to_points(s, ys))?
        }
        LimitRegime::Interpolating { alpha } => {
            kernel_interpolating_grid(alpha, &cfg.nus, &to_points(r, xs), &to_points(s, ys))?
        }
        LimitRegime::Strong => kernel_ginibre_infinite_grid(
            &cfg.nus,
            &to_points(r.min(m - 1), xs),
            &to_points(s.min(m - 1), ys),
        )?,
    };
    Ok(grid.into_iter().map(|row| row.into_iter().map(|e| (e.value, e.error_estimate)).collect()).collect())
}

/// Sup-distance between the rescaled finite-`n` kernel and its limit on
/// `grid × grid`, for each configuration of `cfgs`.
///
/// `cfgs` must share `m` and `ν`, have strictly increasing `n`, and follow
/// the coupling law of `regime`. The limiting kernel is
/// `K^{Gin}_{∞,m}` (weak), `K^{int}_{∞,m}(α)` (interpolating), or
/// `K^{Gin}_{∞,m−1}` with level `m` read as level `m−1` (strong). In the
/// strong regime pairs `(m−1, x; m, y)` with `|x − y| < DELTA_EXCLUSION`
/// are left out.
pub fn verify_scaling_limit(
    regime: LimitRegime,
    r: usize,
    s: usize,
    grid: &[f64],
    cfgs: &[ModelConfig],
) -> Result<ScalingReport> {
    check_sequence(regime, cfgs)?;
    if grid.is_empty() || grid.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::EmptyGrid("scaling grid needs positive finite points".into()));
    }
    let m = cfgs[0].m;
    crate::kernel_finite::check_level(r, m)?;
    crate::kernel_finite::check_level(s, m)?;
    let block = block_of(regime, r, s, m);
    let skip = |x: f64, y: f64| block == LimitBlock::IntoLast && r == m - 1 && (x - y).abs() < DELTA_EXCLUSION;
    let limit = limit_values(regime, &cfgs[0], r, s, grid, grid)?;
    let mut report = ScalingReport {
        regime,
        block,
        r,
        s,
        points: Vec::new(),
        ns: Vec::new(),
        distances: Vec::new(),
        error_estimates: Vec::new(),
    };
    for &x in grid {
        for &y in grid {
            if !skip(x, y) {
                report.points.push((x, y));
            }
        }
    }
    if report.points.is_empty() {
        return Err(Error::EmptyGrid("every grid pair falls inside the δ exclusion zone".into()));
    }
    for cfg in cfgs {
        let rows: Vec<_> = grid.iter().map(|&x| (r, finite_point(cfg, regime, r, x))).collect();
        let cols: Vec<_> = grid.iter().map(|&y| (s, finite_point(cfg, regime, s, y))).collect();
        let finite = kernel_contour_grid(
            cfg,
            &rows.iter().map(|&(l, (p, _))| (l, p)).collect::<Vec<_>>(),
            &cols.iter().map(|&(l, (p, _))| (l, p)).collect::<Vec<_>>(),
        )?;
        let mut dist: f64 = 0.0;
        let mut err: f64 = 0.0;
        for (i, &x) in grid.iter().enumerate() {
            for (j, &y) in grid.iter().enumerate() {
                if skip(x, y) {
                    continue;
                }
                let ln_factor = rows[i].1 .1 + cols[j].1 .1 + ln_gauge(cfg, regime, s, y) - ln_gauge(cfg, regime, r, x);
                let factor = ln_factor.exp();
                let value = finite[i][j].value * factor;
                if !value.is_finite() {
                    return Err(Error::Overflow(format!("rescaled kernel at n = {}, ({x}, {y})", cfg.n)));
                }
                dist = dist.max((value - limit[i][j].0).abs());
                err = err.max(finite[i][j].error_estimate * factor + limit[i][j].1);
            }
        }
        report.ns.push(cfg.n);
        report.distances.push(dist);
        report.error_estimates.push(err);
    }
    Ok(report)
}

/// Mass of the rescaled Gaussian transition term near `x0`, for one `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaMass {
    /// Size of the configuration.
    pub n: usize,
    /// `Λ = b²/n`.
    pub lambda: f64,
    /// `∫ g(y) dy` with `g` the rescaled `φ_{m−1,m}(x0, ·)`.
    pub mass: f64,
    /// `∫ (y − x0)² g(y) dy / mass`.
    pub second_moment: f64,
}

/// Integrates, over `y` near `x0`, the strong-regime rescaling of the
/// finite-`n` transition term,
///
/// `g(y) = (√2 b √y / n^{3/2}) φ_{m−1,m}(x0/n, b²y²/n²) e^{2b²y/n}/√(2π)`,
///
/// with `φ_{m−1,m}(X, Y) = e^{−Y/X − b²X}/X`. This term tends to `δ(x0 − y)`,
/// so the mass tends to one as `b²/n → ∞`. The exponent is assembled in log
/// space because each of its three pieces is of size `b²x0/n`.
pub fn delta_mass_check(cfgs: &[ModelConfig], x0: f64) -> Result<Vec<DeltaMass>> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(Error::Domain(format!("x0 = {x0} must be positive")));
    }
    cfgs.iter()
        .map(|cfg| {
            cfg.validate()?;
            if cfg.b <= 0.0 {
                return Err(Error::Domain("the transition term needs b > 0".into()));
            }
            let nf = cfg.n as f64;
            let b2 = cfg.b * cfg.b;
            let lambda = b2 / nf;
            let big_x = x0 / nf;
            let g = |y: f64| -> f64 {
                if y <= 0.0 {
                    return 0.0;
                }
                let big_y = b2 * y * y / (nf * nf);
                let ln_prefactor = 0.5 * LN_2 + cfg.b.ln() + 0.5 * y.ln() - 1.5 * nf.ln();
                let ln_phi = -big_y / big_x - b2 * big_x - big_x.ln();
                let ln_gauge = 2.0 * lambda * y - 0.5 * (2.0 * PI).ln();
                (ln_prefactor + ln_phi + ln_gauge).exp()
            };
            let sigma = (x0 / (2.0 * lambda)).sqrt();
            let lo = (x0 - DELTA_WINDOW_SIGMAS * sigma).max(0.0);
            let hi = x0 + DELTA_WINDOW_SIGMAS * sigma;
            let opts = AdaptiveOptions { abs_tol: 0.0, rel_tol: 1e-12, max_segments: 2000 };
            let mass = integrate(g, lo, hi, opts)?.value;
            let moment = integrate(|y| (y - x0).powi(2) * g(y), lo, hi, opts)?.value;
            Ok(DeltaMass { n: cfg.n, lambda, mass, second_moment: moment / mass })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(m: usize, nus: Vec<u32>) -> ModelConfig {
        ModelConfig::new(1, m, nus, 1.0).unwrap()
    }

    #[test]
    fn regime_laws() {
        assert!((LimitRegime::Weak.coupling(16) - 2.0).abs() < 1e-15);
        assert!((LimitRegime::Interpolating { alpha: 0.5 }.coupling(16) - 2.0).abs() < 1e-15);
        assert_eq!(LimitRegime::Strong.coupling(7), 7.0);
        assert!(LimitRegime::Interpolating { alpha: -1.0 }.validate().is_err());
    }

    #[test]
    fn sequences_must_follow_the_law() {
        let good = LimitRegime::Weak.sequence(&base(2, vec![1]), &[4, 8]).unwrap();
        assert!(check_sequence(LimitRegime::Weak, &good).is_ok());
        assert!(check_sequence(LimitRegime::Strong, &good).is_err());
        let reversed: Vec<_> = good.iter().rev().cloned().collect();
        assert!(check_sequence(LimitRegime::Weak, &reversed).is_err());
        assert!(check_sequence(LimitRegime::Weak, &[]).is_err());
    }

    #[test]
    fn delta_mass_tends_to_one_and_concentrates() {
        // b²/n = n for b = n.
        let cfgs = LimitRegime::Strong.sequence(&base(2, vec![0]), &[10, 100, 10_000]).unwrap();
        let masses = delta_mass_check(&cfgs, 1.0).unwrap();
        for w in masses.windows(2) {
            assert!((w[1].mass - 1.0).abs() < (w[0].mass - 1.0).abs());
            assert!(w[1].second_moment < w[0].second_moment);
        }
        assert!((masses[2].mass - 1.0).abs() < 1e-4);
    }

    #[test]
    fn delta_mass_matches_a_direct_quadrature_at_unit_lambda() {
        // Λ = b²/n = 1 with n = 4, b = 2, x0 = 1.5. Oracle: the simplified
        // form √(Λ/π)·√y/x0·e^{−Λ(y−x0)²/x0}, written in v = √y and
        // integrated by a composite Simpson rule over v ∈ [0, 8].
        let cfg = ModelConfig::new(4, 2, vec![0], 2.0).unwrap();
        let x0 = 1.5;
        let got = delta_mass_check(&[cfg], x0).unwrap()[0];
        let f = |v: f64| 2.0 * v * v * (1.0 / PI).sqrt() / x0 * (-(v * v - x0).powi(2) / x0).exp();
        let steps = 20_000;
        let h = 8.0 / steps as f64;
        let mut sum = f(0.0) + f(8.0);
        for k in 1..steps {
            sum += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = sum * h / 3.0;
        assert!((got.mass - oracle).abs() < 1e-8, "{} vs {oracle}", got.mass);
    }

    #[test]
    fn strong_regime_contact_term_enters_with_a_minus_sign() {
        // Near x = y the rescaled (m−1, m) block exceeds its smooth limit by
        // −√(Λ/π)·√y/x·e^{−Λ(y−x)²/x}, i.e. it tends to K − δ(x − y).
        use crate::kernel_finite::{kernel_contour, KernelRequest};
        use crate::kernel_limit::kernel_ginibre_infinite;
        let n = 80usize;
        let cfg = LimitRegime::Strong.sequence(&base(2, vec![1]), &[n]).unwrap().remove(0);
        let (nf, b) = (n as f64, cfg.b);
        let lambda = b * b / nf;
        for (x, y) in [(1.0f64, 1.0f64), (1.0, 1.05)] {
            let k = kernel_contour(KernelRequest { r: 1, x: x / nf, s: 2, y: b * b * y * y / (nf * nf) }, &cfg)
                .unwrap()
                .value;
            let (fx, jx) = finite_point(&cfg, LimitRegime::Strong, 1, x);
            let (_, jy) = finite_point(&cfg, LimitRegime::Strong, 2, y);
            assert_eq!(fx, x / nf);
            let rescaled = k * (jx + jy + ln_gauge(&cfg, LimitRegime::Strong, 2, y)).exp();
            let smooth = kernel_ginibre_infinite(KernelRequest { r: 1, x, s: 1, y }, &[1]).unwrap().value;
            let gaussian = (lambda / PI).sqrt() * y.sqrt() / x * (-lambda * (y - x).powi(2) / x).exp();
            let excess = rescaled - smooth;
            assert!((excess + gaussian).abs() < 1e-2 * gaussian, "excess {excess} vs −{gaussian}");
        }
    }

    #[test]
    fn interpolating_kernel_collapses_for_large_alpha() {
        // 2α²√(xy) K^{int}(m, α²x²; m, α²y²; α) e^{2α²(y−x)} → K^{Gin}_{∞,m−1}(m−1,x; m−1,y).
        use crate::kernel_limit::kernel_interpolating_grid;
        let grid = [0.6, 1.2];
        let limit = kernel_ginibre_infinite_grid(&[1], &[(1, 0.6), (1, 1.2)], &[(1, 0.6), (1, 1.2)]).unwrap();
        let mut previous = f64::INFINITY;
        for alpha in [2.0f64, 4.0, 8.0] {
            let a2 = alpha * alpha;
            let pts: Vec<_> = grid.iter().map(|&x| (2, a2 * x * x)).collect();
            let k = kernel_interpolating_grid(alpha, &[1], &pts, &pts).unwrap();
            let mut dist: f64 = 0.0;
            for (i, &x) in grid.iter().enumerate() {
                for (j, &y) in grid.iter().enumerate() {
                    let v = k[i][j].value * 2.0 * a2 * (x * y).sqrt() * (2.0 * a2 * (y - x)).exp();
                    dist = dist.max((v - limit[i][j].value).abs());
                }
            }
            assert!(dist < previous, "α={alpha}: {dist} ≥ {previous}");
            previous = dist;
        }
        assert!(previous < 2e-2, "{previous}");
    }
}
