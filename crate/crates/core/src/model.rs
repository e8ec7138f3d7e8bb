//! Exact sampler for the coupled product-matrix model and extraction of the
//! squared singular values of all partial products.
//!
//! `G_1..G_{m−1}` are independent complex Ginibre matrices and the last
//! factor is `G_m = G'_m + b (G_{m−1}···G_1)^*` with `G'_m` an independent
//! Ginibre matrix. Entries have density `π^{−1} e^{−|g|²}`, i.e. real and
//! imaginary parts with variance 1/2.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Parameters `(n, m, ν_1..ν_{m−1}, b)` of the coupled model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Number of points per level.
    pub n: usize,
    /// Number of factors (and levels), at least 2.
    pub m: usize,
    /// `ν_1..ν_{m−1}`; `ν_0 = ν_m = 0` are implicit.
    pub nus: Vec<u32>,
    /// Coupling constant `b ≥ 0`.
    pub b: f64,
}

impl ModelConfig {
    /// Builds and validates a configuration.
    pub fn new(n: usize, m: usize, nus: Vec<u32>, b: f64) -> Result<Self> {
        let cfg = ModelConfig { n, m, nus, b };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks `n ≥ 1`, `m ≥ 2`, `m − 1` values of `ν` and a finite `b ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be positive".into()));
        }
        if self.m < 2 {
            return Err(Error::Config(format!("m = {} must be at least 2", self.m)));
        }
        if self.nus.len() != self.m - 1 {
            return Err(Error::Config(format!(
                "expected {} values of nu for m = {}, got {}",
                self.m - 1,
                self.m,
                self.nus.len()
            )));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::Config(format!("b = {} must be finite and non-negative", self.b)));
        }
        Ok(())
    }

    /// `ν_l` for `0 ≤ l ≤ m`, with `ν_0 = ν_m = 0`.
    pub fn nu(&self, l: usize) -> u32 {
        if l == 0 || l >= self.m {
            0
        } else {
            self.nus[l - 1]
        }
    }

    /// `ν_l` as a float.
    pub fn nu_f(&self, l: usize) -> f64 {
        self.nu(l) as f64
    }

    /// Same configuration with another coupling.
    pub fn with_b(&self, b: f64) -> Self {
        ModelConfig { b, ..self.clone() }
    }

    /// Same configuration with another `n`.
    pub fn with_n(&self, n: usize) -> Self {
        ModelConfig { n, ..self.clone() }
    }

    /// Row count `n + ν_l` of `G_l`.
    pub fn rows(&self, l: usize) -> usize {
        self.n + self.nu(l) as usize
    }
}

/// Squared singular values of every partial product, sorted per level.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfiguration {
    /// `levels[l − 1]` holds the `n` points of level `l`, ascending.
    pub levels: Vec<Vec<f64>>,
}

impl PointConfiguration {
    /// Points of level `l` (1-based).
    pub fn level(&self, l: usize) -> &[f64] {
        &self.levels[l - 1]
    }
}

/// A reproducible random stream: a ChaCha8 generator keyed by `seed` with
/// stream number `stream_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    /// Generator key.
    pub seed: u64,
    /// Independent stream within the key.
    pub stream_id: u64,
}

impl RngStream {
    /// Instantiates the generator positioned at the start of the stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A `rows × cols` Ginibre matrix with density `∝ e^{−Tr G^*G}`.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    // Column-major fill keeps the draw order fixed.
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `G'_m + b·product^*` with `G'_m` an independent Ginibre matrix.
pub(crate) fn coupled_last_factor<R: Rng>(product: &DMatrix<Complex64>, b: f64, rng: &mut R) -> DMatrix<Complex64> {
    let noise = ginibre(product.ncols(), product.nrows(), rng);
    noise + product.adjoint() * Complex64::new(b, 0.0)
}

/// Draws `G_1..G_m` from the coupled model.
pub fn sample_matrices(cfg: &ModelConfig, stream: RngStream) -> Result<Vec<DMatrix<Complex64>>> {
    cfg.validate()?;
    let mut rng = stream.generator();
    let mut mats = Vec::with_capacity(cfg.m);
    for l in 1..cfg.m {
        mats.push(ginibre(cfg.rows(l), cfg.rows(l - 1), &mut rng));
    }
    let product = partial_products(&mats).pop().expect("m ≥ 2 gives at least one factor");
    mats.push(coupled_last_factor(&product, cfg.b, &mut rng));
    Ok(mats)
}

/// `Y_l = G_l···G_1` for every `l`.
fn partial_products(mats: &[DMatrix<Complex64>]) -> Vec<DMatrix<Complex64>> {
    let mut out: Vec<DMatrix<Complex64>> = Vec::with_capacity(mats.len());
    for g in mats {
        let next = match out.last() {
            Some(prev) => g * prev,
            None => g.clone(),
        };
        out.push(next);
    }
    out
}

/// Squared singular values of each partial product, from an SVD of `Y_l`.
pub fn squared_singular_values(cfg: &ModelConfig, matrices: &[DMatrix<Complex64>]) -> Result<PointConfiguration> {
    if matrices.len() != cfg.m {
        return Err(Error::Config(format!("expected {} matrices, got {}", cfg.m, matrices.len())));
    }
    let mut levels = Vec::with_capacity(cfg.m);
    for (l, y) in partial_products(matrices).into_iter().enumerate() {
        if y.ncols() != cfg.n {
            return Err(Error::Config(format!("level {} product has {} columns, expected {}", l + 1, y.ncols(), cfg.n)));
        }
        let mut pts: Vec<f64> = y.singular_values().iter().map(|s| s * s).collect();
        pts.sort_by(f64::total_cmp);
        if pts.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::NumericalRank(format!("level {} has a non-positive squared singular value", l + 1)));
        }
        levels.push(pts);
    }
    Ok(PointConfiguration { levels })
}

/// Draws `count` configurations; sample `i` uses stream `i` of `seed`, so the
/// result does not depend on thread scheduling.
pub fn sample_points(cfg: &ModelConfig, seed: u64, count: usize) -> Result<Vec<PointConfiguration>> {
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mats = sample_matrices(cfg, RngStream { seed, stream_id: i })?;
            squared_singular_values(cfg, &mats)
        })
        .collect()
}

/// Binned density with per-bin standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    /// Bin edges.
    pub edges: Vec<f64>,
    /// Average number of points per unit length in each bin.
    pub density: Vec<f64>,
    /// Standard error of `density`, from the spread of per-sample counts
    /// (zero when only one sample is given).
    pub std_error: Vec<f64>,
}

/// Histogram estimate of the one-point density of level `level`.
pub fn empirical_density(samples: &[PointConfiguration], level: usize, edges: &[f64]) -> Result<DensityEstimate> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::EmptyGrid("need at least two strictly increasing edges".into()));
    }
    if samples.is_empty() {
        return Err(Error::EmptyGrid("no samples".into()));
    }
    let bins = edges.len() - 1;
    let mut sum = vec![0.0; bins];
    let mut sum_sq = vec![0.0; bins];
    let mut counts = vec![0.0; bins];
    for sample in samples {
        if level == 0 || level > sample.levels.len() {
            return Err(Error::Config(format!("level {level} out of range")));
        }
        counts.iter_mut().for_each(|c| *c = 0.0);
        for &y in sample.level(level) {
            if y < edges[0] || y >= edges[bins] {
                continue;
            }
            let k = edges.partition_point(|&e| e <= y) - 1;
            counts[k] += 1.0;
        }
        for k in 0..bins {
            sum[k] += counts[k];
            sum_sq[k] += counts[k] * counts[k];
        }
    }
    let n = samples.len() as f64;
    let mut density = Vec::with_capacity(bins);
    let mut std_error = Vec::with_capacity(bins);
    for k in 0..bins {
        let width = edges[k + 1] - edges[k];
        let mean = sum[k] / n;
        density.push(mean / width);
        let se = if samples.len() > 1 {
            let var = ((sum_sq[k] - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt() / width
        } else {
            0.0
        };
        std_error.push(se);
    }
    Ok(DensityEstimate { edges: edges.to_vec(), density, std_error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, AdaptiveOptions};
    use crate::specfun::bessel_i;

    fn stream(id: u64) -> RngStream {
        RngStream { seed: 20_240_611, stream_id: id }
    }

    #[test]
    fn config_validation() {
        assert!(ModelConfig::new(0, 2, vec![0], 0.1).is_err());
        assert!(ModelConfig::new(2, 1, vec![], 0.1).is_err());
        assert!(ModelConfig::new(2, 3, vec![0], 0.1).is_err());
        assert!(ModelConfig::new(2, 2, vec![0], -0.1).is_err());
        let cfg = ModelConfig::new(3, 3, vec![1, 2], 0.5).unwrap();
        assert_eq!((cfg.nu(0), cfg.nu(1), cfg.nu(2), cfg.nu(3)), (0, 1, 2, 0));
    }

    #[test]
    fn matrix_shapes_follow_the_nu_chain() {
        let cfg = ModelConfig::new(3, 4, vec![1, 2, 4], 0.3).unwrap();
        let mats = sample_matrices(&cfg, stream(0)).unwrap();
        let shapes: Vec<_> = mats.iter().map(|g| g.shape()).collect();
        assert_eq!(shapes, vec![(4, 3), (5, 4), (7, 5), (3, 7)]);
    }

    #[test]
    fn coupling_shifts_only_the_last_factor() {
        let cfg = ModelConfig::new(2, 3, vec![1, 0], 0.7).unwrap();
        let coupled = sample_matrices(&cfg, stream(5)).unwrap();
        let free = sample_matrices(&cfg.with_b(0.0), stream(5)).unwrap();
        assert_eq!(coupled[0], free[0]);
        assert_eq!(coupled[1], free[1]);
        let product = &coupled[1] * &coupled[0];
        let shift = &coupled[2] - &free[2];
        let expected = product.adjoint() * Complex64::new(0.7, 0.0);
        assert!((shift - expected).norm() < 1e-12);
    }

    #[test]
    fn identical_streams_reproduce_identical_points() {
        let cfg = ModelConfig::new(3, 3, vec![1, 0], 0.5).unwrap();
        let a = sample_points(&cfg, 9, 20).unwrap();
        let b = sample_points(&cfg, 9, 20).unwrap();
        assert_eq!(a, b);
        let c = sample_points(&cfg, 10, 20).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn scalar_ginibre_has_unit_second_moment() {
        let cfg = ModelConfig::new(1, 2, vec![0], 0.0).unwrap();
        let samples = sample_points(&cfg, 1, 100_000).unwrap();
        let y1: Vec<f64> = samples.iter().map(|s| s.level(1)[0]).collect();
        let mean = y1.iter().sum::<f64>() / y1.len() as f64;
        let var = y1.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y1.len() - 1) as f64;
        // |g|² is Exp(1): mean 1, variance 1.
        let se = (1.0 / y1.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se);
        assert!((var - 1.0).abs() < 4.0 * (8.0f64 / y1.len() as f64).sqrt());
        // Level 2 at b = 0 is a product of independent Exp(1) variables.
        let mean2 = samples.iter().map(|s| s.level(2)[0]).sum::<f64>() / samples.len() as f64;
        let se2 = (3.0 / samples.len() as f64).sqrt();
        assert!((mean2 - 1.0).abs() < 4.0 * se2);
    }

    #[test]
    fn coupled_factor_has_shifted_mean_and_unit_variance() {
        let mut rng = stream(3).generator();
        let product = ginibre(3, 2, &mut rng);
        let b = 0.8;
        let target = product.adjoint() * Complex64::new(b, 0.0);
        let draws = 100_000;
        let mut mean = DMatrix::<Complex64>::zeros(2, 3);
        let mut second = DMatrix::<f64>::zeros(2, 3);
        for _ in 0..draws {
            let g = coupled_last_factor(&product, b, &mut rng);
            let centered = &g - &target;
            mean += &g;
            second += centered.map(|z| z.norm_sqr());
        }
        mean /= Complex64::new(draws as f64, 0.0);
        second /= draws as f64;
        let se = (1.0 / draws as f64).sqrt();
        for (m, t) in mean.iter().zip(target.iter()) {
            assert!((m - t).norm() < 5.0 * se);
        }
        for v in second.iter() {
            assert!((v - 1.0).abs() < 5.0 * se);
        }
    }

    #[test]
    fn empirical_density_counts() {
        let sample = PointConfiguration { levels: vec![vec![0.5, 1.0, 2.0]] };
        let est = empirical_density(std::slice::from_ref(&sample), 1, &[0.0, 4.0]).unwrap();
        assert_eq!(est.density, vec![3.0 / 4.0]);
        assert_eq!(est.std_error, vec![0.0]);
        assert!(matches!(empirical_density(&[sample.clone()], 1, &[1.0]), Err(Error::EmptyGrid(_))));
        assert!(matches!(empirical_density(&[sample], 1, &[1.0, 1.0]), Err(Error::EmptyGrid(_))));
    }

    /// One-point density of the squared singular values of `G X` for fixed
    /// `X` with squared singular values `x`, where `G = b X^* + Ginibre`.
    ///
    /// The joint law is biorthogonal in `e^{−y/x_k}` and
    /// `y^{(j−1)/2} I_{j−1}(2b√y)` with moments
    /// `x_k^j b^{j−1} e^{b² x_k}`, so the density is
    /// `Σ_{j,k} φ_k(y) [M^{−1}]_{kj} ψ_j(y)`.
    fn one_step_density(x: &[f64], b: f64, y: f64) -> f64 {
        let n = x.len();
        let moments = DMatrix::from_fn(n, n, |j, k| x[k].powi(j as i32 + 1) * b.powi(j as i32) * (b * b * x[k]).exp());
        let inv = moments.try_inverse().expect("distinct x give an invertible moment matrix");
        let mut total = 0.0;
        for k in 0..n {
            let phi = (-y / x[k]).exp();
            for j in 0..n {
                let psi = y.powf(0.5 * j as f64) * bessel_i(Complex64::new(j as f64, 0.0), 2.0 * b * y.sqrt()).unwrap().re;
                total += phi * inv[(k, j)] * psi;
            }
        }
        total
    }

    #[test]
    fn one_step_density_matches_monte_carlo() {
        let x = [0.6f64, 1.9];
        let b = 0.6;
        let (n, l) = (2usize, 3usize);
        // X is l × n with singular values √x_k.
        let mut big_x = DMatrix::<Complex64>::zeros(l, n);
        for k in 0..n {
            big_x[(k, k)] = Complex64::new(x[k].sqrt(), 0.0);
        }
        let draws = 40_000usize;
        let samples: Vec<PointConfiguration> = (0..draws as u64)
            .map(|i| {
                let mut rng = RngStream { seed: 77, stream_id: i }.generator();
                let g = coupled_last_factor(&big_x, b, &mut rng);
                let y = g * &big_x;
                let mut pts: Vec<f64> = y.singular_values().iter().map(|s| s * s).collect();
                pts.sort_by(f64::total_cmp);
                PointConfiguration { levels: vec![pts] }
            })
            .collect();
        let edges: Vec<f64> = (0..=20).map(|k| 0.05 + k as f64 * 0.4).collect();
        let est = empirical_density(&samples, 1, &edges).unwrap();
        let opts = AdaptiveOptions { abs_tol: 1e-12, rel_tol: 1e-10, max_segments: 200 };
        for k in 0..20 {
            let expected = integrate(|y| one_step_density(&x, b, y), edges[k], edges[k + 1], opts).unwrap().value
                / (edges[k + 1] - edges[k]);
            let z = (est.density[k] - expected).abs() / est.std_error[k];
            assert!(z < 3.0, "bin {k}: empirical {} expected {expected} ({z:.2} sigma)", est.density[k]);
        }
        // The density carries n points in total.
        let total = crate::quadrature::integrate_semi_infinite(|y| one_step_density(&x, b, y), 0.0, 2.0, opts)
            .unwrap()
            .value;
        assert!((total - n as f64).abs() < 1e-8);
    }
}
