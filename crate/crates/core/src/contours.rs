//! Integration contours in the complex plane and panelwise Gauss–Legendre
//! quadrature over them, including the tensor-product rule for double
//! contour integrals with a `1/(u − t)` coupling.
//!
//! Panels can be graded towards a second contour: near the closest approach
//! a panel is no longer than a fixed fraction of its distance to the other
//! contour, so the near-singular factor `1/(u − t)` stays resolved.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, QuadratureResult};
use crate::specfun::LogComplex;
use crate::tolerances::{
    CONTOUR_GAP, MAX_PANEL_LENGTH, NODES_PER_PANEL, PANEL_GRADING_RATIO, SEPARATION_SLACK,
};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Shortest panel produced by grading.
const MIN_PANEL_LENGTH: f64 = 1e-3;

/// Maximum number of node doublings in [`integrate_contour`].
const MAX_REFINEMENTS: usize = 4;

/// Shape of a contour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourKind {
    /// Upward segment `c − iT → c + iT`.
    VerticalLine {
        /// Abscissa.
        c: f64,
        /// Truncation height `T`.
        half_height: f64,
    },
    /// Counterclockwise rectangle `[left, right] × [−h, h]`.
    RectangleLoop {
        /// Left edge.
        left: f64,
        /// Right edge.
        right: f64,
        /// Half-height `h`.
        half_height: f64,
    },
    /// Loop from `right_cut + ih` leftwards to `left + ih`, down to
    /// `left − ih` and back to `right_cut − ih`; it encircles the
    /// non-negative integers below `right_cut` counterclockwise.
    TruncatedInfiniteLoop {
        /// Left edge.
        left: f64,
        /// Truncation abscissa of the two horizontal rays.
        right_cut: f64,
        /// Half-height `h`.
        half_height: f64,
    },
    /// Two rays from `vertex` at angles `∓angle`, traversed from the lower
    /// ray's far end through the vertex and out along the upper ray.
    Wedge {
        /// Real vertex.
        vertex: f64,
        /// Angle of the upper ray measured from the positive real axis.
        angle: f64,
        /// Length of each ray.
        radius: f64,
    },
}

/// A contour with its panel density and per-panel Gauss–Legendre order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    /// Geometry.
    pub kind: ContourKind,
    /// Panels per unit length away from any grading.
    pub panels_per_unit: usize,
    /// Gauss–Legendre nodes per panel.
    pub nodes_per_panel: usize,
}

/// Nodes and complex weights (`dz` included) of a discretized contour.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Discretization {
    /// Quadrature nodes along the contour.
    pub nodes: Vec<Complex64>,
    /// Complex weights, including the direction of travel.
    pub weights: Vec<Complex64>,
    /// Panel endpoints, one pair per panel.
    pub panels: Vec<(Complex64, Complex64)>,
}

/// Grading of one contour relative to another.
#[derive(Debug, Clone, Copy)]
pub struct Grading<'a> {
    /// The contour to grade towards.
    pub other: &'a ContourSpec,
    /// Panel length as a fraction of the distance to `other`.
    pub ratio: f64,
}

fn default_panels_per_unit() -> usize {
    (1.0 / MAX_PANEL_LENGTH).round() as usize
}

impl ContourSpec {
    /// Upward vertical line `Re u = c`, `|Im u| ≤ half_height`.
    pub fn vertical_line(c: f64, half_height: f64) -> Self {
        ContourSpec {
            kind: ContourKind::VerticalLine { c, half_height },
            panels_per_unit: default_panels_per_unit(),
            nodes_per_panel: NODES_PER_PANEL,
        }
    }

    /// Counterclockwise rectangle.
    pub fn rectangle_loop(left: f64, right: f64, half_height: f64) -> Self {
        ContourSpec {
            kind: ContourKind::RectangleLoop { left, right, half_height },
            panels_per_unit: default_panels_per_unit(),
            nodes_per_panel: NODES_PER_PANEL,
        }
    }

    /// Loop around the non-negative integers truncated at `right_cut`.
    pub fn truncated_infinite_loop(left: f64, right_cut: f64, half_height: f64) -> Self {
        ContourSpec {
            kind: ContourKind::TruncatedInfiniteLoop { left, right_cut, half_height },
            panels_per_unit: default_panels_per_unit(),
            nodes_per_panel: NODES_PER_PANEL,
        }
    }

    /// Left-opening wedge through `vertex`.
    pub fn wedge(vertex: f64, angle: f64, radius: f64) -> Self {
        ContourSpec {
            kind: ContourKind::Wedge { vertex, angle, radius },
            panels_per_unit: default_panels_per_unit(),
            nodes_per_panel: NODES_PER_PANEL,
        }
    }

    /// Same contour with a different number of nodes per panel.
    pub fn with_nodes_per_panel(mut self, nodes: usize) -> Self {
        self.nodes_per_panel = nodes;
        self
    }

    /// Same contour with a different panel density.
    pub fn with_panels_per_unit(mut self, panels: usize) -> Self {
        self.panels_per_unit = panels;
        self
    }

    /// Checks the geometric parameters.
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_unit == 0 || self.nodes_per_panel == 0 {
            return Err(Error::Config("contour needs positive panel and node counts".into()));
        }
        let ok = match self.kind {
            ContourKind::VerticalLine { c, half_height } => c.is_finite() && half_height > 0.0,
            ContourKind::RectangleLoop { left, right, half_height }
            | ContourKind::TruncatedInfiniteLoop { left, right_cut: right, half_height } => {
                left < right && half_height > 0.0 && left.is_finite() && right.is_finite()
            }
            ContourKind::Wedge { vertex, angle, radius } => {
                vertex.is_finite() && angle > 0.0 && angle < PI && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid contour geometry {:?}", self.kind)))
        }
    }

    /// Oriented straight segments making up the contour.
    pub fn segments(&self) -> Vec<(Complex64, Complex64)> {
        let c = Complex64::new;
        match self.kind {
            ContourKind::VerticalLine { c: x, half_height: h } => vec![(c(x, -h), c(x, h))],
            ContourKind::RectangleLoop { left, right, half_height: h } => vec![
                (c(right, -h), c(right, h)),
                (c(right, h), c(left, h)),
                (c(left, h), c(left, -h)),
                (c(left, -h), c(right, -h)),
            ],
            ContourKind::TruncatedInfiniteLoop { left, right_cut, half_height: h } => vec![
                (c(right_cut, h), c(left, h)),
                (c(left, h), c(left, -h)),
                (c(left, -h), c(right_cut, -h)),
            ],
            ContourKind::Wedge { vertex, angle, radius } => {
                let v = c(vertex, 0.0);
                vec![
                    (v + Complex64::from_polar(radius, -angle), v),
                    (v, v + Complex64::from_polar(radius, angle)),
                ]
            }
        }
    }

    /// Euclidean distance from `z` to the contour.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.segments()
            .iter()
            .map(|&(a, b)| point_segment_distance(z, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance between this contour and `other`.
    pub fn distance_between(&self, other: &ContourSpec) -> f64 {
        let mut best = f64::INFINITY;
        for &(a, b) in &self.segments() {
            for &(c, d) in &other.segments() {
                best = best.min(segment_distance(a, b, c, d));
            }
        }
        best
    }

    /// Splits the contour into panels and places Gauss–Legendre nodes.
    pub fn discretize(&self, grading: Option<Grading<'_>>) -> Discretization {
        let h_max = 1.0 / self.panels_per_unit as f64;
        let rule = gauss_legendre(self.nodes_per_panel);
        let mut out = Discretization::default();
        for (a, b) in self.segments() {
            let length = (b - a).norm();
            let dir = (b - a) / length;
            let breaks = panel_breaks(length, h_max, |s| {
                grading.map(|g| g.ratio * g.other.distance_to(a + dir * s))
            });
            for w in breaks.windows(2) {
                let (p0, p1) = (a + dir * w[0], a + dir * w[1]);
                let mid = 0.5 * (p0 + p1);
                let half = 0.5 * (p1 - p0);
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    out.nodes.push(mid + half * *x);
                    out.weights.push(half * *wt);
                }
                out.panels.push((p0, p1));
            }
        }
        out
    }
}

/// Panel breakpoints on `[0, length]`: uniform of size at most `h_max`, or
/// graded where `local(s)` returns a smaller admissible length.
fn panel_breaks(length: f64, h_max: f64, local: impl Fn(f64) -> Option<f64>) -> Vec<f64> {
    let admissible = |s: f64| match local(s) {
        Some(h) => h.clamp(MIN_PANEL_LENGTH, h_max),
        None => h_max,
    };
    let mut breaks = vec![0.0];
    let mut s = 0.0;
    while length - s > 1e-14 {
        let mut h = admissible(s);
        h = h.min(admissible((s + h).min(length)));
        let rest = length - s;
        if rest <= 1.5 * h {
            if rest > h {
                breaks.push(s + 0.5 * rest);
            }
            breaks.push(length);
            break;
        }
        s += h;
        breaks.push(s);
    }
    breaks
}

fn point_segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = (((z - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (z - (a + ab * t)).norm()
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Integrates `integrand` along `spec`, doubling the nodes per panel until
/// two successive levels differ by less than `tol`.
pub fn integrate_contour<F>(spec: &ContourSpec, integrand: F, tol: f64) -> Result<QuadratureResult>
where
    F: Fn(Complex64) -> Complex64,
{
    spec.validate()?;
    let mut current = *spec;
    let mut previous: Option<(Complex64, Vec<Complex64>)> = None;
    let mut nodes_used = 0;
    for _ in 0..=MAX_REFINEMENTS {
        let disc = current.discretize(None);
        let p = current.nodes_per_panel;
        let mut panel_sums = Vec::with_capacity(disc.panels.len());
        for chunk in disc.nodes.chunks(p).zip(disc.weights.chunks(p)) {
            let s: Complex64 = chunk.0.iter().zip(chunk.1).map(|(z, w)| integrand(*z) * w).sum();
            panel_sums.push(s);
        }
        nodes_used += disc.nodes.len();
        let total: Complex64 = panel_sums.iter().sum();
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::QuadratureFailure("integrand not finite on the contour".into()));
        }
        if let Some((prev_total, prev_panels)) = previous {
            let err = (total - prev_total).norm();
            if err < tol {
                return Ok(QuadratureResult { value: total, error_estimate: err, nodes_used });
            }
            if current.nodes_per_panel >= spec.nodes_per_panel << MAX_REFINEMENTS {
                let worst = panel_sums
                    .iter()
                    .zip(&prev_panels)
                    .enumerate()
                    .max_by(|x, y| (x.1 .0 - x.1 .1).norm().total_cmp(&(y.1 .0 - y.1 .1).norm()))
                    .map(|(i, _)| disc.panels[i])
                    .unwrap_or_default();
                return Err(Error::QuadratureFailure(format!(
                    "contour refinement stalled at error {err:e}; worst panel {} to {}",
                    worst.0, worst.1
                )));
            }
        }
        previous = Some((total, panel_sums));
        current = current.with_nodes_per_panel(current.nodes_per_panel * 2);
    }
    unreachable!("refinement loop always returns")
}

/// Fails with [`Error::Separation`] when the contours come closer than the
/// minimum gap.
pub fn check_separation(spec_u: &ContourSpec, spec_t: &ContourSpec) -> Result<()> {
    let distance = spec_u.distance_between(spec_t);
    let minimum = CONTOUR_GAP * (1.0 - SEPARATION_SLACK);
    if distance < minimum {
        return Err(Error::Separation { distance, minimum: CONTOUR_GAP });
    }
    Ok(())
}

/// Tensor-product quadrature of `∫_u ∫_t integrand(u, t) dt du` over two
/// separated contours. The error estimate compares the given node count with
/// its double and includes nothing else; the value is returned as computed.
pub fn double_contour<F>(spec_u: &ContourSpec, spec_t: &ContourSpec, integrand: F) -> Result<QuadratureResult>
where
    F: Fn(Complex64, Complex64) -> Complex64,
{
    spec_u.validate()?;
    spec_t.validate()?;
    check_separation(spec_u, spec_t)?;
    let mut values = [Complex64::new(0.0, 0.0); 2];
    let mut nodes_used = 0;
    for (level, value) in values.iter_mut().enumerate() {
        let su = spec_u.with_nodes_per_panel(spec_u.nodes_per_panel << level);
        let st = spec_t.with_nodes_per_panel(spec_t.nodes_per_panel << level);
        let du = su.discretize(Some(Grading { other: &st, ratio: PANEL_GRADING_RATIO }));
        let dt = st.discretize(Some(Grading { other: &su, ratio: PANEL_GRADING_RATIO }));
        let mut sum = Complex64::new(0.0, 0.0);
        for (u, wu) in du.nodes.iter().zip(&du.weights) {
            for (t, wt) in dt.nodes.iter().zip(&dt.weights) {
                sum += integrand(*u, *t) * wu * wt;
            }
        }
        nodes_used += du.nodes.len() * dt.nodes.len();
        *value = sum;
    }
    if !(values[1].re.is_finite() && values[1].im.is_finite()) {
        return Err(Error::QuadratureFailure("double-contour integrand not finite".into()));
    }
    Ok(QuadratureResult { value: values[1], error_estimate: (values[1] - values[0]).norm(), nodes_used })
}

/// Finds where a log-modulus profile has decayed for good: probes
/// `s0, s0 + step, …` and returns the first abscissa after which three
/// consecutive probes lie `drop` below the running peak.
pub(crate) fn decay_cutoff(
    ln_abs: impl Fn(f64) -> f64,
    s0: f64,
    step: f64,
    max: f64,
    drop: f64,
) -> Result<f64> {
    let mut peak = f64::NEG_INFINITY;
    let mut below = 0;
    let mut first_below = s0;
    let mut s = s0;
    while s <= max {
        let v = ln_abs(s);
        if v.is_nan() {
            return Err(Error::QuadratureFailure(format!("integrand modulus undefined at {s}")));
        }
        peak = peak.max(v);
        if v < peak - drop {
            if below == 0 {
                first_below = s;
            }
            below += 1;
            if below == 3 {
                return Ok(first_below);
            }
        } else {
            below = 0;
        }
        s += step;
    }
    Err(Error::QuadratureFailure(format!("integrand does not decay before {max}")))
}

/// One discretization level of a [`SeparablePlan`].
#[derive(Debug, Clone)]
struct PlanLevel {
    t: Discretization,
    u: Discretization,
    /// `1/(u_j − t_i)` stored row-major by `t`, when small enough to keep.
    inverse_gaps: Option<Vec<Complex64>>,
}

/// Largest `N_t·N_u` for which the `1/(u − t)` table is stored.
const MAX_STORED_PAIRS: usize = 4_000_000;

/// Tensor-product rule for integrals of the form
/// `(2πi)^{−2} ∫_u ∫_t F(t) G(u) / (u − t) dt du`
/// evaluated for many `F` (one per `x`) and many `G` (one per `y`).
///
/// Two levels are built, the second with twice the nodes per panel; the
/// difference between them is the error estimate.
#[derive(Debug, Clone)]
pub struct SeparablePlan {
    levels: [PlanLevel; 2],
}

impl SeparablePlan {
    /// Discretizes both contours with mutual grading after checking their
    /// separation.
    pub fn new(spec_u: &ContourSpec, spec_t: &ContourSpec) -> Result<Self> {
        spec_u.validate()?;
        spec_t.validate()?;
        check_separation(spec_u, spec_t)?;
        let build = |level: usize| {
            let su = spec_u.with_nodes_per_panel(spec_u.nodes_per_panel << level);
            let st = spec_t.with_nodes_per_panel(spec_t.nodes_per_panel << level);
            let u = su.discretize(Some(Grading { other: &st, ratio: PANEL_GRADING_RATIO }));
            let t = st.discretize(Some(Grading { other: &su, ratio: PANEL_GRADING_RATIO }));
            let inverse_gaps = (t.nodes.len() * u.nodes.len() <= MAX_STORED_PAIRS).then(|| {
                let mut table = Vec::with_capacity(t.nodes.len() * u.nodes.len());
                for ti in &t.nodes {
                    for uj in &u.nodes {
                        table.push((uj - ti).inv());
                    }
                }
                table
            });
            PlanLevel { t, u, inverse_gaps }
        };
        Ok(SeparablePlan { levels: [build(0), build(1)] })
    }

    /// Number of `t` and `u` nodes on the fine level.
    pub fn node_counts(&self) -> (usize, usize) {
        (self.levels[1].t.nodes.len(), self.levels[1].u.nodes.len())
    }

    /// Evaluates the double integral for every pair `(ix, iy)`.
    ///
    /// `ln_f(ix, t)` and `ln_g(iy, u)` return complex logarithms of the two
    /// factors (negative infinite real part for an exact zero). Each factor
    /// vector is normalized by its peak before the products are formed, and
    /// the peaks are re-applied once at the end.
    pub fn evaluate_grid<FT, GU>(
        &self,
        nx: usize,
        ny: usize,
        ln_f: FT,
        ln_g: GU,
    ) -> Result<Vec<Vec<QuadratureResult>>>
    where
        FT: Fn(usize, Complex64) -> Result<Complex64>,
        GU: Fn(usize, Complex64) -> Result<Complex64>,
    {
        let mut sums = vec![vec![[Complex64::new(0.0, 0.0); 2]; ny]; nx];
        let mut nodes_used = 0;
        for (level_index, level) in self.levels.iter().enumerate() {
            let fs = (0..nx)
                .map(|ix| scaled_factors(&level.t, |t| ln_f(ix, t)))
                .collect::<Result<Vec<_>>>()?;
            let gs = (0..ny)
                .map(|iy| scaled_factors(&level.u, |u| ln_g(iy, u)))
                .collect::<Result<Vec<_>>>()?;
            let nu = level.u.nodes.len();
            for (ix, (f_scale, f)) in fs.iter().enumerate() {
                let mut v = vec![Complex64::new(0.0, 0.0); nu];
                for (i, fi) in f.iter().enumerate() {
                    if *fi == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    match &level.inverse_gaps {
                        Some(table) => {
                            let row = &table[i * nu..(i + 1) * nu];
                            for (vj, g) in v.iter_mut().zip(row) {
                                *vj += fi * g;
                            }
                        }
                        None => {
                            let ti = level.t.nodes[i];
                            for (vj, uj) in v.iter_mut().zip(&level.u.nodes) {
                                *vj += fi / (uj - ti);
                            }
                        }
                    }
                }
                for (iy, (g_scale, g)) in gs.iter().enumerate() {
                    let s: Complex64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
                    // (2πi)^{−2} = −1/(4π²).
                    let scaled = LogComplex::from_complex(-s / (4.0 * PI * PI))
                        * LogComplex::new(f_scale + g_scale, 0.0);
                    sums[ix][iy][level_index] = scaled.exp()?;
                }
            }
            nodes_used += level.t.nodes.len() * level.u.nodes.len();
        }
        Ok(sums
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|[coarse, fine]| QuadratureResult {
                        value: fine,
                        error_estimate: (fine - coarse).norm(),
                        nodes_used,
                    })
                    .collect()
            })
            .collect())
    }
}

/// Evaluates `exp(ln_h(z_k))·w_k` normalized by the largest real part of the
/// logarithm; returns `(scale, values)`.
fn scaled_factors(
    disc: &Discretization,
    ln_h: impl Fn(Complex64) -> Result<Complex64>,
) -> Result<(f64, Vec<Complex64>)> {
    let logs = disc.nodes.iter().map(|&z| ln_h(z)).collect::<Result<Vec<_>>>()?;
    if logs.iter().any(|l| l.re.is_nan() || l.re == f64::INFINITY) {
        return Err(Error::QuadratureFailure("contour factor is not finite".into()));
    }
    let scale = logs.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
    if scale == f64::NEG_INFINITY {
        return Ok((0.0, vec![Complex64::new(0.0, 0.0); logs.len()]));
    }
    let values = logs
        .iter()
        .zip(&disc.weights)
        .map(|(l, w)| if l.re == f64::NEG_INFINITY { Complex64::new(0.0, 0.0) } else { (l - scale).exp() * w })
        .collect();
    Ok((scale, values))
}
