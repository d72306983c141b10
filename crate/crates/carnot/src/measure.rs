//! The intrinsic measure of a submanifold, the metric factor θ of a
//! homogeneous subspace, and a numerical check of the density limit
//! vol(Σ∩B_{x,r})/r^d → θ(τ^d)/|τ^d|.
//!
//! The intrinsic density at a point is |(∂Φ/∂u₁ ∧ … ∧ ∂Φ/∂u_p)_d|: the
//! graded-metric norm of the degree-d part of the unnormalized tangent
//! wedge in the left-invariant frame. The degree projection is always
//! measured in the graded metric; an auxiliary Riemannian metric enters
//! only through the volume and the unit normalization, and those two
//! contributions cancel, which [`density_with_metric`] verifies.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::group::HomogeneousNorm;
use crate::manifold::{ManifoldError, Submanifold};
use crate::multivec::{PVector, Subspace};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("region must list one interval per parameter, with lo <= hi")]
    RegionShape,
    #[error("region exceeds the submanifold domain")]
    RegionOutsideDomain,
    #[error("subspace has dimension zero")]
    ZeroSubspace,
    #[error("radii must be strictly decreasing and positive")]
    RadiiNotDecreasing,
    #[error("radius {radius} is too large: the ball support leaves the parameter domain")]
    RadiusTooLarge { radius: f64 },
    #[error("ball support still touches the sampling box after {attempts} expansions")]
    TruncatedSupport { attempts: usize },
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

/// How a region integral was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Grid,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Grid => "grid",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// Quadrature choice for [`intrinsic_measure`].
#[derive(Clone, Copy, Debug)]
pub enum Quadrature {
    /// Tensor Gauss-Legendre with this many nodes per axis.
    GaussLegendre { nodes: usize },
    /// Plain Monte Carlo over the region.
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Quadrature {
    fn default() -> Quadrature {
        Quadrature::GaussLegendre { nodes: 64 }
    }
}

/// A region integral with its provenance.
#[derive(Clone, Debug)]
pub struct MeasureResult {
    pub value: f64,
    /// Present exactly when the method is Monte Carlo.
    pub standard_error: Option<f64>,
    pub sample_count: usize,
    pub method: Method,
}

/// Monte Carlo estimate of the metric factor of a subspace.
#[derive(Clone, Debug)]
pub struct MetricFactor {
    pub theta: f64,
    pub standard_error: f64,
    pub sample_count: usize,
}

/// One density-ratio estimate vol(Σ∩B_{x,r})/r^d.
#[derive(Clone, Debug)]
pub struct DensityEstimate {
    pub ratio: f64,
    pub standard_error: f64,
    pub sample_count: usize,
    pub hits: usize,
}

/// Sampling parameters for [`density_ratio`].
#[derive(Clone, Debug)]
pub struct DensityConfig {
    pub samples: usize,
    pub seed: u64,
    /// Safety factor applied to the probed support box.
    pub margin: f64,
}

impl Default for DensityConfig {
    fn default() -> DensityConfig {
        DensityConfig {
            samples: 1_000_000,
            seed: 0,
            margin: 1.3,
        }
    }
}

/// The density-limit check: the target θ(τ^d)/|τ^d| next to the measured
/// ratio sequence. No extrapolation is attempted; the raw sequence is the
/// result.
#[derive(Clone, Debug)]
pub struct DensityLimitReport {
    pub theta: MetricFactor,
    pub tau_d_norm: f64,
    pub target: f64,
    pub entries: Vec<DensityLimitEntry>,
}

#[derive(Clone, Debug)]
pub struct DensityLimitEntry {
    pub radius: f64,
    pub estimate: DensityEstimate,
    pub relative_gap: f64,
}

pub(crate) fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

pub(crate) const CHUNK: usize = 1 << 16;

/// |(∂Φ∧…∧∂Φ)_d| at u, the intrinsic density against the degree-d measure.
/// Vanishes wherever the pointwise degree is below d.
pub fn intrinsic_density(m: &Submanifold, u: &[f64], degree: u64) -> Result<f64, MeasureError> {
    let data = m.tangent_pvector(u)?;
    Ok(data.area_factor * data.tau.degree_projection(degree).norm())
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn validate_region(m: &Submanifold, region: &[(f64, f64)]) -> Result<(), MeasureError> {
    if region.len() != m.parameter_count() || region.iter().any(|&(lo, hi)| !(lo <= hi)) {
        return Err(MeasureError::RegionShape);
    }
    let slack = 1e-12;
    for (&(lo, hi), &(dlo, dhi)) in region.iter().zip(m.domain()) {
        if lo < dlo - slack || hi > dhi + slack {
            return Err(MeasureError::RegionOutsideDomain);
        }
    }
    Ok(())
}

/// Integral of the intrinsic density over a sub-box of the domain: the
/// intrinsic measure μ of that piece of Σ.
pub fn intrinsic_measure(
    m: &Submanifold,
    region: &[(f64, f64)],
    degree: u64,
    quadrature: &Quadrature,
) -> Result<MeasureResult, MeasureError> {
    validate_region(m, region)?;
    let volume: f64 = region.iter().map(|&(lo, hi)| hi - lo).product();
    if volume == 0.0 {
        return Ok(MeasureResult {
            value: 0.0,
            standard_error: None,
            sample_count: 0,
            method: Method::Grid,
        });
    }
    let p = m.parameter_count();
    match *quadrature {
        Quadrature::GaussLegendre { nodes } => {
            let (xs, ws) = gauss_legendre(nodes);
            // Tensor product over the axes.
            let mut value = 0.0;
            let mut index = vec![0usize; p];
            loop {
                let mut u = Vec::with_capacity(p);
                let mut weight = 1.0;
                for (axis, &(lo, hi)) in region.iter().enumerate() {
                    let i = index[axis];
                    u.push(0.5 * (hi - lo) * xs[i] + 0.5 * (hi + lo));
                    weight *= 0.5 * (hi - lo) * ws[i];
                }
                value += weight * intrinsic_density(m, &u, degree)?;
                let mut axis = p;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    index[axis] += 1;
                    if index[axis] < nodes {
                        break;
                    }
                    index[axis] = 0;
                }
                if index.iter().all(|&i| i == 0) {
                    break;
                }
            }
            Ok(MeasureResult {
                value,
                standard_error: None,
                sample_count: nodes.pow(p as u32),
                method: Method::Grid,
            })
        }
        Quadrature::MonteCarlo { samples, seed } => {
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut done = 0usize;
            let mut chunk = 0u64;
            while done < samples {
                let mut rng = chunk_rng(seed, chunk);
                chunk += 1;
                let count = CHUNK.min(samples - done);
                for _ in 0..count {
                    let u: Vec<f64> = region
                        .iter()
                        .map(|&(lo, hi)| rng.gen_range(lo..hi))
                        .collect();
                    let f = intrinsic_density(m, &u, degree)?;
                    sum += f;
                    sum_sq += f * f;
                }
                done += count;
            }
            let n = samples as f64;
            let mean = sum / n;
            let variance = (sum_sq / n - mean * mean).max(0.0);
            Ok(MeasureResult {
                value: volume * mean,
                standard_error: Some(volume * (variance / n).sqrt()),
                sample_count: samples,
                method: Method::MonteCarlo,
            })
        }
    }
}

/// Mixed-metric evaluation of the intrinsic density: unit-normalizes the
/// tangent wedge and measures the Riemannian volume with the auxiliary
/// metric whose Gram matrix on the frame is `gram`, while the degree
/// projection stays in the graded metric. Agrees with
/// [`intrinsic_density`] for every positive-definite `gram`.
pub fn density_with_metric(
    m: &Submanifold,
    u: &[f64],
    degree: u64,
    gram: &DMatrix<f64>,
) -> Result<f64, MeasureError> {
    let data = m.tangent_pvector(u)?;
    let (_, coeffs) = m.frame_coefficients(u)?;
    let volume_factor = (coeffs.transpose() * gram * &coeffs)
        .determinant()
        .max(0.0)
        .sqrt();
    let wedge_norm_gram = pvector_gram_norm(&data.tau, gram) * data.area_factor;
    let wedge_d_norm = data.tau.degree_projection(degree).norm() * data.area_factor;
    Ok(wedge_d_norm / wedge_norm_gram * volume_factor)
}

/// Norm of a p-vector under the inner product induced on Λ^p by a Gram
/// matrix on the underlying space: ⟨e_I, e_J⟩ = det gram[I, J].
fn pvector_gram_norm(v: &PVector, gram: &DMatrix<f64>) -> f64 {
    let mut total = 0.0_f64;
    for (idx_a, ca) in v.components() {
        for (idx_b, cb) in v.components() {
            let p = idx_a.len();
            let minor = DMatrix::from_fn(p, p, |r, c| gram[(idx_a[r], idx_b[c])]);
            total += ca * cb * minor.determinant();
        }
    }
    total.max(0.0).sqrt()
}

/// Monte Carlo estimate of θ(span): the p-dimensional Lebesgue measure of
/// {v ∈ span : N(v) < 1}, computed in the subspace's own orthonormal
/// coordinates. The sampling cube has half-width √(Σ_k ε_k²), which
/// contains every point obeying the per-layer bounds |v^{(k)}| < ε_k.
pub fn metric_factor(
    span: &Subspace,
    norm: &HomogeneousNorm,
    samples: usize,
    seed: u64,
) -> Result<MetricFactor, MeasureError> {
    let p = span.dimension();
    if p == 0 {
        return Err(MeasureError::ZeroSubspace);
    }
    let q = span.grading().dimension();
    let radius: f64 = norm
        .epsilons()
        .iter()
        .map(|e| e * e)
        .sum::<f64>()
        .sqrt();
    let volume = (2.0 * radius).powi(p as i32);
    let basis = span.basis();

    let mut hits = 0usize;
    let mut done = 0usize;
    let mut chunk = 0u64;
    let mut v = vec![0.0; q];
    while done < samples {
        let mut rng = chunk_rng(seed, chunk);
        chunk += 1;
        let count = CHUNK.min(samples - done);
        for _ in 0..count {
            v.iter_mut().for_each(|x| *x = 0.0);
            for b in basis {
                let s = rng.gen_range(-radius..radius);
                for (vi, &bi) in v.iter_mut().zip(b) {
                    *vi += s * bi;
                }
            }
            if norm.norm(&v) < 1.0 {
                hits += 1;
            }
        }
        done += count;
    }
    let n = samples as f64;
    let rate = hits as f64 / n;
    Ok(MetricFactor {
        theta: volume * rate,
        standard_error: volume * (rate * (1.0 - rate) / n).sqrt(),
        sample_count: samples,
    })
}

/// The anisotropic sampling box for the ball indicator: per frame column j,
/// a parameter half-width along the column's parameter direction, found by
/// doubling until the probed point leaves the ball comfortably.
pub(crate) struct SupportBox {
    /// p×p matrix: column j is the parameter step for s_j = 1.
    pub(crate) map: DMatrix<f64>,
    pub(crate) volume: f64,
}

pub(crate) fn probe_support_box(
    m: &Submanifold,
    frame: &crate::manifold::AdaptedFrame,
    norm: &HomogeneousNorm,
    radius: f64,
    margin: f64,
    grow: f64,
) -> Result<SupportBox, MeasureError> {
    let p = m.parameter_count();
    let u0 = frame.base_parameter();
    let x0 = frame.base_point().to_vec();
    let w = frame.column_combination();
    let law = m.law();

    let mut half_widths = Vec::with_capacity(p);
    for j in 0..p {
        let sigma = frame.sigma()[j] as i32;
        let mut extent = 0.0_f64;
        for sign in [-1.0, 1.0] {
            let mut h = 0.25 * radius.powi(sigma);
            let mut steps = 0;
            loop {
                let u: Vec<f64> = (0..p)
                    .map(|i| u0[i] + sign * h * w[(i, j)])
                    .collect();
                if !m.contains_parameter(&u) {
                    return Err(MeasureError::RadiusTooLarge { radius });
                }
                let z = law.difference(&x0, &m.point(&u)?);
                if norm.norm(&z) > 1.25 * radius {
                    break;
                }
                h *= 2.0;
                steps += 1;
                if steps > 80 {
                    return Err(MeasureError::RadiusTooLarge { radius });
                }
            }
            extent = extent.max(h);
        }
        half_widths.push(extent * margin * grow);
    }

    let mut map = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        for i in 0..p {
            map[(i, j)] = half_widths[j] * w[(i, j)];
        }
    }
    // Corners of the box must stay inside the parameter domain, otherwise
    // the indicator support may be truncated.
    let corners = 1usize << p;
    for mask in 0..corners {
        let mut u = u0.to_vec();
        for j in 0..p {
            let s = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
            for i in 0..p {
                u[i] += s * map[(i, j)];
            }
        }
        if !m.contains_parameter(&u) {
            return Err(MeasureError::RadiusTooLarge { radius });
        }
    }
    let volume = map.determinant().abs() * 2.0_f64.powi(p as i32);
    Ok(SupportBox { map, volume })
}

/// Monte Carlo estimate of vol(Σ ∩ B_{Φ(u),r})/r^d, with d the degree
/// carried by the adapted frame at u. Samples a box aligned with the
/// adapted frame's parameter directions, each scaled by r^{σ(j)}; if any
/// ball hit lands in the outer shell of the box, the box is enlarged and
/// the estimate rerun.
pub fn density_ratio(
    m: &Submanifold,
    u: &[f64],
    radius: f64,
    norm: &HomogeneousNorm,
    config: &DensityConfig,
) -> Result<DensityEstimate, MeasureError> {
    let frame = m.adapted_frame(u)?;
    let degree = frame.degree();
    let p = m.parameter_count();
    let x0 = frame.base_point().to_vec();
    let law = m.law();

    let mut grow = 1.0;
    for attempt in 0..4 {
        let support = probe_support_box(m, &frame, norm, radius, config.margin, grow)?;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut hits = 0usize;
        let mut shell_hit = false;
        let mut done = 0usize;
        let mut chunk = 0u64;
        while done < config.samples {
            let mut rng = chunk_rng(config.seed, chunk);
            chunk += 1;
            let count = CHUNK.min(config.samples - done);
            for _ in 0..count {
                let s: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let mut uu = u.to_vec();
                for j in 0..p {
                    for i in 0..p {
                        uu[i] += support.map[(i, j)] * s[j];
                    }
                }
                let data = m.tangent_pvector(&uu)?;
                let z = law.difference(&x0, &data.point);
                let f = if norm.norm(&z) < radius {
                    hits += 1;
                    if s.iter().any(|&v| v.abs() > 0.9) {
                        shell_hit = true;
                    }
                    data.area_factor
                } else {
                    0.0
                };
                sum += f;
                sum_sq += f * f;
            }
            done += count;
        }
        if shell_hit {
            grow *= 1.5;
            if attempt == 3 {
                return Err(MeasureError::TruncatedSupport { attempts: attempt + 1 });
            }
            continue;
        }
        let n = config.samples as f64;
        let mean = sum / n;
        let variance = (sum_sq / n - mean * mean).max(0.0);
        let scale = support.volume / radius.powi(degree as i32);
        return Ok(DensityEstimate {
            ratio: scale * mean,
            standard_error: scale * (variance / n).sqrt(),
            sample_count: config.samples,
            hits,
        });
    }
    unreachable!("loop either returns or errors on the final attempt");
}

/// Runs [`density_ratio`] over a decreasing radius schedule and reports
/// each estimate against the target θ(τ^d)/|τ^d| from the metric factor of
/// Π_Σ at u. The sequence is reported raw: the limit theorem gives no rate
/// to extrapolate with.
pub fn verify_density_limit(
    m: &Submanifold,
    u: &[f64],
    radii: &[f64],
    norm: &HomogeneousNorm,
    config: &DensityConfig,
) -> Result<DensityLimitReport, MeasureError> {
    if radii.is_empty()
        || radii.iter().any(|&r| !(r > 0.0))
        || radii.windows(2).any(|w| w[0] <= w[1])
    {
        return Err(MeasureError::RadiiNotDecreasing);
    }
    let frame = m.adapted_frame(u)?;
    let span = frame.pi_sigma(frame.degree())?;
    let theta = metric_factor(&span, norm, config.samples, config.seed)?;
    let data = m.tangent_pvector(u)?;
    let tau_d_norm = data.tau_d.norm();
    let target = theta.theta / tau_d_norm;
    let mut entries = Vec::with_capacity(radii.len());
    for &radius in radii {
        let estimate = density_ratio(m, u, radius, norm, config)?;
        let relative_gap = (estimate.ratio - target).abs() / target;
        entries.push(DensityLimitEntry {
            radius,
            estimate,
            relative_gap,
        });
    }
    Ok(DensityLimitReport {
        theta,
        tau_d_norm,
        target,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{BracketRule, StratifiedAlgebra};
    use crate::group::GroupLaw;
    use crate::multivec::subspace_from_factors;
    use std::sync::Arc;

    fn engel() -> Arc<GroupLaw> {
        let algebra = StratifiedAlgebra::new(
            &[2, 1, 1],
            &[
                BracketRule::single(0, 1, 2, 1),
                BracketRule::single(0, 2, 3, 1),
            ],
        )
        .unwrap();
        Arc::new(GroupLaw::new(algebra))
    }

    fn trivial_plane(law: Arc<GroupLaw>) -> Submanifold {
        Submanifold::parse(
            law,
            &["s", "t"],
            &[(-2.0, 2.0), (-2.0, 2.0)],
            &["0", "s", "t", "0"],
        )
        .unwrap()
    }

    fn degree_three(law: Arc<GroupLaw>) -> Submanifold {
        Submanifold::parse(
            law,
            &["x", "y"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &["x", "x + exp(y)", "x*exp(y)/2", "x^2*exp(y)/12"],
        )
        .unwrap()
    }

    fn degree_four(law: Arc<GroupLaw>) -> Submanifold {
        Submanifold::parse(
            law,
            &["x", "y"],
            &[(-3.0, 3.0), (-3.0, 3.0)],
            &["x", "y", "y^2/2 - x*y/2", "y^2/2 - x*y^2/4 + x^2*y/12"],
        )
        .unwrap()
    }

    #[test]
    fn trivial_plane_has_unit_density_and_measure() {
        let m = trivial_plane(engel());
        assert!((intrinsic_density(&m, &[0.3, -0.7], 3).unwrap() - 1.0).abs() < 1e-14);
        let gl = intrinsic_measure(
            &m,
            &[(0.0, 1.0), (0.0, 1.0)],
            3,
            &Quadrature::GaussLegendre { nodes: 8 },
        )
        .unwrap();
        assert!((gl.value - 1.0).abs() < 1e-12);
        assert_eq!(gl.method, Method::Grid);
        assert!(gl.standard_error.is_none());

        let mc = intrinsic_measure(
            &m,
            &[(0.0, 1.0), (0.0, 1.0)],
            3,
            &Quadrature::MonteCarlo {
                samples: 10_000,
                seed: 7,
            },
        )
        .unwrap();
        assert!((mc.value - 1.0).abs() < 1e-12);
        assert_eq!(mc.method, Method::MonteCarlo);

        let point = intrinsic_measure(
            &m,
            &[(0.5, 0.5), (0.0, 1.0)],
            3,
            &Quadrature::default(),
        )
        .unwrap();
        assert_eq!(point.value, 0.0);
    }

    #[test]
    fn exponential_curve_density_is_exp_two_y() {
        let m = degree_three(engel());
        for &(x, y) in &[(0.0, 0.0), (0.5, -0.3), (-0.8, 0.9), (0.2, 0.7)] {
            let d = intrinsic_density(&m, &[x, y], 3).unwrap();
            let expected = (2.0 * y).exp();
            assert!((d - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn parabola_density_vanishes_off_the_top_stratum() {
        let m = degree_four(engel());
        // On the Σ₃ curves the degree-4 coefficient is zero.
        let y = -1.0_f64;
        let x = y + (y * y - 2.0 * y).sqrt();
        assert!(intrinsic_density(&m, &[x, y], 4).unwrap() <= 1e-12);
        // Points of degree 2 contribute nothing to the degree-4 measure.
        assert!(intrinsic_density(&m, &[0.0, 0.0], 4).unwrap() <= 1e-12);
        // A generic point does contribute.
        assert!(intrinsic_density(&m, &[1.0, 1.0], 4).unwrap() > 0.4);
    }

    #[test]
    fn one_dimensional_arc_has_positive_finite_measure() {
        let m = Submanifold::parse(
            engel(),
            &["t"],
            &[(-1.0, 1.0)],
            &["0", "t", "t^2/2", "0"],
        )
        .unwrap();
        let arc = intrinsic_measure(&m, &[(0.0, 1.0)], 2, &Quadrature::default()).unwrap();
        assert!((arc.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn measure_ignores_the_auxiliary_metric() {
        let engel = engel();
        let m3 = degree_three(Arc::clone(&engel));
        let m4 = degree_four(engel);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (m, degree) in [(&m3, 3u64), (&m4, 4u64)] {
            let q = m.dimension();
            for _ in 0..5 {
                let a = DMatrix::from_fn(q, q, |_, _| rng.gen_range(-0.3..0.3));
                let gram = DMatrix::identity(q, q) + &a * a.transpose();
                for point in [[0.4, 0.6], [-0.3, 0.2], [0.9, -0.5]] {
                    let plain = intrinsic_density(m, &point, degree).unwrap();
                    let mixed = density_with_metric(m, &point, degree, &gram).unwrap();
                    assert!(
                        (plain - mixed).abs() <= 1e-8 * plain.max(1.0),
                        "gram-metric evaluation drifted: {plain} vs {mixed}"
                    );
                }
            }
        }
    }

    #[test]
    fn measure_is_reparametrization_invariant() {
        let law = engel();
        let m = degree_three(Arc::clone(&law));
        // x = t1/2 + 1/10, y = 2 t2 - 3/10.
        let sub = [
            (
                "x",
                crate::expr::Expr::parse("t1/2 + 1/10").unwrap(),
            ),
            ("y", crate::expr::Expr::parse("2*t2 - 3/10").unwrap()),
        ];
        let reparam: Vec<crate::expr::Expr> =
            m.components().iter().map(|c| c.substitute(&sub)).collect();
        let mr = Submanifold::new(
            law,
            &["t1", "t2"],
            &[(-0.5, 0.5), (-0.3, 0.3)],
            reparam,
        )
        .unwrap();
        let region = [(0.1, 0.3), (-0.3, 0.1)];
        let region_t = [(0.0, 0.4), (0.0, 0.2)];
        let a = intrinsic_measure(&m, &region, 3, &Quadrature::default()).unwrap();
        let b = intrinsic_measure(&mr, &region_t, 3, &Quadrature::default()).unwrap();
        assert!((a.value - b.value).abs() <= 1e-10 * a.value);
    }

    #[test]
    fn metric_factor_of_the_full_plane_is_pi() {
        let abelian = StratifiedAlgebra::new(&[2], &[]).unwrap();
        let law = GroupLaw::new(abelian);
        let norm = HomogeneousNorm::with_epsilons(law.grading().clone(), vec![1.0]);
        let span = subspace_from_factors(
            law.grading(),
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let f = metric_factor(&span, &norm, 200_000, 3).unwrap();
        assert!(
            (f.theta - std::f64::consts::PI).abs() <= 3.0 * f.standard_error,
            "theta = {} +- {}",
            f.theta,
            f.standard_error
        );
    }

    #[test]
    fn metric_factor_of_the_engel_plane_is_a_rectangle() {
        let law = engel();
        let norm =
            HomogeneousNorm::with_epsilons(law.grading().clone(), vec![1.0, 0.4, 0.2]);
        let span = subspace_from_factors(
            law.grading(),
            &[
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        let f = metric_factor(&span, &norm, 200_000, 5).unwrap();
        let exact = 4.0 * 1.0 * 0.4;
        assert!(
            (f.theta - exact).abs() <= 3.0 * f.standard_error,
            "theta = {} +- {}, exact {}",
            f.theta,
            f.standard_error,
            exact
        );
        assert!(f.standard_error > 0.0);
    }

    #[test]
    fn trivial_plane_ratio_matches_the_rectangle_factor() {
        let law = engel();
        let norm =
            HomogeneousNorm::with_epsilons(law.grading().clone(), vec![1.0, 0.5, 0.3]);
        let m = trivial_plane(law);
        let config = DensityConfig {
            samples: 100_000,
            seed: 1,
            margin: 1.3,
        };
        // The plane is a subgroup: vol(Σ∩B_r) = (2ε₁r)(2ε₂r²) exactly, so
        // the ratio is 4ε₁ε₂ at every radius.
        let exact = 4.0 * 1.0 * 0.5;
        for radius in [0.4, 0.2] {
            let est = density_ratio(&m, &[0.1, -0.2], radius, &norm, &config).unwrap();
            assert!(
                (est.ratio - exact).abs() <= 4.0 * est.standard_error,
                "r = {radius}: ratio = {} +- {}",
                est.ratio,
                est.standard_error
            );
        }
    }

    #[test]
    fn exponential_curve_ratio_approaches_the_target() {
        let law = engel();
        let norm =
            HomogeneousNorm::with_epsilons(law.grading().clone(), vec![1.0, 0.5, 0.3]);
        let m = degree_three(law);
        let config = DensityConfig {
            samples: 150_000,
            seed: 2,
            margin: 1.3,
        };
        let report =
            verify_density_limit(&m, &[0.0, 0.0], &[0.2, 0.1, 0.05], &norm, &config).unwrap();
        // θ = 4ε₁ε₂ for span{X₂, X₃}; |τ³| = 1/√2 at the origin.
        let expected_target = 4.0 * 0.5 * 2.0_f64.sqrt();
        assert!((report.target - expected_target).abs() <= 0.05 * expected_target);
        assert_eq!(report.entries.len(), 3);
        let last = report.entries.last().unwrap();
        assert!(
            last.relative_gap < 0.25,
            "gap at r = {}: {}",
            last.radius,
            last.relative_gap
        );
    }

    #[test]
    fn oversized_radius_is_refused() {
        let law = engel();
        let norm =
            HomogeneousNorm::with_epsilons(law.grading().clone(), vec![1.0, 0.5, 0.3]);
        let m = trivial_plane(law);
        let config = DensityConfig {
            samples: 1_000,
            seed: 0,
            margin: 1.3,
        };
        let err = density_ratio(&m, &[1.8, 1.8], 1.0, &norm, &config)
            .map(|_| ())
            .unwrap_err();
        assert!(matches!(err, MeasureError::RadiusTooLarge { .. }));
    }

    #[test]
    fn region_validation() {
        let m = trivial_plane(engel());
        assert!(matches!(
            intrinsic_measure(&m, &[(0.0, 1.0)], 3, &Quadrature::default()),
            Err(MeasureError::RegionShape)
        ));
        assert!(matches!(
            intrinsic_measure(
                &m,
                &[(0.0, 5.0), (0.0, 1.0)],
                3,
                &Quadrature::default()
            ),
            Err(MeasureError::RegionOutsideDomain)
        ));
    }
}
