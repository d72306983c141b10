//! Parametrized submanifolds of a stratified group: tangent p-vectors in the
//! left-invariant frame, pointwise and global degree, adapted frames, the
//! subspaces Π_Σ(x), and local graph representations.
//!
//! A submanifold is a map Φ from a box in parameter space into the group,
//! written in exponential coordinates with each component a closed-form
//! expression. Differentiation is forward-mode through [`crate::expr`], so
//! tangent vectors carry no finite-difference error.

use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{DualValue, EvalError, Expr, ParseError};
use crate::group::GroupLaw;
use crate::multivec::{subspace_from_factors, MultivecError, PVector, Subspace};

/// Relative coefficient cutoff deciding which degrees are present in a
/// tangent p-vector.
pub const DEGREE_TOLERANCE: f64 = 1e-9;

/// Upper edge of the ambiguity band: relative coefficient masses inside
/// [`DEGREE_TOLERANCE`, `DEGREE_WARNING_BAND`] flag the point as
/// near-degenerate, since stratum boundaries sit exactly there.
pub const DEGREE_WARNING_BAND: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum ManifoldError {
    #[error("component {index}: {source}")]
    Parse { index: usize, source: ParseError },
    #[error("component {index} uses unknown variable `{name}`")]
    UnknownVariable { index: usize, name: String },
    #[error("expected {expected} components, got {got}")]
    ComponentCount { got: usize, expected: usize },
    #[error("domain must list one interval per parameter, with lo < hi")]
    DomainShape,
    #[error("parameter point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },
    #[error("tangent vectors are linearly dependent at parameter {point:?}")]
    RankDeficient { point: Vec<f64> },
    #[error("immersion check failed at sampled parameter {point:?}")]
    ImmersionCheck { point: Vec<f64> },
    #[error("degree grid must be nonempty")]
    EmptyGrid,
    #[error("layer ranks give degree {from_ranks} but the tangent p-vector has degree {from_wedge}")]
    DegreeMismatch { from_ranks: u64, from_wedge: u64 },
    #[error("point has degree {point_degree}, below the submanifold degree {submanifold_degree}")]
    NotMaximal {
        point_degree: u64,
        submanifold_degree: u64,
    },
    #[error("projection inversion did not converge at {target:?}")]
    NewtonDivergence { target: Vec<f64> },
    #[error("graph jacobian deviates from the adapted frame by {deviation:.3e}")]
    GraphValidation { deviation: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Multivec(#[from] MultivecError),
}

/// The unit tangent p-vector at a point, its top-degree part, and the
/// pointwise degree.
#[derive(Clone, Debug)]
pub struct TangentData {
    /// Φ(u) in exponential coordinates.
    pub point: Vec<f64>,
    /// Unit tangent p-vector in the left-invariant frame.
    pub tau: PVector,
    /// The degree-d part of `tau`, d the pointwise degree.
    pub tau_d: PVector,
    /// Pointwise degree d(τ).
    pub point_degree: u64,
    /// Norm of the unnormalized tangent wedge: the Riemannian area factor.
    pub area_factor: f64,
    /// Some coefficient mass fell in the ambiguity band.
    pub near_degenerate: bool,
}

/// Global degree over a sample grid, with the maximizing sample.
#[derive(Clone, Debug)]
pub struct DegreeReport {
    pub degree: u64,
    pub maximizer: Vec<f64>,
    pub samples: usize,
    pub near_degenerate: usize,
}

/// A frame adapted to the layers at one point: tangent vectors recombined so
/// that each has a unit top component in a rotated graded basis and nothing
/// in any higher layer.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    base_parameter: Vec<f64>,
    base_point: Vec<f64>,
    alphas: Vec<usize>,
    basis_change: DMatrix<f64>,
    frame_matrix: DMatrix<f64>,
    column_combination: DMatrix<f64>,
    sigma: Vec<usize>,
    grading: crate::algebra::Grading,
}

impl AdaptedFrame {
    /// Parameter point the frame was built at.
    pub fn base_parameter(&self) -> &[f64] {
        &self.base_parameter
    }

    /// Group point Φ(u).
    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    /// Layer ranks (α₁, …, α_ι).
    pub fn alphas(&self) -> &[usize] {
        &self.alphas
    }

    /// Orthogonal layer-block matrix whose columns are the rotated graded
    /// basis in the original coordinates.
    pub fn basis_change(&self) -> &DMatrix<f64> {
        &self.basis_change
    }

    /// Frame coefficients in the rotated basis: column j is the tangent
    /// vector v_j, with identity blocks on the selected rows.
    pub fn frame_matrix(&self) -> &DMatrix<f64> {
        &self.frame_matrix
    }

    /// The p×p matrix W with frame columns = (original tangent columns)·W.
    pub fn column_combination(&self) -> &DMatrix<f64> {
        &self.column_combination
    }

    /// Layer of each frame vector: σ(j) = k iff Σ_{s<k} α_s < j ≤ Σ_{s≤k} α_s.
    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    /// Degree Σ k·α_k carried by the layer ranks.
    pub fn degree(&self) -> u64 {
        self.alphas
            .iter()
            .enumerate()
            .map(|(k, &a)| (k as u64 + 1) * a as u64)
            .sum()
    }

    /// Indices (0-based, in the rotated basis) of the selected directions:
    /// the first α_k slots of each layer.
    pub fn selected_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (k, &alpha) in self.alphas.iter().enumerate() {
            let range = self.grading.layer_range(k + 1);
            out.extend(range.start..range.start + alpha);
        }
        out
    }

    /// The span of the selected directions in original coordinates: the
    /// homogeneous subgroup Π_Σ(x) through the base point. Only defined at
    /// points of maximum degree, so callers pass the submanifold degree.
    pub fn pi_sigma(&self, submanifold_degree: u64) -> Result<Subspace, ManifoldError> {
        if self.degree() != submanifold_degree {
            return Err(ManifoldError::NotMaximal {
                point_degree: self.degree(),
                submanifold_degree,
            });
        }
        let factors: Vec<Vec<f64>> = self
            .selected_indices()
            .iter()
            .map(|&i| self.basis_change.column(i).iter().copied().collect())
            .collect();
        Ok(subspace_from_factors(&self.grading, &factors)?)
    }
}

/// One sample of a local graph: Π-coordinates, the complementary
/// coordinates φ(w), and the parameter that realizes them.
#[derive(Clone, Debug)]
pub struct GraphSample {
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    pub parameter: Vec<f64>,
}

/// A local graph representation over Π_Σ(x), in the rotated basis relative
/// to the base point.
#[derive(Clone, Debug)]
pub struct LocalGraph {
    /// Rotated-basis indices spanning Π_Σ(x).
    pub selected: Vec<usize>,
    /// The complementary rotated-basis indices, carrying φ.
    pub complementary: Vec<usize>,
    /// Grid samples with Newton-inverted parameters.
    pub samples: Vec<GraphSample>,
    /// dφ/dw at w = 0.
    pub jacobian: DMatrix<f64>,
}

/// A parametrized submanifold Φ: U ⊂ ℝ^p → 𝒢 in exponential coordinates.
pub struct Submanifold {
    law: Arc<GroupLaw>,
    parameters: Vec<String>,
    domain: Vec<(f64, f64)>,
    components: Vec<Expr>,
}

impl Submanifold {
    /// Builds a submanifold and runs a sampled immersion check: the
    /// coordinate Jacobian must have full rank p on a coarse grid. The check
    /// samples, it does not prove.
    pub fn new(
        law: Arc<GroupLaw>,
        parameters: &[&str],
        domain: &[(f64, f64)],
        components: Vec<Expr>,
    ) -> Result<Submanifold, ManifoldError> {
        let q = law.dimension();
        if components.len() != q {
            return Err(ManifoldError::ComponentCount {
                got: components.len(),
                expected: q,
            });
        }
        if domain.len() != parameters.len() || domain.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(ManifoldError::DomainShape);
        }
        for (index, component) in components.iter().enumerate() {
            for name in component.variables() {
                if !parameters.iter().any(|p| *p == name) {
                    return Err(ManifoldError::UnknownVariable {
                        index,
                        name: name.to_string(),
                    });
                }
            }
        }
        let m = Submanifold {
            law,
            parameters: parameters.iter().map(|s| s.to_string()).collect(),
            domain: domain.to_vec(),
            components,
        };
        for u in m.grid(&vec![5; m.parameter_count()]) {
            let (_, jac) = m.jacobian(&u)?;
            let svd = jac.svd(false, false);
            let max = svd.singular_values.max();
            let min = svd.singular_values.min();
            if !(min > 1e-8 * max.max(1.0)) {
                return Err(ManifoldError::ImmersionCheck { point: u });
            }
        }
        Ok(m)
    }

    /// Parses the components from text. Parse errors carry the component
    /// index alongside the position.
    pub fn parse(
        law: Arc<GroupLaw>,
        parameters: &[&str],
        domain: &[(f64, f64)],
        components: &[&str],
    ) -> Result<Submanifold, ManifoldError> {
        let exprs = components
            .iter()
            .enumerate()
            .map(|(index, text)| {
                Expr::parse(text).map_err(|source| ManifoldError::Parse { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Submanifold::new(law, parameters, domain, exprs)
    }

    pub fn law(&self) -> &GroupLaw {
        &self.law
    }

    pub fn law_arc(&self) -> Arc<GroupLaw> {
        Arc::clone(&self.law)
    }

    /// Parameter dimension p.
    pub fn parameter_count(&self) -> usize {
        self.parameters.len()
    }

    /// Ambient dimension q.
    pub fn dimension(&self) -> usize {
        self.law.dimension()
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn contains_parameter(&self, u: &[f64]) -> bool {
        u.len() == self.domain.len()
            && u.iter()
                .zip(&self.domain)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }

    fn dual_env(&self, u: &[f64]) -> Vec<(&str, DualValue)> {
        let p = self.parameters.len();
        self.parameters
            .iter()
            .enumerate()
            .map(|(i, name)| (name.as_str(), DualValue::parameter(u[i], i, p)))
            .collect()
    }

    /// Φ(u).
    pub fn point(&self, u: &[f64]) -> Result<Vec<f64>, ManifoldError> {
        let env: Vec<(&str, f64)> = self
            .parameters
            .iter()
            .zip(u)
            .map(|(name, &v)| (name.as_str(), v))
            .collect();
        self.components
            .iter()
            .map(|c| c.eval(&env).map_err(ManifoldError::from))
            .collect()
    }

    /// Φ(u) together with the coordinate Jacobian ∂Φ/∂u (q×p).
    pub fn jacobian(&self, u: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), ManifoldError> {
        let env = self.dual_env(u);
        let q = self.dimension();
        let p = self.parameter_count();
        let mut point = Vec::with_capacity(q);
        let mut jac = DMatrix::zeros(q, p);
        for (i, component) in self.components.iter().enumerate() {
            let out = component.eval_dual(&env)?;
            point.push(out.value);
            for j in 0..p {
                jac[(i, j)] = out.partials[j];
            }
        }
        Ok((point, jac))
    }

    /// Φ(u) and the tangent columns expressed in the left-invariant frame:
    /// the q×p matrix C with ∂Φ/∂u_j = Σ_i C_ij X_i(Φ(u)).
    pub fn frame_coefficients(&self, u: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), ManifoldError> {
        let (point, jac) = self.jacobian(u)?;
        let fields = self.law.left_invariant_fields().evaluate(&point);
        let coeffs = fields
            .lu()
            .solve(&jac)
            .expect("left-invariant frame is unitriangular, hence invertible");
        Ok((point, coeffs))
    }

    /// Unit tangent p-vector, top-degree part, and pointwise degree at u.
    pub fn tangent_pvector(&self, u: &[f64]) -> Result<TangentData, ManifoldError> {
        self.tangent_pvector_with_tolerance(u, DEGREE_TOLERANCE)
    }

    pub fn tangent_pvector_with_tolerance(
        &self,
        u: &[f64],
        tolerance: f64,
    ) -> Result<TangentData, ManifoldError> {
        if !self.contains_parameter(u) {
            return Err(ManifoldError::OutOfDomain { point: u.to_vec() });
        }
        let (point, coeffs) = self.frame_coefficients(u)?;
        let grading = self.law.grading().clone();
        let mut wedge = PVector::from_vector(grading.clone(), &coeffs.column(0).iter().copied().collect::<Vec<_>>());
        for j in 1..self.parameter_count() {
            let col: Vec<f64> = coeffs.column(j).iter().copied().collect();
            wedge = wedge.wedge(&PVector::from_vector(grading.clone(), &col));
        }
        let area_factor = wedge.norm();
        let column_scale = (0..self.parameter_count())
            .map(|j| coeffs.column(j).norm())
            .fold(1.0_f64, f64::max);
        if area_factor <= 1e-12 * column_scale.powi(self.parameter_count() as i32) {
            return Err(ManifoldError::RankDeficient { point: u.to_vec() });
        }
        let tau = wedge.scale(1.0 / area_factor);
        let mut point_degree = 0;
        let mut near_degenerate = false;
        for (&d, &squared) in &tau.degree_mass() {
            let m = squared.sqrt();
            if m >= tolerance {
                point_degree = point_degree.max(d);
            }
            if (DEGREE_TOLERANCE..=DEGREE_WARNING_BAND).contains(&m) {
                near_degenerate = true;
            }
        }
        let tau_d = tau.degree_projection(point_degree);
        Ok(TangentData {
            point,
            tau,
            tau_d,
            point_degree,
            area_factor,
            near_degenerate,
        })
    }

    /// Pointwise degree d_Σ(Φ(u)).
    pub fn pointwise_degree(&self, u: &[f64], tolerance: f64) -> Result<u64, ManifoldError> {
        Ok(self
            .tangent_pvector_with_tolerance(u, tolerance)?
            .point_degree)
    }

    /// An inclusive rectangular grid over the domain, `resolution[i]` points
    /// per axis.
    pub fn grid(&self, resolution: &[usize]) -> Vec<Vec<f64>> {
        assert_eq!(resolution.len(), self.domain.len());
        let axes: Vec<Vec<f64>> = self
            .domain
            .iter()
            .zip(resolution)
            .map(|(&(lo, hi), &n)| match n {
                0 => Vec::new(),
                1 => vec![0.5 * (lo + hi)],
                _ => (0..n)
                    .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                    .collect(),
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for prefix in &out {
                for &v in axis {
                    let mut u = prefix.clone();
                    u.push(v);
                    next.push(u);
                }
            }
            out = next;
        }
        if axes.iter().any(|a| a.is_empty()) {
            return Vec::new();
        }
        out
    }

    /// Degree of the submanifold: max of the pointwise degree over a grid,
    /// with the maximizing sample and the near-degenerate count.
    pub fn degree_on_grid(&self, resolution: &[usize]) -> Result<DegreeReport, ManifoldError> {
        let grid = self.grid(resolution);
        if grid.is_empty() {
            return Err(ManifoldError::EmptyGrid);
        }
        let mut degree = 0;
        let mut maximizer = grid[0].clone();
        let mut near_degenerate = 0;
        let samples = grid.len();
        for u in grid {
            let data = self.tangent_pvector(&u)?;
            if data.near_degenerate {
                near_degenerate += 1;
            }
            if data.point_degree > degree {
                degree = data.point_degree;
                maximizer = u;
            }
        }
        Ok(DegreeReport {
            degree,
            maximizer,
            samples,
            near_degenerate,
        })
    }

    /// True iff d_Σ(Φ(u)) < Q − (q − p), the horizontality bound for
    /// codimension q − p.
    pub fn is_horizontal_point(&self, u: &[f64]) -> Result<bool, ManifoldError> {
        let degree = self.pointwise_degree(u, DEGREE_TOLERANCE)?;
        let bound = self.law.grading().homogeneous_dimension() as u64
            - (self.dimension() - self.parameter_count()) as u64;
        Ok(degree < bound)
    }

    /// Builds the adapted frame at u by top-down elimination: for each layer
    /// from the top, extract the rank of the layer projections with
    /// largest-norm pivoting, rotate the layer so the pivot projections
    /// become the leading basis directions, and eliminate that layer from
    /// the remaining columns. Valid at any point; Π_Σ and the graph
    /// construction additionally require maximum degree.
    pub fn adapted_frame(&self, u: &[f64]) -> Result<AdaptedFrame, ManifoldError> {
        let data = self.tangent_pvector(u)?;
        let (point, coeffs) = self.frame_coefficients(u)?;
        let grading = self.law.grading().clone();
        let q = self.dimension();
        let p = self.parameter_count();
        let steps = grading.step();

        let scale = (0..p).map(|j| coeffs.column(j).norm()).fold(1.0_f64, f64::max);
        let tol = 1e-9 * scale;

        let mut work = coeffs.clone();
        let mut combination = DMatrix::<f64>::identity(p, p);
        let mut remaining: Vec<usize> = (0..p).collect();
        let mut alphas = vec![0usize; steps];
        // (column, layer) in selection order.
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut basis_change = DMatrix::<f64>::zeros(q, q);

        for k in (1..=steps).rev() {
            let rows = grading.layer_range(k);
            let m_k = rows.len();
            // Orthonormal layer directions picked so far, in V_k coordinates.
            let mut directions: Vec<Vec<f64>> = Vec::new();
            loop {
                let best = remaining
                    .iter()
                    .map(|&j| {
                        let norm = rows.clone().map(|r| work[(r, j)].powi(2)).sum::<f64>().sqrt();
                        (j, norm)
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1));
                let Some((pivot, norm)) = best else { break };
                if norm <= tol || directions.len() == m_k {
                    break;
                }
                let direction: Vec<f64> =
                    rows.clone().map(|r| work[(r, pivot)] / norm).collect();
                // Eliminate this layer direction from every other remaining
                // column by subtracting a multiple of the whole pivot column.
                for &j in &remaining {
                    if j == pivot {
                        continue;
                    }
                    let inner: f64 = rows
                        .clone()
                        .zip(&direction)
                        .map(|(r, &d)| work[(r, j)] * d)
                        .sum();
                    let gamma = inner / norm;
                    for r in 0..q {
                        let sub = gamma * work[(r, pivot)];
                        work[(r, j)] -= sub;
                    }
                    for r in 0..p {
                        let sub = gamma * combination[(r, pivot)];
                        combination[(r, j)] -= sub;
                    }
                }
                directions.push(direction);
                alphas[k - 1] += 1;
                pivots.push((pivot, k));
                remaining.retain(|&j| j != pivot);
            }
            // Residual layer components of the unpicked columns are below
            // tolerance; declare them zero so the block structure is exact.
            for &j in &remaining {
                for r in rows.clone() {
                    work[(r, j)] = 0.0;
                }
            }
            // Complete the picked directions to an orthonormal basis of V_k.
            let mut full = directions.clone();
            for axis in 0..m_k {
                let mut candidate = vec![0.0; m_k];
                candidate[axis] = 1.0;
                for d in &full {
                    let inner: f64 = candidate.iter().zip(d).map(|(&a, &b)| a * b).sum();
                    for (c, &b) in candidate.iter_mut().zip(d) {
                        *c -= inner * b;
                    }
                }
                let norm: f64 = candidate.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 1e-8 {
                    for c in &mut candidate {
                        *c /= norm;
                    }
                    full.push(candidate);
                }
                if full.len() == m_k {
                    break;
                }
            }
            assert_eq!(full.len(), m_k, "layer basis completion");
            for (slot, direction) in full.iter().enumerate() {
                for (offset, &v) in direction.iter().enumerate() {
                    basis_change[(rows.start + offset, rows.start + slot)] = v;
                }
            }
        }

        let from_ranks: u64 = alphas
            .iter()
            .enumerate()
            .map(|(k, &a)| (k as u64 + 1) * a as u64)
            .sum();
        if remaining.is_empty() && from_ranks != data.point_degree {
            return Err(ManifoldError::DegreeMismatch {
                from_ranks,
                from_wedge: data.point_degree,
            });
        }
        if !remaining.is_empty() {
            return Err(ManifoldError::RankDeficient { point: u.to_vec() });
        }

        // Sort columns by layer ascending (selection order breaks ties) and
        // scale each so its own layer component is a unit vector.
        pivots.sort_by_key(|&(_, k)| k);
        let mut order: Vec<usize> = Vec::with_capacity(p);
        let mut sigma = Vec::with_capacity(p);
        for &(j, k) in &pivots {
            order.push(j);
            sigma.push(k);
        }
        let mut frame = DMatrix::<f64>::zeros(q, p);
        let mut column_combination = DMatrix::<f64>::zeros(p, p);
        let rotated = basis_change.transpose() * &work;
        for (slot, &j) in order.iter().enumerate() {
            let k = sigma[slot];
            let rows = grading.layer_range(k);
            let norm: f64 = rows.clone().map(|r| rotated[(r, j)].powi(2)).sum::<f64>().sqrt();
            for r in 0..q {
                frame[(r, slot)] = rotated[(r, j)] / norm;
            }
            for r in 0..p {
                column_combination[(r, slot)] = combination[(r, j)] / norm;
            }
        }

        // Cross-group column operations: clear each column's entries on the
        // selected slots of lower layers, so the selected rows of the frame
        // matrix form the identity.
        let slots: Vec<usize> = {
            let mut count = vec![0usize; steps];
            sigma
                .iter()
                .map(|&k| {
                    let slot = grading.layer_range(k).start + count[k - 1];
                    count[k - 1] += 1;
                    slot
                })
                .collect()
        };
        for j in 1..p {
            for i in 0..j {
                let gamma = frame[(slots[i], j)];
                if gamma != 0.0 {
                    for r in 0..q {
                        let sub = gamma * frame[(r, i)];
                        frame[(r, j)] -= sub;
                    }
                    for r in 0..p {
                        let sub = gamma * column_combination[(r, i)];
                        column_combination[(r, j)] -= sub;
                    }
                }
            }
        }

        Ok(AdaptedFrame {
            base_parameter: u.to_vec(),
            base_point: point,
            alphas,
            basis_change,
            frame_matrix: frame,
            column_combination,
            sigma,
            grading,
        })
    }

    /// Rotated-basis coordinates of x₀⁻¹·Φ(u) and their parameter Jacobian.
    fn relative_coords(
        &self,
        frame: &AdaptedFrame,
        u: &[f64],
    ) -> Result<(Vec<f64>, DMatrix<f64>), ManifoldError> {
        let (point, jac) = self.jacobian(u)?;
        let x0_inv = self.law.inverse(&frame.base_point);
        let z = self.law.multiply(&x0_inv, &point);
        let push = self.law.translation_jacobian(&x0_inv, &point);
        let rotated_z: Vec<f64> = {
            let zv = DMatrix::from_column_slice(z.len(), 1, &z);
            let r = frame.basis_change.transpose() * zv;
            r.column(0).iter().copied().collect()
        };
        let rotated_jac = frame.basis_change.transpose() * push * jac;
        Ok((rotated_z, rotated_jac))
    }

    /// Inverts the projection of Σ onto Π_Σ(x) near the base point: for each
    /// grid offset w in the selected coordinates, Newton iteration finds the
    /// parameter whose relative coordinates project to w; the complementary
    /// coordinates are φ(w). The Jacobian dφ/dw at 0 is validated against
    /// the adapted frame.
    pub fn local_graph(
        &self,
        frame: &AdaptedFrame,
        radius: f64,
        per_axis: usize,
    ) -> Result<LocalGraph, ManifoldError> {
        let p = self.parameter_count();
        let q = self.dimension();
        let selected = frame.selected_indices();
        let complementary: Vec<usize> =
            (0..q).filter(|i| !selected.contains(i)).collect();

        // dφ/dw at 0 from the analytic frame: selected rows of the frame
        // matrix are the identity, so the complementary rows are dφ/dw.
        let (_, jac0) = self.relative_coords(frame, &frame.base_parameter)?;
        let m = jac0 * &frame.column_combination;
        let mut jacobian = DMatrix::<f64>::zeros(complementary.len(), p);
        let mut deviation = 0.0_f64;
        for (row, &i) in complementary.iter().enumerate() {
            for col in 0..p {
                jacobian[(row, col)] = m[(i, col)];
                deviation = deviation.max((m[(i, col)] - frame.frame_matrix[(i, col)]).abs());
            }
        }
        for (row, &i) in selected.iter().enumerate() {
            for col in 0..p {
                let expected = if row == col { 1.0 } else { 0.0 };
                deviation = deviation.max((m[(i, col)] - expected).abs());
            }
        }
        if deviation > 1e-6 {
            return Err(ManifoldError::GraphValidation { deviation });
        }

        let axes: Vec<Vec<f64>> = (0..p)
            .map(|_| match per_axis {
                0 => Vec::new(),
                1 => vec![0.0],
                n => (0..n)
                    .map(|i| -radius + 2.0 * radius * i as f64 / (n - 1) as f64)
                    .collect(),
            })
            .collect();
        let mut targets = vec![Vec::new()];
        for axis in &axes {
            let mut next = Vec::new();
            for prefixix in &targets {
                for &v in axis {
                    let mut w = prefixix.clone();
                    w.push(v);
                    next.push(w);
                }
            }
            targets = next;
        }

        let mut samples = Vec::with_capacity(targets.len());
        for w in targets {
            let mut u = frame.base_parameter.to_vec();
            let mut converged = false;
            for _ in 0..50 {
                let (z, jac) = self.relative_coords(frame, &u)?;
                let residual: Vec<f64> =
                    selected.iter().zip(&w).map(|(&i, &t)| t - z[i]).collect();
                let err = residual.iter().map(|r| r * r).sum::<f64>().sqrt();
                if err <= 1e-12 * (1.0 + radius) {
                    converged = true;
                    break;
                }
                let mut system = DMatrix::<f64>::zeros(p, p);
                for (row, &i) in selected.iter().enumerate() {
                    for col in 0..p {
                        system[(row, col)] = jac[(i, col)];
                    }
                }
                let rhs = DMatrix::from_column_slice(p, 1, &residual);
                let step = system
                    .lu()
                    .solve(&rhs)
                    .ok_or(ManifoldError::NewtonDivergence { target: w.clone() })?;
                for i in 0..p {
                    u[i] += step[(i, 0)];
                }
            }
            if !converged {
                return Err(ManifoldError::NewtonDivergence { target: w });
            }
            let (z, _) = self.relative_coords(frame, &u)?;
            let phi: Vec<f64> = complementary.iter().map(|&i| z[i]).collect();
            samples.push(GraphSample {
                w,
                phi,
                parameter: u,
            });
        }

        Ok(LocalGraph {
            selected,
            complementary,
            samples,
            jacobian,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{BracketRule, StratifiedAlgebra};

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

    // The parabola example in second-kind coordinates, pushed through the
    // chart so the group sees exponential coordinates.
    fn degree_four(law: Arc<GroupLaw>) -> Submanifold {
        Submanifold::parse(
            law,
            &["x", "y"],
            &[(-3.0, 3.0), (-3.0, 3.0)],
            &[
                "x",
                "y",
                "y^2/2 - x*y/2",
                "y^2/2 - x*y^2/4 + x^2*y/12",
            ],
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

    #[test]
    fn parabola_tangent_wedge_matches_the_closed_form() {
        let m = degree_four(engel());
        for &(x, y) in &[(1.0, 1.0), (0.5, -1.0), (2.0, 0.25), (-1.5, 2.5)] {
            let data = m.tangent_pvector(&[x, y]).unwrap();
            let c13 = y - x;
            let c14 = y - x * y + x * x / 2.0;
            let norm = (1.0 + c13 * c13 + c14 * c14).sqrt();
            assert!((data.area_factor - norm).abs() <= 1e-12 * norm);
            assert!((data.tau.coefficient(&[0, 1]) - 1.0 / norm).abs() <= 1e-12);
            assert!((data.tau.coefficient(&[0, 2]) - c13 / norm).abs() <= 1e-12);
            assert!((data.tau.coefficient(&[0, 3]) - c14 / norm).abs() <= 1e-12);
        }
    }

    #[test]
    fn parabola_degrees_across_strata() {
        let m = degree_four(engel());
        assert_eq!(m.pointwise_degree(&[1.0, 1.0], DEGREE_TOLERANCE).unwrap(), 4);
        assert_eq!(m.pointwise_degree(&[0.0, 0.0], DEGREE_TOLERANCE).unwrap(), 2);
        assert_eq!(m.pointwise_degree(&[2.0, 2.0], DEGREE_TOLERANCE).unwrap(), 2);
        // On the curve x = y + σ√(y² − 2y) the top coefficient vanishes.
        let y = -1.0_f64;
        let x = y + (y * y - 2.0 * y).sqrt();
        assert_eq!(m.pointwise_degree(&[x, y], DEGREE_TOLERANCE).unwrap(), 3);

        let report = m.degree_on_grid(&[13, 13]).unwrap();
        assert_eq!(report.degree, 4);
        assert_eq!(report.samples, 169);
    }

    #[test]
    fn near_stratum_boundary_is_flagged() {
        let m = degree_four(engel());
        let y = -1.0_f64;
        let x = y + (y * y - 2.0 * y).sqrt() + 1e-8;
        let data = m.tangent_pvector(&[x, y]).unwrap();
        assert!(data.near_degenerate);
    }

    #[test]
    fn exponential_curve_is_degree_three_and_horizontal() {
        let m = degree_three(engel());
        for &(x, y) in &[(0.0, 0.0), (0.5, -0.25), (-0.75, 0.8)] {
            let data = m.tangent_pvector(&[x, y]).unwrap();
            assert_eq!(data.point_degree, 3);
            let ey = y.exp();
            let norm = (ey * ey + ey.powi(4)).sqrt();
            assert!((data.tau.coefficient(&[0, 1]) - ey / norm).abs() <= 1e-12);
            assert!((data.tau.coefficient(&[1, 2]) + ey * ey / norm).abs() <= 1e-12);
            for pair in [[0, 2], [0, 3], [1, 3], [2, 3]] {
                assert!(data.tau.coefficient(&pair).abs() <= 1e-12);
            }
            assert!(m.is_horizontal_point(&[x, y]).unwrap());
        }
    }

    #[test]
    fn vertical_plane_has_degree_five() {
        let m = Submanifold::parse(
            engel(),
            &["u", "v"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &["0", "u + v", "u", "v"],
        )
        .unwrap();
        let data = m.tangent_pvector(&[0.3, -0.4]).unwrap();
        assert_eq!(data.point_degree, 5);
        assert!(!m.is_horizontal_point(&[0.3, -0.4]).unwrap());
    }

    #[test]
    fn immersion_check_rejects_rank_deficient_maps() {
        let err = Submanifold::parse(
            engel(),
            &["u", "v"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &["u", "u", "0", "0"],
        )
        .map(|_| ())
        .unwrap_err();
        assert!(matches!(err, ManifoldError::ImmersionCheck { .. }));
    }

    #[test]
    fn adapted_frame_on_the_exponential_curve() {
        let m = degree_three(engel());
        let frame = m.adapted_frame(&[0.0, 0.0]).unwrap();
        assert_eq!(frame.alphas(), &[1, 1, 0]);
        assert_eq!(frame.degree(), 3);
        assert_eq!(frame.sigma(), &[1, 2]);

        // Identity blocks with zeros in all higher layers.
        let c = frame.frame_matrix();
        let grading = m.law().grading().clone();
        for (j, &k) in frame.sigma().iter().enumerate() {
            for layer in (k + 1)..=grading.step() {
                for r in grading.layer_range(layer) {
                    assert!(c[(r, j)].abs() <= 1e-12);
                }
            }
        }

        let pi = frame.pi_sigma(3).unwrap();
        assert_eq!(pi.dimension(), 2);
        assert!(pi.contains(&[0.0, 1.0, 0.0, 0.0], 1e-9));
        assert!(pi.contains(&[0.0, 0.0, 1.0, 0.0], 1e-9));
        assert!(!pi.contains(&[1.0, 0.0, 0.0, 0.0], 1e-9));
    }

    #[test]
    fn adapted_frame_on_the_parabola() {
        let m = degree_four(engel());
        let frame = m.adapted_frame(&[1.0, 1.0]).unwrap();
        assert_eq!(frame.alphas(), &[1, 0, 1]);
        assert_eq!(frame.degree(), 4);
        assert_eq!(frame.sigma(), &[1, 3]);

        let pi = frame.pi_sigma(4).unwrap();
        assert!(pi.contains(&[1.0, 0.0, 0.0, 0.0], 1e-9));
        assert!(pi.contains(&[0.0, 0.0, 0.0, 1.0], 1e-9));

        // The origin has degree 2 < 4, so Π_Σ is refused there.
        let low = m.adapted_frame(&[0.0, 0.0]).unwrap();
        assert_eq!(low.degree(), 2);
        assert!(matches!(
            low.pi_sigma(4),
            Err(ManifoldError::NotMaximal { .. })
        ));
    }

    #[test]
    fn trivial_plane_frame_and_graph() {
        let m = Submanifold::parse(
            engel(),
            &["s", "t"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &["0", "s", "t", "0"],
        )
        .unwrap();
        let frame = m.adapted_frame(&[0.0, 0.0]).unwrap();
        assert_eq!(frame.alphas(), &[1, 1, 0]);
        let pi = frame.pi_sigma(3).unwrap();
        assert!(pi.contains(&[0.0, 1.0, 0.0, 0.0], 1e-9));
        assert!(pi.contains(&[0.0, 0.0, 1.0, 0.0], 1e-9));

        let graph = m.local_graph(&frame, 0.25, 5).unwrap();
        for sample in &graph.samples {
            for &v in &sample.phi {
                assert!(v.abs() <= 1e-9);
            }
        }
        assert!(graph.jacobian.iter().all(|&v| v.abs() <= 1e-9));
    }

    #[test]
    fn graph_over_pi_sigma_matches_the_frame() {
        let m = degree_three(engel());
        let frame = m.adapted_frame(&[0.0, 0.0]).unwrap();
        let graph = m.local_graph(&frame, 0.1, 5).unwrap();
        let center = graph
            .samples
            .iter()
            .find(|s| s.w.iter().all(|&v| v == 0.0))
            .unwrap();
        for &v in &center.phi {
            assert!(v.abs() <= 1e-10);
        }
        // Each sample's relative coordinates project onto Π exactly at w.
        for sample in &graph.samples {
            assert_eq!(sample.w.len(), 2);
            assert_eq!(sample.phi.len(), 2);
        }
    }

    #[test]
    fn out_of_domain_and_grid_errors() {
        let m = degree_three(engel());
        assert!(matches!(
            m.tangent_pvector(&[5.0, 0.0]),
            Err(ManifoldError::OutOfDomain { .. })
        ));
        assert!(matches!(
            m.degree_on_grid(&[0, 4]),
            Err(ManifoldError::EmptyGrid)
        ));
    }
}

