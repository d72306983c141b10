//! The group layer: exact Baker-Campbell-Hausdorff group laws in graded
//! coordinates, dilations, left-invariant polynomial vector fields, a
//! calibrated homogeneous norm, and the structural checks that make all of
//! it trustworthy.
//!
//! Points live in exponential coordinates of the first kind: the point with
//! coordinates x is exp(Σ x_j X_j). In these coordinates the group law is a
//! polynomial map P(x, y), inversion is plain negation, and the dilation
//! δ_r scales coordinate j by r^d(j).

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{AlgebraError, Grading, StratifiedAlgebra};
use crate::poly::{CompiledPoly, Polynomial, Rational};

/// A failed precondition or calibration in this module.
#[derive(Debug, Error)]
pub enum GroupError {
    #[error("index set is not a subalgebra: [X{}, X{}] leaves the span", .i + 1, .j + 1)]
    NotSubalgebra { i: usize, j: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("norm calibration found no feasible epsilon for layer {layer}")]
    CalibrationFailed { layer: usize },
}

/// The polynomial group law of a stratified group, together with its
/// left-invariant frame.
///
/// `P` is the list of q polynomials in 2q variables (x₁..x_q, y₁..y_q) with
/// x·y = P(x, y); the remainders Q_i = P_i − x_i − y_i collect the bracket
/// corrections. Everything is exact; compiled floating-point copies back the
/// numeric entry points.
#[derive(Clone, Debug)]
pub struct GroupLaw {
    algebra: StratifiedAlgebra,
    p: Vec<Polynomial>,
    q_rem: Vec<Polynomial>,
    compiled_p: Vec<CompiledPoly>,
    compiled_dy: Vec<Vec<CompiledPoly>>,
    fields: FieldMatrix,
}

impl GroupLaw {
    /// Derives the group law of `algebra` by summing the BCH series, which
    /// terminates at commutator length ι by nilpotency.
    pub fn new(algebra: StratifiedAlgebra) -> GroupLaw {
        let q = algebra.dimension();
        let p = bch_polynomials(&algebra);
        let weights = algebra.grading().weights();
        let xy_weights = double_weights(&weights);

        let mut q_rem = Vec::with_capacity(q);
        for (i, pi) in p.iter().enumerate() {
            let xi = Polynomial::variable(&xy_weights, i);
            let yi = Polynomial::variable(&xy_weights, q + i);
            q_rem.push(&(pi - &xi) - &yi);
        }

        let compiled_p: Vec<CompiledPoly> = p.iter().map(Polynomial::compile).collect();
        let compiled_dy: Vec<Vec<CompiledPoly>> = p
            .iter()
            .map(|pi| {
                (0..q)
                    .map(|j| pi.partial_derivative(q + j).compile())
                    .collect()
            })
            .collect();

        let fields = FieldMatrix::from_law(&p, &weights);

        GroupLaw {
            algebra,
            p,
            q_rem,
            compiled_p,
            compiled_dy,
            fields,
        }
    }

    /// The underlying algebra.
    pub fn algebra(&self) -> &StratifiedAlgebra {
        &self.algebra
    }

    /// The layer structure, shared with the algebra.
    pub fn grading(&self) -> &Grading {
        self.algebra.grading()
    }

    /// Dimension q of the group.
    pub fn dimension(&self) -> usize {
        self.algebra.dimension()
    }

    /// The i-th law polynomial P_i(x, y), in 2q variables.
    pub fn law_polynomial(&self, i: usize) -> &Polynomial {
        &self.p[i]
    }

    /// All law polynomials.
    pub fn law_polynomials(&self) -> &[Polynomial] {
        &self.p
    }

    /// The i-th remainder Q_i = P_i − x_i − y_i.
    pub fn remainder(&self, i: usize) -> &Polynomial {
        &self.q_rem[i]
    }

    /// The product x·y in floating point.
    pub fn multiply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let q = self.dimension();
        assert_eq!(x.len(), q);
        assert_eq!(y.len(), q);
        let mut xy = Vec::with_capacity(2 * q);
        xy.extend_from_slice(x);
        xy.extend_from_slice(y);
        self.compiled_p.iter().map(|p| p.evaluate(&xy)).collect()
    }

    /// The product x·y in exact rational arithmetic.
    pub fn multiply_rational(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let q = self.dimension();
        assert_eq!(x.len(), q);
        assert_eq!(y.len(), q);
        let mut xy = Vec::with_capacity(2 * q);
        xy.extend_from_slice(x);
        xy.extend_from_slice(y);
        self.p.iter().map(|p| p.evaluate_rational(&xy)).collect()
    }

    /// The group inverse, which in these coordinates is negation.
    pub fn inverse(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| -v).collect()
    }

    /// x⁻¹·y, the displacement entering left-invariant distances.
    pub fn difference(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.multiply(&self.inverse(x), y)
    }

    /// The dilation δ_r. Panics when r is not positive.
    pub fn dilate(&self, r: f64, x: &[f64]) -> Vec<f64> {
        self.grading().dilate(r, x)
    }

    /// The left-invariant frame as a matrix of polynomials in x: column j
    /// holds the coefficients of X_j over the coordinate frame.
    pub fn left_invariant_fields(&self) -> &FieldMatrix {
        &self.fields
    }

    /// The differential of the left translation y ↦ z·y at the point x.
    pub fn translation_jacobian(&self, z: &[f64], x: &[f64]) -> DMatrix<f64> {
        let q = self.dimension();
        assert_eq!(z.len(), q);
        assert_eq!(x.len(), q);
        let mut zx = Vec::with_capacity(2 * q);
        zx.extend_from_slice(z);
        zx.extend_from_slice(x);
        DMatrix::from_fn(q, q, |i, j| self.compiled_dy[i][j].evaluate(&zx))
    }

    /// Whether P(P(x,y),z) = P(x,P(y,z)) holds as an exact polynomial
    /// identity.
    pub fn associativity_holds(&self) -> bool {
        let q = self.dimension();
        let weights = self.algebra.grading().weights();
        let mut xyz_weights = Vec::with_capacity(3 * q);
        for _ in 0..3 {
            xyz_weights.extend_from_slice(&weights);
        }
        let var = |j: usize| Polynomial::variable(&xyz_weights, j);

        let x_map: Vec<usize> = (0..2 * q).collect();
        let y_map: Vec<usize> = (q..3 * q).collect();
        let p_xy: Vec<Polynomial> = self
            .p
            .iter()
            .map(|pi| pi.embed(&xyz_weights, &x_map))
            .collect();
        let p_yz: Vec<Polynomial> = self
            .p
            .iter()
            .map(|pi| pi.embed(&xyz_weights, &y_map))
            .collect();

        let mut left_args = p_xy;
        left_args.extend((2 * q..3 * q).map(var));
        let mut right_args: Vec<Polynomial> = (0..q).map(var).collect();
        right_args.extend(p_yz);

        self.p.iter().all(|pi| {
            pi.substitute(&left_args) == pi.substitute(&right_args)
        })
    }

    /// Whether x·x⁻¹ = 0 holds as an exact polynomial identity.
    pub fn inverse_identity_holds(&self) -> bool {
        let q = self.dimension();
        let weights = self.algebra.grading().weights();
        let vars: Vec<Polynomial> = (0..q).map(|j| Polynomial::variable(&weights, j)).collect();
        let mut args = vars.clone();
        args.extend(vars.iter().map(|v| -v));
        self.p.iter().all(|pi| pi.substitute(&args).is_zero())
    }

    /// Whether every P_i is weighted-homogeneous of degree d(i) under the
    /// joint dilation of x and y.
    pub fn homogeneity_holds(&self) -> bool {
        let g = self.algebra.grading();
        self.p
            .iter()
            .enumerate()
            .all(|(i, pi)| pi.is_weighted_homogeneous(g.layer_of(i) as u64))
    }

    /// Whether the remainders have the structure forced by stratification:
    /// Q_i vanishes on both axes, vanishes identically on the first layer,
    /// and only mentions variables of layers strictly below d(i).
    pub fn remainder_structure_holds(&self) -> bool {
        let q = self.dimension();
        let g = self.algebra.grading();
        let x_vars: Vec<usize> = (0..q).collect();
        let y_vars: Vec<usize> = (q..2 * q).collect();
        self.q_rem.iter().enumerate().all(|(i, qi)| {
            let layer = g.layer_of(i);
            if layer == 1 && !qi.is_zero() {
                return false;
            }
            if !qi.set_zero(&y_vars).is_zero() || !qi.set_zero(&x_vars).is_zero() {
                return false;
            }
            qi.terms().all(|(m, _)| {
                (0..2 * q).all(|v| m.exponent(v) == 0 || g.layer_of(v % q) < layer)
            })
        })
    }

    /// Checks membership of every remainder Q_i, i ∉ J, in the ideal
    /// generated by the variables outside J, which is what makes
    /// exp(span{X_j : j ∈ J}) a subgroup.
    ///
    /// Returns an error when the span of {X_j : j ∈ J} is not a subalgebra.
    pub fn ideal_membership_check(&self, j_set: &[usize]) -> Result<IdealMembershipReport, GroupError> {
        let q = self.dimension();
        assert!(j_set.iter().all(|&j| j < q), "index set out of range");
        let mut seen = vec![false; q];
        for &j in j_set {
            assert!(!seen[j], "index set has a repeated entry");
            seen[j] = true;
        }

        let spanning: Vec<Vec<Rational>> = j_set
            .iter()
            .map(|&j| {
                let mut e = vec![Rational::zero(); q];
                e[j] = Rational::one();
                e
            })
            .collect();
        let closure = self.algebra.subalgebra_closure_check(&spanning)?;
        if !closure.closed {
            let witness = closure.witness.expect("open span carries a witness");
            return Err(GroupError::NotSubalgebra {
                i: j_set[witness.pair.0],
                j: j_set[witness.pair.1],
            });
        }

        let outside: Vec<usize> = (0..q)
            .filter(|j| !j_set.contains(j))
            .flat_map(|j| [j, q + j])
            .collect();
        for i in 0..q {
            if j_set.contains(&i) {
                continue;
            }
            if !self.q_rem[i].set_zero(&outside).is_zero() {
                return Ok(IdealMembershipReport {
                    holds: false,
                    failing_coordinate: Some(i),
                });
            }
        }
        Ok(IdealMembershipReport {
            holds: true,
            failing_coordinate: None,
        })
    }

    /// The same group seen in coordinates of the second kind, where a point
    /// is the ordered product exp(x_q X_q) ⋯ exp(x₁ X₁).
    pub fn second_kind_chart(&self) -> SecondKindChart {
        let q = self.dimension();
        let weights = self.algebra.grading().weights();
        let xy_weights = double_weights(&weights);

        // T: second-kind coordinates -> exponential coordinates, built by
        // folding the product of the single-coordinate exponentials.
        let mut point: Vec<Polynomial> =
            (0..q).map(|_| Polynomial::zero(&weights)).collect();
        for j in (0..q).rev() {
            let mut args = Vec::with_capacity(2 * q);
            args.extend(point.iter().cloned());
            for i in 0..q {
                if i == j {
                    args.push(Polynomial::variable(&weights, j));
                } else {
                    args.push(Polynomial::zero(&weights));
                }
            }
            point = self.p.iter().map(|pi| pi.substitute(&args)).collect();
        }
        let to_exponential = point;

        // Invert by degree induction: the correction of T_i only mentions
        // variables of layers below d(i), whose inverse components are
        // already final when we reach i.
        let mut from_exponential: Vec<Polynomial> = (0..q)
            .map(|j| Polynomial::variable(&weights, j))
            .collect();
        for i in 0..q {
            let xi = Polynomial::variable(&weights, i);
            let correction = &to_exponential[i] - &xi;
            from_exponential[i] = &xi - &correction.substitute(&from_exponential);
        }

        let x_map: Vec<usize> = (0..q).collect();
        let y_map: Vec<usize> = (q..2 * q).collect();
        let mut args = Vec::with_capacity(2 * q);
        for t in &to_exponential {
            args.push(t.embed(&xy_weights, &x_map));
        }
        for t in &to_exponential {
            args.push(t.embed(&xy_weights, &y_map));
        }
        let product_exp: Vec<Polynomial> =
            self.p.iter().map(|pi| pi.substitute(&args)).collect();
        let law: Vec<Polynomial> = from_exponential
            .iter()
            .map(|s| s.substitute(&product_exp))
            .collect();

        let fields = FieldMatrix::from_law(&law, &weights);

        SecondKindChart {
            to_exponential,
            from_exponential,
            law,
            fields,
        }
    }
}

/// Outcome of [`GroupLaw::ideal_membership_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealMembershipReport {
    pub holds: bool,
    pub failing_coordinate: Option<usize>,
}

/// The group in coordinates of the second kind: the chart maps in both
/// directions, the group law there, and its left-invariant frame.
#[derive(Clone, Debug)]
pub struct SecondKindChart {
    to_exponential: Vec<Polynomial>,
    from_exponential: Vec<Polynomial>,
    law: Vec<Polynomial>,
    fields: FieldMatrix,
}

impl SecondKindChart {
    /// The polynomial map from second-kind to exponential coordinates.
    pub fn to_exponential(&self) -> &[Polynomial] {
        &self.to_exponential
    }

    /// The inverse chart map.
    pub fn from_exponential(&self) -> &[Polynomial] {
        &self.from_exponential
    }

    /// The group law in the second-kind chart.
    pub fn law(&self) -> &[Polynomial] {
        &self.law
    }

    /// The left-invariant frame in the second-kind chart.
    pub fn fields(&self) -> &FieldMatrix {
        &self.fields
    }
}

/// The left-invariant frame of a group law: entry (i, j) is the polynomial
/// coefficient of the coordinate direction ∂_i in the field X_j.
///
/// Under the degree ordering of the basis the matrix is unitriangular:
/// entry (i, j) is the Kronecker delta whenever d(i) ≤ d(j), so its
/// determinant is identically one and the frame is invertible everywhere.
#[derive(Clone, Debug)]
pub struct FieldMatrix {
    entries: Vec<Vec<Polynomial>>,
    compiled: Vec<Vec<CompiledPoly>>,
    weights: Vec<u32>,
}

impl FieldMatrix {
    fn from_law(p: &[Polynomial], weights: &[u32]) -> FieldMatrix {
        let q = weights.len();
        let restriction: Vec<Polynomial> = (0..q)
            .map(|j| Polynomial::variable(weights, j))
            .chain((0..q).map(|_| Polynomial::zero(weights)))
            .collect();
        let entries: Vec<Vec<Polynomial>> = (0..q)
            .map(|i| {
                (0..q)
                    .map(|j| p[i].partial_derivative(q + j).substitute(&restriction))
                    .collect()
            })
            .collect();
        let compiled = entries
            .iter()
            .map(|row| row.iter().map(Polynomial::compile).collect())
            .collect();
        FieldMatrix {
            entries,
            compiled,
            weights: weights.to_vec(),
        }
    }

    /// Matrix dimension q.
    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    /// The polynomial entry (i, j), i.e. the ∂_i component of X_j.
    pub fn entry(&self, i: usize, j: usize) -> &Polynomial {
        &self.entries[i][j]
    }

    /// Evaluates the whole frame at a point; column j is X_j(x).
    pub fn evaluate(&self, x: &[f64]) -> DMatrix<f64> {
        let q = self.dimension();
        assert_eq!(x.len(), q);
        DMatrix::from_fn(q, q, |i, j| self.compiled[i][j].evaluate(x))
    }

    /// Exact structural check: identity entries on and above the degree
    /// diagonal, and weighted homogeneity of degree d(i) − d(j) below it.
    pub fn unitriangular_under_degree_order(&self, grading: &Grading) -> bool {
        let q = self.dimension();
        for i in 0..q {
            for j in 0..q {
                let di = grading.layer_of(i) as u64;
                let dj = grading.layer_of(j) as u64;
                let e = &self.entries[i][j];
                if di < dj && !e.is_zero() {
                    return false;
                }
                if di == dj {
                    let expected = if i == j {
                        Polynomial::one(&self.weights)
                    } else {
                        Polynomial::zero(&self.weights)
                    };
                    if *e != expected {
                        return false;
                    }
                }
                if di > dj && !e.is_weighted_homogeneous(di - dj) {
                    return false;
                }
            }
        }
        true
    }
}

impl Grading {
    /// The dilation δ_r in graded coordinates. Panics when r is not
    /// positive.
    pub fn dilate(&self, r: f64, x: &[f64]) -> Vec<f64> {
        assert!(r > 0.0, "dilation factor must be positive, got {r}");
        assert_eq!(x.len(), self.dimension());
        x.iter()
            .enumerate()
            .map(|(j, &v)| v * r.powi(self.layer_of(j) as i32))
            .collect()
    }
}

/// A homogeneous norm of max-of-layers shape: N(v) is the largest of
/// (|v^{(k)}|₂ / ε_k)^{1/k} over the layer blocks v^{(k)}.
///
/// Homogeneity N(δ_r v) = r·N(v) and symmetry N(−v) = N(v) hold by
/// construction for any ε; the triangle inequality for the induced distance
/// is what calibration buys.
#[derive(Clone, Debug)]
pub struct HomogeneousNorm {
    grading: Grading,
    epsilons: Vec<f64>,
}

impl HomogeneousNorm {
    /// A norm with explicitly chosen layer constants. Panics unless ε₁ = 1
    /// and all constants are positive.
    pub fn with_epsilons(grading: Grading, epsilons: Vec<f64>) -> HomogeneousNorm {
        assert_eq!(epsilons.len(), grading.step());
        assert!(epsilons[0] == 1.0, "the first layer constant is pinned to 1");
        assert!(epsilons.iter().all(|&e| e > 0.0));
        HomogeneousNorm { grading, epsilons }
    }

    /// The layer constants (ε₁, …, ε_ι).
    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    /// The grading the layer blocks come from.
    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// N(v). Panics on a length mismatch.
    pub fn norm(&self, v: &[f64]) -> f64 {
        self.partial_norm(v, self.grading.step())
    }

    /// The norm of the truncation of v to layers 1..=top_layer, which is the
    /// homogeneous norm of the quotient group.
    pub fn partial_norm(&self, v: &[f64], top_layer: usize) -> f64 {
        assert_eq!(v.len(), self.grading.dimension());
        assert!((1..=self.grading.step()).contains(&top_layer));
        let mut worst = 0.0f64;
        for k in 1..=top_layer {
            let block = &v[self.grading.layer_range(k)];
            let block_norm: f64 = block.iter().map(|&c| c * c).sum::<f64>().sqrt();
            let scaled = (block_norm / self.epsilons[k - 1]).powf(1.0 / k as f64);
            worst = worst.max(scaled);
        }
        worst
    }

    /// The left-invariant homogeneous distance ρ(x, y) = N(x⁻¹·y).
    pub fn distance(&self, law: &GroupLaw, x: &[f64], y: &[f64]) -> f64 {
        self.norm(&law.difference(x, y))
    }
}

/// Reproducible settings for [`calibrate_norm`].
#[derive(Clone, Debug)]
pub struct CalibrationConfig {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> CalibrationConfig {
        CalibrationConfig {
            samples: 20_000,
            tolerance: 1e-9,
            seed: 0,
        }
    }
}

/// Chooses layer constants ε_k so that the induced distance satisfies the
/// triangle inequality on every sampled triple.
///
/// ε₁ = 1. For each later layer the candidate is tested on the quotient
/// group of layers up to k (a fixed sample of triples per layer, drawn from
/// a deterministic stream of the seed), starting at 1 and bisecting
/// downward; the largest sampled-feasible value is kept. The returned norm
/// always passed its own layer's full sample, the last layer being the full
/// group; callers that need a guarantee beyond the sample must treat the
/// result as statistical evidence, which is all a finite sample can give.
pub fn calibrate_norm(
    law: &GroupLaw,
    config: &CalibrationConfig,
) -> Result<HomogeneousNorm, GroupError> {
    assert!(config.samples >= 10_000, "calibration needs at least 10^4 samples");
    assert!(config.tolerance >= 0.0);
    let grading = law.grading().clone();
    let q = grading.dimension();
    let mut epsilons = vec![1.0f64];

    for layer in 2..=grading.step() {
        let active = grading.layer_range(1).start..grading.layer_range(layer).end;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(layer as u64);

        // Precompute the three displacement vectors per triple; they do not
        // depend on the candidate epsilon.
        let mut displacements = Vec::with_capacity(config.samples);
        for _ in 0..config.samples {
            let mut x = vec![0.0; q];
            let mut y = vec![0.0; q];
            let mut z = vec![0.0; q];
            for j in active.clone() {
                x[j] = rng.gen_range(-1.0..1.0);
                y[j] = rng.gen_range(-1.0..1.0);
                z[j] = rng.gen_range(-1.0..1.0);
            }
            displacements.push((
                law.difference(&x, &z),
                law.difference(&x, &y),
                law.difference(&y, &z),
            ));
        }

        let feasible = |eps_k: f64| -> bool {
            let mut eps = epsilons.clone();
            eps.push(eps_k);
            // Pad so partial_norm can use the full struct.
            eps.resize(grading.step(), 1.0);
            let norm = HomogeneousNorm::with_epsilons(grading.clone(), eps);
            displacements.iter().all(|(xz, xy, yz)| {
                let n_xz = norm.partial_norm(xz, layer);
                let n_xy = norm.partial_norm(xy, layer);
                let n_yz = norm.partial_norm(yz, layer);
                n_xz <= n_xy + n_yz + config.tolerance * n_xz.max(1.0)
            })
        };

        let eps_k = if feasible(1.0) {
            1.0
        } else {
            let mut lo = None;
            let mut hi = 1.0f64;
            let mut candidate = 0.5f64;
            for _ in 0..60 {
                if feasible(candidate) {
                    lo = Some(candidate);
                    break;
                }
                hi = candidate;
                candidate /= 2.0;
            }
            let Some(mut lo) = lo else {
                return Err(GroupError::CalibrationFailed { layer });
            };
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if feasible(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        epsilons.push(eps_k);
    }

    Ok(HomogeneousNorm::with_epsilons(grading, epsilons))
}

fn double_weights(weights: &[u32]) -> Vec<u32> {
    let mut xy = Vec::with_capacity(2 * weights.len());
    xy.extend_from_slice(weights);
    xy.extend_from_slice(weights);
    xy
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Sums the BCH series for the algebra: enumerates all multi-index
/// sequences of total letter count up to the step, groups them by the word
/// they bracket, and assembles the resulting polynomial coordinates of
/// C(X, Y) where X carries the x variables and Y the y variables.
fn bch_polynomials(algebra: &StratifiedAlgebra) -> Vec<Polynomial> {
    let q = algebra.dimension();
    let step = algebra.step();
    let weights = algebra.grading().weights();
    let xy_weights = double_weights(&weights);

    // Rational coefficient per bracket word, summed over all sequences.
    let mut word_coeffs: HashMap<Vec<u8>, Rational> = HashMap::new();
    let mut seq: Vec<(u32, u32)> = Vec::new();
    accumulate_sequences(&mut seq, 0, step, &mut word_coeffs);

    // Coefficient vectors of the nested bracket of each word, built from
    // short words outward: [w₀, [w₁, [... w_last]]].
    let letter_vec = |letter: u8| -> Vec<Polynomial> {
        (0..q)
            .map(|k| Polynomial::variable(&xy_weights, if letter == 0 { k } else { q + k }))
            .collect()
    };
    let mut word_vecs: HashMap<Vec<u8>, Vec<Polynomial>> = HashMap::new();
    let mut words: Vec<Vec<u8>> = word_coeffs.keys().cloned().collect();
    words.sort_by_key(|w| (w.len(), w.clone()));
    for word in &words {
        if word.len() == 1 {
            word_vecs.insert(word.clone(), letter_vec(word[0]));
            continue;
        }
        let tail = word[1..].to_vec();
        let tail_vec = match word_vecs.get(&tail) {
            Some(v) => v.clone(),
            None => nested_bracket(&tail, q, &letter_vec, algebra, &xy_weights),
        };
        let head = letter_vec(word[0]);
        word_vecs.insert(
            word.clone(),
            bracket_of_vectors(algebra, &head, &tail_vec, &xy_weights),
        );
    }

    let mut p: Vec<Polynomial> = (0..q).map(|_| Polynomial::zero(&xy_weights)).collect();
    for (word, coeff) in &word_coeffs {
        if coeff.is_zero() {
            continue;
        }
        let vec = &word_vecs[word];
        for (pi, vi) in p.iter_mut().zip(vec) {
            *pi = &*pi + &vi.scale(coeff);
        }
    }
    p
}

fn nested_bracket(
    word: &[u8],
    q: usize,
    letter_vec: &dyn Fn(u8) -> Vec<Polynomial>,
    algebra: &StratifiedAlgebra,
    xy_weights: &[u32],
) -> Vec<Polynomial> {
    if word.len() == 1 {
        return letter_vec(word[0]);
    }
    let tail = nested_bracket(&word[1..], q, letter_vec, algebra, xy_weights);
    bracket_of_vectors(algebra, &letter_vec(word[0]), &tail, xy_weights)
}

/// Bracket of two vectors with polynomial coefficients over the basis.
fn bracket_of_vectors(
    algebra: &StratifiedAlgebra,
    u: &[Polynomial],
    v: &[Polynomial],
    xy_weights: &[u32],
) -> Vec<Polynomial> {
    let q = algebra.dimension();
    let mut out: Vec<Polynomial> = (0..q).map(|_| Polynomial::zero(xy_weights)).collect();
    for i in 0..q {
        if u[i].is_zero() {
            continue;
        }
        for j in 0..q {
            if v[j].is_zero() {
                continue;
            }
            let product = &u[i] * &v[j];
            for k in 0..q {
                let c = algebra.structure_constant(i, j, k);
                if !c.is_zero() {
                    out[k] = &out[k] + &product.scale(c);
                }
            }
        }
    }
    out
}

/// Walks all sequences of index pairs (a_i, b_i) ≠ (0, 0) with total letter
/// count ≤ step, adding each sequence's BCH coefficient to its word.
fn accumulate_sequences(
    seq: &mut Vec<(u32, u32)>,
    weight: usize,
    step: usize,
    acc: &mut HashMap<Vec<u8>, Rational>,
) {
    if !seq.is_empty() {
        let l = seq.len();
        let mut denom = BigInt::from(l as u32) * BigInt::from(weight as u32);
        for &(a, b) in seq.iter() {
            denom *= factorial(a);
            denom *= factorial(b);
        }
        let numer = if l % 2 == 1 { BigInt::one() } else { -BigInt::one() };
        let coeff = Rational::new(numer, denom);
        let mut word = Vec::with_capacity(weight);
        for &(a, b) in seq.iter() {
            word.extend(std::iter::repeat(0u8).take(a as usize));
            word.extend(std::iter::repeat(1u8).take(b as usize));
        }
        *acc.entry(word).or_insert_with(Rational::zero) += coeff;
    }
    if weight < step {
        for w in 1..=(step - weight) {
            for a in 0..=w {
                seq.push((a as u32, (w - a) as u32));
                accumulate_sequences(seq, weight + w, step, acc);
                seq.pop();
            }
        }
    }
}
