//! Stratified Lie algebras as validated structure constants.
//!
//! A stratified algebra splits as V₁ ⊕ … ⊕ V_ι with [V₁, V_i] = V_{i+1}.
//! The constructor checks all of that exactly over the rationals:
//! antisymmetry, grading support, the Jacobi identity, and the generation
//! axiom via fraction-free rank computations. Everything downstream (group
//! laws, frames, blow-ups) trusts a constructed [`StratifiedAlgebra`], so
//! nothing may bypass validation.

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::Rational;

/// The layer structure of a stratified algebra: how the adapted basis
/// X₁, …, X_q splits into consecutive layer blocks.
///
/// Layers are numbered starting at 1; basis indices are 0-based throughout
/// the crate, while error messages print 1-based labels like `X3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grading {
    layer_dims: Vec<usize>,
}

impl Grading {
    /// Builds a grading from per-layer dimensions. Panics when the list is
    /// empty or contains a zero.
    pub fn new(layer_dims: &[usize]) -> Grading {
        assert!(!layer_dims.is_empty(), "a grading needs at least one layer");
        assert!(
            layer_dims.iter().all(|&m| m >= 1),
            "layer dimensions must be positive, got {layer_dims:?}"
        );
        Grading {
            layer_dims: layer_dims.to_vec(),
        }
    }

    /// Total dimension q.
    pub fn dimension(&self) -> usize {
        self.layer_dims.iter().sum()
    }

    /// Number of layers ι (the step).
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    /// The per-layer dimensions (m₁, …, m_ι).
    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// The layer (1-based) containing basis index `j` (0-based).
    pub fn layer_of(&self, j: usize) -> usize {
        let mut offset = 0;
        for (k, &m) in self.layer_dims.iter().enumerate() {
            offset += m;
            if j < offset {
                return k + 1;
            }
        }
        panic!("basis index {j} out of range for dimension {}", offset);
    }

    /// The 0-based index range of layer `k` (1-based).
    pub fn layer_range(&self, k: usize) -> std::ops::Range<usize> {
        assert!(
            (1..=self.step()).contains(&k),
            "layer {k} out of range for step {}",
            self.step()
        );
        let start: usize = self.layer_dims[..k - 1].iter().sum();
        start..start + self.layer_dims[k - 1]
    }

    /// The dilation weight of each coordinate: `weights()[j] = layer_of(j)`.
    pub fn weights(&self) -> Vec<u32> {
        (0..self.dimension())
            .map(|j| self.layer_of(j) as u32)
            .collect()
    }

    /// The homogeneous dimension Q = Σ_k k·m_k.
    pub fn homogeneous_dimension(&self) -> u64 {
        self.layer_dims
            .iter()
            .enumerate()
            .map(|(k, &m)| (k as u64 + 1) * m as u64)
            .sum()
    }
}

/// A failed construction or precondition in this module. Index fields are
/// 0-based; the messages print 1-based basis labels.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid algebra data: {0}")]
    InvalidInput(String),
    #[error("antisymmetry violated at (X{}, X{}), component X{}", .i + 1, .j + 1, .k + 1)]
    Antisymmetry { i: usize, j: usize, k: usize },
    #[error(
        "grading violated: [X{}, X{}] has a component on X{} outside layer {}",
        .i + 1, .j + 1, .k + 1, .expected_layer
    )]
    GradingSupport {
        i: usize,
        j: usize,
        k: usize,
        expected_layer: usize,
    },
    #[error("Jacobi identity violated at (X{}, X{}, X{})", .i + 1, .j + 1, .k + 1)]
    Jacobi { i: usize, j: usize, k: usize },
    #[error(
        "generation violated: [V1, V{}] spans only {rank} of the {expected} dimensions of V{layer}",
        .layer - 1
    )]
    Generation {
        layer: usize,
        rank: usize,
        expected: usize,
    },
    #[error("spanning vector {index} depends linearly on the previous ones")]
    DependentSpan { index: usize },
}

/// One declared bracket `[X_i, X_j] = Σ terms` with `i < j`, both 0-based.
/// Unlisted pairs bracket to zero; the antisymmetric side is filled in
/// automatically.
#[derive(Clone, Debug)]
pub struct BracketRule {
    pub i: usize,
    pub j: usize,
    pub terms: Vec<(usize, Rational)>,
}

impl BracketRule {
    /// Convenience for single-component integer brackets `[X_i, X_j] = c·X_k`.
    pub fn single(i: usize, j: usize, k: usize, c: i64) -> BracketRule {
        BracketRule {
            i,
            j,
            terms: vec![(k, crate::poly::rat(c, 1))],
        }
    }
}

/// A stratified Lie algebra: a grading plus the full structure-constant
/// table c\[i\]\[j\]\[k\] with [X_i, X_j] = Σ_k c\[i\]\[j\]\[k\] X_k.
///
/// Construction validates antisymmetry, grading support, the Jacobi
/// identity, and the generation axiom, in that order; the first violation is
/// reported with its indices.
#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedAlgebra {
    grading: Grading,
    constants: Vec<Vec<Vec<Rational>>>,
    constants_f64: Vec<f64>,
}

impl StratifiedAlgebra {
    /// Builds and validates an algebra from brackets given only for `i < j`.
    pub fn new(layer_dims: &[usize], brackets: &[BracketRule]) -> Result<StratifiedAlgebra, AlgebraError> {
        let grading = Grading::new(layer_dims);
        let q = grading.dimension();
        let mut constants = vec![vec![vec![Rational::zero(); q]; q]; q];
        for rule in brackets {
            if rule.i >= rule.j {
                return Err(AlgebraError::InvalidInput(format!(
                    "bracket rule for (X{}, X{}): declare only i < j",
                    rule.i + 1,
                    rule.j + 1
                )));
            }
            if rule.j >= q {
                return Err(AlgebraError::InvalidInput(format!(
                    "bracket rule for (X{}, X{}): index out of range for dimension {q}",
                    rule.i + 1,
                    rule.j + 1
                )));
            }
            for (k, c) in &rule.terms {
                if *k >= q {
                    return Err(AlgebraError::InvalidInput(format!(
                        "bracket [X{}, X{}]: component X{} out of range for dimension {q}",
                        rule.i + 1,
                        rule.j + 1,
                        k + 1
                    )));
                }
                constants[rule.i][rule.j][*k] += c;
                constants[rule.j][rule.i][*k] -= c;
            }
        }
        StratifiedAlgebra::from_full_constants(layer_dims, constants)
    }

    /// Builds and validates an algebra from a complete constants table,
    /// including the antisymmetry check the completed form of [`Self::new`]
    /// satisfies by construction.
    pub fn from_full_constants(
        layer_dims: &[usize],
        constants: Vec<Vec<Vec<Rational>>>,
    ) -> Result<StratifiedAlgebra, AlgebraError> {
        let grading = Grading::new(layer_dims);
        let q = grading.dimension();
        if constants.len() != q
            || constants
                .iter()
                .any(|row| row.len() != q || row.iter().any(|v| v.len() != q))
        {
            return Err(AlgebraError::InvalidInput(format!(
                "constants table must be {q}x{q}x{q}"
            )));
        }

        // Antisymmetry, including zero diagonal.
        for i in 0..q {
            for j in i..q {
                for k in 0..q {
                    if constants[i][j][k] != -constants[j][i][k].clone() {
                        return Err(AlgebraError::Antisymmetry { i, j, k });
                    }
                }
            }
        }

        // Grading support: [V_a, V_b] sits in V_{a+b}, vanishing above the step.
        for i in 0..q {
            for j in 0..q {
                let target = grading.layer_of(i) + grading.layer_of(j);
                for k in 0..q {
                    if !constants[i][j][k].is_zero() && grading.layer_of(k) != target {
                        return Err(AlgebraError::GradingSupport {
                            i,
                            j,
                            k,
                            expected_layer: target,
                        });
                    }
                }
            }
        }

        let bracket_vec = |u: &[Rational], v: &[Rational]| -> Vec<Rational> {
            let mut out = vec![Rational::zero(); q];
            for (i, ui) in u.iter().enumerate() {
                if ui.is_zero() {
                    continue;
                }
                for (j, vj) in v.iter().enumerate() {
                    if vj.is_zero() {
                        continue;
                    }
                    let uv = ui * vj;
                    for (k, c) in constants[i][j].iter().enumerate() {
                        if !c.is_zero() {
                            out[k] += &uv * c;
                        }
                    }
                }
            }
            out
        };
        let basis = |i: usize| -> Vec<Rational> {
            let mut e = vec![Rational::zero(); q];
            e[i] = Rational::from_integer(1.into());
            e
        };

        // Jacobi identity on basis triples.
        for i in 0..q {
            for j in (i + 1)..q {
                for k in (j + 1)..q {
                    let mut total = bracket_vec(&constants[i][j], &basis(k));
                    for (t, v) in bracket_vec(&constants[j][k], &basis(i)).into_iter().enumerate() {
                        total[t] += v;
                    }
                    for (t, v) in bracket_vec(&constants[k][i], &basis(j)).into_iter().enumerate() {
                        total[t] += v;
                    }
                    if total.iter().any(|v| !v.is_zero()) {
                        return Err(AlgebraError::Jacobi { i, j, k });
                    }
                }
            }
        }

        // Generation: brackets of V₁ with V_{k-1} must span V_k.
        for layer in 2..=grading.step() {
            let range = grading.layer_range(layer);
            let expected = range.len();
            let mut space = RowSpace::new(expected);
            for a in grading.layer_range(1) {
                for b in grading.layer_range(layer - 1) {
                    let projected: Vec<Rational> =
                        constants[a][b][range.clone()].to_vec();
                    space.insert(projected);
                }
            }
            if space.rank() < expected {
                return Err(AlgebraError::Generation {
                    layer,
                    rank: space.rank(),
                    expected,
                });
            }
        }

        let mut constants_f64 = vec![0.0; q * q * q];
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    constants_f64[(i * q + j) * q + k] = constants[i][j][k]
                        .to_f64()
                        .expect("structure constant fits in f64");
                }
            }
        }

        Ok(StratifiedAlgebra {
            grading,
            constants,
            constants_f64,
        })
    }

    /// The layer structure.
    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// Total dimension q.
    pub fn dimension(&self) -> usize {
        self.grading.dimension()
    }

    /// The step ι.
    pub fn step(&self) -> usize {
        self.grading.step()
    }

    /// The homogeneous dimension Q = Σ_k k·m_k.
    pub fn homogeneous_dimension(&self) -> u64 {
        self.grading.homogeneous_dimension()
    }

    /// The structure constant c\[i\]\[j\]\[k\].
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> &Rational {
        &self.constants[i][j][k]
    }

    /// The coefficients of [X_i, X_j] over the basis.
    pub fn bracket_basis(&self, i: usize, j: usize) -> &[Rational] {
        &self.constants[i][j]
    }

    /// Exact bracket of two coefficient vectors over the adapted basis.
    /// Panics on a length mismatch.
    pub fn bracket_rational(&self, u: &[Rational], v: &[Rational]) -> Vec<Rational> {
        let q = self.dimension();
        assert_eq!(u.len(), q);
        assert_eq!(v.len(), q);
        let mut out = vec![Rational::zero(); q];
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                let uv = ui * vj;
                for (k, c) in self.constants[i][j].iter().enumerate() {
                    if !c.is_zero() {
                        out[k] += &uv * c;
                    }
                }
            }
        }
        out
    }

    /// Floating-point bracket, for numeric callers. Panics on a length
    /// mismatch.
    pub fn bracket_f64(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let q = self.dimension();
        assert_eq!(u.len(), q);
        assert_eq!(v.len(), q);
        let mut out = vec![0.0; q];
        for (i, &ui) in u.iter().enumerate() {
            if ui == 0.0 {
                continue;
            }
            for (j, &vj) in v.iter().enumerate() {
                if vj == 0.0 {
                    continue;
                }
                let uv = ui * vj;
                let row = &self.constants_f64[(i * q + j) * q..(i * q + j + 1) * q];
                for (k, &c) in row.iter().enumerate() {
                    if c != 0.0 {
                        out[k] += uv * c;
                    }
                }
            }
        }
        out
    }

    /// Checks whether the span of the given independent vectors is closed
    /// under the bracket. On failure the report carries the first offending
    /// pair, its bracket, and the part of the bracket outside the span.
    ///
    /// Returns an error when the spanning set is linearly dependent.
    pub fn subalgebra_closure_check(
        &self,
        spanning: &[Vec<Rational>],
    ) -> Result<ClosureReport, AlgebraError> {
        let q = self.dimension();
        let mut space = RowSpace::new(q);
        for (index, v) in spanning.iter().enumerate() {
            assert_eq!(v.len(), q, "spanning vector {index} has wrong length");
            if !space.insert(v.clone()) {
                return Err(AlgebraError::DependentSpan { index });
            }
        }
        for a in 0..spanning.len() {
            for b in (a + 1)..spanning.len() {
                let bracket = self.bracket_rational(&spanning[a], &spanning[b]);
                let residual = space.reduce(&bracket);
                if residual.iter().any(|v| !v.is_zero()) {
                    return Ok(ClosureReport {
                        closed: false,
                        witness: Some(ClosureWitness {
                            pair: (a, b),
                            bracket,
                            residual,
                        }),
                    });
                }
            }
        }
        Ok(ClosureReport {
            closed: true,
            witness: None,
        })
    }
}

/// Outcome of [`StratifiedAlgebra::subalgebra_closure_check`].
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub closed: bool,
    pub witness: Option<ClosureWitness>,
}

/// The first bracket that escaped the span: which pair of spanning vectors,
/// the bracket itself, and its component outside the span.
#[derive(Clone, Debug)]
pub struct ClosureWitness {
    pub pair: (usize, usize),
    pub bracket: Vec<Rational>,
    pub residual: Vec<Rational>,
}

/// Reduced row echelon form over the rationals, built incrementally.
pub(crate) struct RowSpace {
    cols: usize,
    rows: Vec<Vec<Rational>>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub(crate) fn new(cols: usize) -> RowSpace {
        RowSpace {
            cols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// Residual of `v` after eliminating all pivot columns.
    pub(crate) fn reduce(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(v.len(), self.cols);
        let mut out = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if out[p].is_zero() {
                continue;
            }
            let factor = out[p].clone();
            for (o, r) in out.iter_mut().zip(row) {
                *o -= &factor * r;
            }
        }
        out
    }

    /// Adds `v` to the space. Returns false when `v` already lies in it.
    pub(crate) fn insert(&mut self, v: Vec<Rational>) -> bool {
        let mut reduced = self.reduce(&v);
        let Some(pivot) = reduced.iter().position(|c| !c.is_zero()) else {
            return false;
        };
        let lead = reduced[pivot].clone();
        for c in &mut reduced {
            *c /= &lead;
        }
        // Keep earlier rows clean on the new pivot column.
        for (row, _) in self.rows.iter_mut().zip(&self.pivots) {
            if row[pivot].is_zero() {
                continue;
            }
            let factor = row[pivot].clone();
            for (r, n) in row.iter_mut().zip(&reduced) {
                *r -= &factor * n;
            }
        }
        self.rows.push(reduced);
        self.pivots.push(pivot);
        true
    }

    pub(crate) fn rank(&self) -> usize {
        self.rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;

    fn heisenberg1() -> StratifiedAlgebra {
        StratifiedAlgebra::new(&[2, 1], &[BracketRule::single(0, 1, 2, 1)]).unwrap()
    }

    fn engel() -> StratifiedAlgebra {
        StratifiedAlgebra::new(
            &[2, 1, 1],
            &[BracketRule::single(0, 1, 2, 1), BracketRule::single(0, 2, 3, 1)],
        )
        .unwrap()
    }

    fn e5() -> StratifiedAlgebra {
        StratifiedAlgebra::new(
            &[2, 1, 1, 1],
            &[
                BracketRule::single(0, 1, 2, 1),
                BracketRule::single(0, 2, 3, 1),
                BracketRule::single(0, 3, 4, 1),
            ],
        )
        .unwrap()
    }

    fn basis(q: usize, i: usize) -> Vec<Rational> {
        let mut e = vec![Rational::zero(); q];
        e[i] = rat(1, 1);
        e
    }

    #[test]
    fn grading_bookkeeping() {
        let g = Grading::new(&[2, 1, 1]);
        assert_eq!(g.dimension(), 4);
        assert_eq!(g.step(), 3);
        assert_eq!(g.layer_of(0), 1);
        assert_eq!(g.layer_of(1), 1);
        assert_eq!(g.layer_of(2), 2);
        assert_eq!(g.layer_of(3), 3);
        assert_eq!(g.layer_range(2), 2..3);
        assert_eq!(g.weights(), vec![1, 1, 2, 3]);
    }

    #[test]
    fn homogeneous_dimensions() {
        assert_eq!(heisenberg1().homogeneous_dimension(), 4);
        assert_eq!(engel().homogeneous_dimension(), 7);
        assert_eq!(e5().homogeneous_dimension(), 11);
    }

    #[test]
    fn catalog_algebras_validate() {
        heisenberg1();
        engel();
        e5();
    }

    #[test]
    fn abelian_with_declared_step_two_fails_generation() {
        let err = StratifiedAlgebra::new(&[2, 1], &[]).unwrap_err();
        assert_eq!(
            err,
            AlgebraError::Generation {
                layer: 2,
                rank: 0,
                expected: 1
            }
        );
    }

    #[test]
    fn jacobi_violation_is_detected() {
        // [X1,X2] = X4 and [X3,X4] = X5 with layers (3,1,1): the triple
        // (X1,X2,X3) produces -X5.
        let err = StratifiedAlgebra::new(
            &[3, 1, 1],
            &[BracketRule::single(0, 1, 3, 1), BracketRule::single(2, 3, 4, 1)],
        )
        .unwrap_err();
        assert_eq!(err, AlgebraError::Jacobi { i: 0, j: 1, k: 2 });
    }

    #[test]
    fn grading_violation_is_detected() {
        // A layer-1 component on a bracket of layer-1 vectors.
        let err = StratifiedAlgebra::new(&[2, 1], &[BracketRule::single(0, 1, 1, 1)]).unwrap_err();
        assert!(matches!(err, AlgebraError::GradingSupport { i: 0, j: 1, k: 1, .. }));
    }

    #[test]
    fn engel_brackets() {
        let a = engel();
        let x1 = basis(4, 0);
        let x2 = basis(4, 1);
        let x3 = basis(4, 2);
        assert_eq!(a.bracket_rational(&x1, &x2), basis(4, 2));
        assert_eq!(a.bracket_rational(&x1, &x3), basis(4, 3));
        assert_eq!(a.bracket_rational(&x2, &x3), vec![Rational::zero(); 4]);
        assert_eq!(a.bracket_rational(&x2, &x2), vec![Rational::zero(); 4]);
        let f = a.bracket_f64(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(f, vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn bracket_respects_grading() {
        let a = e5();
        let g = a.grading().clone();
        for i in 0..5 {
            for j in 0..5 {
                let target = g.layer_of(i) + g.layer_of(j);
                for k in 0..5 {
                    if !a.structure_constant(i, j, k).is_zero() {
                        assert_eq!(g.layer_of(k), target);
                    }
                }
            }
        }
    }

    #[test]
    fn every_single_entry_mutation_invalidates_engel() {
        let a = engel();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    let mut table = a.constants.clone();
                    table[i][j][k] += rat(1, 1);
                    assert!(
                        StratifiedAlgebra::from_full_constants(&[2, 1, 1], table).is_err(),
                        "mutation at ({i},{j},{k}) slipped through"
                    );
                }
            }
        }
    }

    #[test]
    fn closure_check_engel_spans() {
        let a = engel();
        let ok = a
            .subalgebra_closure_check(&[basis(4, 1), basis(4, 2)])
            .unwrap();
        assert!(ok.closed);

        let bad = a
            .subalgebra_closure_check(&[basis(4, 0), basis(4, 1)])
            .unwrap();
        assert!(!bad.closed);
        let witness = bad.witness.unwrap();
        assert_eq!(witness.pair, (0, 1));
        assert_eq!(witness.bracket, basis(4, 2));
        assert_eq!(witness.residual, basis(4, 2));

        let single = a.subalgebra_closure_check(&[basis(4, 0)]).unwrap();
        assert!(single.closed);

        let dependent = a.subalgebra_closure_check(&[basis(4, 0), basis(4, 0)]);
        assert_eq!(dependent.unwrap_err(), AlgebraError::DependentSpan { index: 1 });
    }

    #[test]
    fn row_space_reduces_exactly() {
        let mut space = RowSpace::new(3);
        assert!(space.insert(vec![rat(2, 1), rat(0, 1), rat(1, 1)]));
        assert!(space.insert(vec![rat(0, 1), rat(3, 1), rat(1, 1)]));
        assert!(!space.insert(vec![rat(2, 1), rat(3, 1), rat(2, 1)]));
        assert_eq!(space.rank(), 2);
        let residual = space.reduce(&[rat(0, 1), rat(0, 1), rat(5, 1)]);
        assert!(residual.iter().any(|v| !v.is_zero()));
    }
}
