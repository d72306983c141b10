//! Exterior algebra over the graded basis, with the degree filtration that
//! drives everything else: a basis p-vector X_J carries the degree
//! d(J) = d(j₁) + … + d(j_p), and a general p-vector decomposes into parts
//! of pure degree.
//!
//! Coefficients are floats; exact work stays in the polynomial layer. The
//! basis p-vectors are orthonormal for the graded metric, so norms are
//! plain Euclidean norms over the coefficients.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::algebra::Grading;

/// A failed precondition in this module.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MultivecError {
    #[error("cannot take the degree of a p-vector that vanishes at the tolerance")]
    ZeroVector,
    #[error("factor {index} depends linearly on the previous ones")]
    DependentFactors { index: usize },
}

/// An element of Λ_p over the graded basis: a map from strictly increasing
/// index tuples to coefficients, tagged with its grading.
#[derive(Clone, Debug, PartialEq)]
pub struct PVector {
    grading: Grading,
    p: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

impl PVector {
    /// The zero p-vector of the given order.
    pub fn zero(grading: Grading, p: usize) -> PVector {
        assert!(p <= grading.dimension(), "order exceeds the dimension");
        PVector {
            grading,
            p,
            coeffs: BTreeMap::new(),
        }
    }

    /// The basis p-vector X_J for a strictly increasing index tuple.
    pub fn basis(grading: Grading, indices: &[usize]) -> PVector {
        let mut out = PVector::zero(grading, indices.len());
        out.add_term(indices.to_vec(), 1.0);
        out
    }

    /// A 1-vector from coordinates over the adapted basis.
    pub fn from_vector(grading: Grading, v: &[f64]) -> PVector {
        assert_eq!(v.len(), grading.dimension());
        let mut out = PVector::zero(grading, 1);
        for (j, &c) in v.iter().enumerate() {
            out.add_term(vec![j], c);
        }
        out
    }

    fn add_term(&mut self, indices: Vec<usize>, c: f64) {
        assert_eq!(indices.len(), self.p);
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(indices.iter().all(|&j| j < self.grading.dimension()));
        if c == 0.0 {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(indices) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if *slot.get() == 0.0 {
                    slot.remove();
                }
            }
        }
    }

    /// The order p.
    pub fn order(&self) -> usize {
        self.p
    }

    /// The grading of the ambient algebra.
    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// The coefficient of X_J, zero when absent. The tuple must be strictly
    /// increasing.
    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        assert!(indices.windows(2).all(|w| w[0] < w[1]));
        self.coeffs.get(indices).copied().unwrap_or(0.0)
    }

    /// Iterates over (index tuple, coefficient) pairs.
    pub fn components(&self) -> impl Iterator<Item = (&[usize], f64)> {
        self.coeffs.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// Whether no nonzero coefficients are stored.
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The degree d(J) = Σ d(j_i) of a basis p-vector's index set.
    pub fn index_degree(grading: &Grading, indices: &[usize]) -> u64 {
        indices.iter().map(|&j| grading.layer_of(j) as u64).sum()
    }

    /// The largest degree any p-vector of this order can have.
    pub fn max_degree(grading: &Grading, p: usize) -> u64 {
        let mut weights: Vec<u64> = (0..grading.dimension())
            .map(|j| grading.layer_of(j) as u64)
            .collect();
        weights.sort_unstable();
        weights.iter().rev().take(p).sum()
    }

    /// The wedge product. Panics when the combined order exceeds the
    /// dimension.
    pub fn wedge(&self, other: &PVector) -> PVector {
        assert_eq!(self.grading, other.grading, "mismatched gradings");
        let p = self.p + other.p;
        assert!(
            p <= self.grading.dimension(),
            "wedge order {p} exceeds dimension {}",
            self.grading.dimension()
        );
        let mut out = PVector::zero(self.grading.clone(), p);
        for (a, &ca) in &self.coeffs {
            'outer: for (b, &cb) in &other.coeffs {
                // Merge the sorted tuples, counting the transpositions that
                // move b's entries into place; a shared index kills the term.
                let mut merged = Vec::with_capacity(p);
                let mut sign = 1.0f64;
                let mut ai = 0;
                let mut bi = 0;
                while ai < a.len() || bi < b.len() {
                    if bi == b.len() || (ai < a.len() && a[ai] < b[bi]) {
                        merged.push(a[ai]);
                        ai += 1;
                    } else if ai == a.len() || b[bi] < a[ai] {
                        if (a.len() - ai) % 2 == 1 {
                            sign = -sign;
                        }
                        merged.push(b[bi]);
                        bi += 1;
                    } else {
                        continue 'outer;
                    }
                }
                out.add_term(merged, sign * ca * cb);
            }
        }
        out
    }

    /// The part of pure degree r.
    pub fn degree_projection(&self, r: u64) -> PVector {
        let mut out = PVector::zero(self.grading.clone(), self.p);
        for (k, &v) in &self.coeffs {
            if PVector::index_degree(&self.grading, k) == r {
                out.add_term(k.clone(), v);
            }
        }
        out
    }

    /// The Euclidean norm over the orthonormal basis p-vectors.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .values()
            .map(|&v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// The degree: the largest r whose projection exceeds the relative
    /// tolerance. Errors when the whole vector sits below the tolerance.
    pub fn degree(&self, tolerance: f64) -> Result<u64, MultivecError> {
        let total = self.norm();
        if total == 0.0 {
            return Err(MultivecError::ZeroVector);
        }
        let cutoff = tolerance * total;
        let mut best: Option<u64> = None;
        let mut by_degree: BTreeMap<u64, f64> = BTreeMap::new();
        for (k, &v) in &self.coeffs {
            *by_degree
                .entry(PVector::index_degree(&self.grading, k))
                .or_insert(0.0) += v * v;
        }
        for (&r, &sq) in &by_degree {
            if sq.sqrt() > cutoff {
                best = Some(best.map_or(r, |b: u64| b.max(r)));
            }
        }
        best.ok_or(MultivecError::ZeroVector)
    }

    /// The squared norms of the pure-degree parts, keyed by degree.
    pub fn degree_mass(&self) -> BTreeMap<u64, f64> {
        let mut by_degree: BTreeMap<u64, f64> = BTreeMap::new();
        for (k, &v) in &self.coeffs {
            *by_degree
                .entry(PVector::index_degree(&self.grading, k))
                .or_insert(0.0) += v * v;
        }
        by_degree
    }

    /// Applies a linear map of the underlying space (columns are images of
    /// the basis vectors) to the p-vector, i.e. its p-th exterior power.
    pub fn transform(&self, m: &DMatrix<f64>) -> PVector {
        let q = self.grading.dimension();
        assert_eq!(m.nrows(), q);
        assert_eq!(m.ncols(), q);
        let mut out = PVector::zero(self.grading.clone(), self.p);
        if self.p == 0 {
            return self.clone();
        }
        let targets = increasing_tuples(q, self.p);
        for (k, &v) in &self.coeffs {
            for j in &targets {
                // Minor of m with rows j and columns k.
                let minor = DMatrix::from_fn(self.p, self.p, |r, c| m[(j[r], k[c])]);
                let det = minor.determinant();
                if det != 0.0 {
                    out.add_term(j.clone(), v * det);
                }
            }
        }
        out
    }

    /// Scales every coefficient.
    pub fn scale(&self, c: f64) -> PVector {
        let mut out = PVector::zero(self.grading.clone(), self.p);
        for (k, &v) in &self.coeffs {
            out.add_term(k.clone(), c * v);
        }
        out
    }

    /// Adds two p-vectors of the same order.
    pub fn add(&self, other: &PVector) -> PVector {
        assert_eq!(self.grading, other.grading);
        assert_eq!(self.p, other.p);
        let mut out = self.clone();
        for (k, &v) in &other.coeffs {
            out.add_term(k.clone(), v);
        }
        out
    }
}

fn increasing_tuples(q: usize, p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(p);
    fn walk(q: usize, p: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == p {
            out.push(current.clone());
            return;
        }
        for j in start..q {
            current.push(j);
            walk(q, p, j + 1, current, out);
            current.pop();
        }
    }
    walk(q, p, 0, &mut current, &mut out);
    out
}

/// A linear subspace of the algebra with an orthonormal basis, produced
/// from independent spanning factors.
#[derive(Clone, Debug)]
pub struct Subspace {
    grading: Grading,
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    /// The dimension of the subspace.
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// The orthonormal basis vectors.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// The grading of the ambient space.
    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    /// The orthogonal projection of v onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for b in &self.basis {
            let dot: f64 = b.iter().zip(v).map(|(a, c)| a * c).sum();
            for (o, bc) in out.iter_mut().zip(b) {
                *o += dot * bc;
            }
        }
        out
    }

    /// Whether v lies in the subspace up to a relative tolerance.
    pub fn contains(&self, v: &[f64], tolerance: f64) -> bool {
        let projected = self.project(v);
        let residual: f64 = projected
            .iter()
            .zip(v)
            .map(|(p, c)| (c - p) * (c - p))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        residual <= tolerance * scale.max(1.0)
    }

    /// Splits the basis by layer when every basis vector is supported in a
    /// single layer; returns `None` otherwise. Layer k's block sits at
    /// position k−1 and may be empty.
    pub fn layer_split(&self) -> Option<Vec<Vec<Vec<f64>>>> {
        let mut blocks: Vec<Vec<Vec<f64>>> = vec![Vec::new(); self.grading.step()];
        for b in &self.basis {
            let mut layer = None;
            for (j, &c) in b.iter().enumerate() {
                if c.abs() > 1e-12 {
                    let l = self.grading.layer_of(j);
                    match layer {
                        None => layer = Some(l),
                        Some(prev) if prev == l => {}
                        Some(_) => return None,
                    }
                }
            }
            blocks[layer? - 1].push(b.clone());
        }
        Some(blocks)
    }
}

/// Orthonormalizes independent factors into a [`Subspace`]. Errors when a
/// factor lies in the span of the previous ones (relative residual below
/// 1e-12).
pub fn subspace_from_factors(
    grading: &Grading,
    factors: &[Vec<f64>],
) -> Result<Subspace, MultivecError> {
    let q = grading.dimension();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(factors.len());
    for (index, f) in factors.iter().enumerate() {
        assert_eq!(f.len(), q, "factor {index} has wrong length");
        let mut v = f.clone();
        for b in &basis {
            let dot: f64 = b.iter().zip(&v).map(|(a, c)| a * c).sum();
            for (vc, bc) in v.iter_mut().zip(b) {
                *vc -= dot * bc;
            }
        }
        let original: f64 = f.iter().map(|c| c * c).sum::<f64>().sqrt();
        let remaining: f64 = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if remaining <= 1e-12 * original.max(1.0) {
            return Err(MultivecError::DependentFactors { index });
        }
        for vc in &mut v {
            *vc /= remaining;
        }
        basis.push(v);
    }
    Ok(Subspace {
        grading: grading.clone(),
        basis,
    })
}
