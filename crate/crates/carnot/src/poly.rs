//! Exact multivariate polynomial arithmetic over arbitrary-precision
//! rationals, with a weighted notion of degree.
//!
//! Every polynomial lives in a fixed variable space described by a list of
//! positive integer weights, one weight per variable. The weighted degree of
//! a monomial is the sum of `weight(j) * exponent(j)`; when the weights are
//! the layer indices of a stratified algebra this is exactly the homogeneity
//! degree under dilations, which is why the weights travel with the
//! polynomial instead of being an argument to the degree functions.
//!
//! Coefficients are arbitrary-precision rationals: the Baker-Campbell-
//! Hausdorff denominators grow factorially and any fixed-width type would
//! overflow silently. Terms are kept in a canonical graded-lexicographic
//! order, so two polynomials are equal iff they are structurally equal.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational number, always reduced to lowest terms with
/// a positive denominator.
pub type Rational = num_rational::BigRational;

/// Builds a [`Rational`] from small integers. Panics when `den` is zero.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// An exponent vector together with its weighted degree.
///
/// The ordering is graded lexicographic: first by weighted degree, then by
/// the exponent vector. Storing the degree inside the key makes the term map
/// of a [`Polynomial`] canonically ordered without consulting the weights.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    wdeg: u64,
    exps: Vec<u32>,
}

impl Monomial {
    fn new(weights: &[u32], exps: Vec<u32>) -> Monomial {
        debug_assert_eq!(weights.len(), exps.len());
        let wdeg = exps
            .iter()
            .zip(weights)
            .map(|(&e, &w)| u64::from(e) * u64::from(w))
            .sum();
        Monomial { wdeg, exps }
    }

    /// The exponent of variable `j`.
    pub fn exponent(&self, j: usize) -> u32 {
        self.exps[j]
    }

    /// All exponents, one per variable of the ambient space.
    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }

    /// The weighted degree `Σ_j weight(j) · exponent(j)`.
    pub fn weighted_degree(&self) -> u64 {
        self.wdeg
    }

    fn is_constant(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }
}

/// A multivariate polynomial with rational coefficients in a weighted
/// variable space.
///
/// Invariants: no zero coefficients are stored, every exponent vector has
/// one entry per variable, and the term map is ordered graded-
/// lexicographically. Binary operations require both operands to live in the
/// same space (equal weight lists) and panic otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    weights: Vec<u32>,
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    /// The zero polynomial in the space described by `weights`.
    ///
    /// Panics when some weight is zero.
    pub fn zero(weights: &[u32]) -> Polynomial {
        assert!(
            weights.iter().all(|&w| w >= 1),
            "variable weights must be positive, got {weights:?}"
        );
        Polynomial {
            weights: weights.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    /// The constant polynomial `c`.
    pub fn constant(weights: &[u32], c: Rational) -> Polynomial {
        let mut p = Polynomial::zero(weights);
        if !c.is_zero() {
            let m = Monomial::new(&p.weights, vec![0; p.weights.len()]);
            p.terms.insert(m, c);
        }
        p
    }

    /// The constant polynomial one.
    pub fn one(weights: &[u32]) -> Polynomial {
        Polynomial::constant(weights, Rational::one())
    }

    /// The polynomial `x_j` (0-based). Panics when `j` is out of range.
    pub fn variable(weights: &[u32], j: usize) -> Polynomial {
        assert!(j < weights.len(), "variable {j} out of range for {weights:?}");
        let mut exps = vec![0; weights.len()];
        exps[j] = 1;
        Polynomial::monomial(weights, &exps, Rational::one())
    }

    /// A single-term polynomial `c · x^exps`.
    ///
    /// Panics when `exps` does not have one entry per variable.
    pub fn monomial(weights: &[u32], exps: &[u32], c: Rational) -> Polynomial {
        assert_eq!(
            exps.len(),
            weights.len(),
            "exponent vector length {} does not match {} variables",
            exps.len(),
            weights.len()
        );
        let mut p = Polynomial::zero(weights);
        if !c.is_zero() {
            p.terms.insert(Monomial::new(&p.weights, exps.to_vec()), c);
        }
        p
    }

    /// Number of variables of the ambient space.
    pub fn variable_count(&self) -> usize {
        self.weights.len()
    }

    /// The weight (dilation degree) of each variable.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Whether this is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Iterates over `(monomial, coefficient)` pairs in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    /// Number of stored terms.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The coefficient of the monomial with the given exponents, zero when
    /// the term is absent.
    pub fn coefficient(&self, exps: &[u32]) -> Rational {
        assert_eq!(exps.len(), self.weights.len());
        let key = Monomial::new(&self.weights, exps.to_vec());
        self.terms.get(&key).cloned().unwrap_or_else(Rational::zero)
    }

    fn assert_same_space(&self, other: &Polynomial) {
        assert_eq!(
            self.weights, other.weights,
            "polynomials live in different weighted variable spaces"
        );
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(slot) => {
                slot.insert(c);
            }
            Entry::Occupied(mut slot) => {
                *slot.get_mut() += c;
                if slot.get().is_zero() {
                    slot.remove();
                }
            }
        }
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.weights);
        }
        let terms = self
            .terms
            .iter()
            .map(|(m, v)| (m.clone(), v * c))
            .collect();
        Polynomial {
            weights: self.weights.clone(),
            terms,
        }
    }

    /// Raises the polynomial to a nonnegative integer power.
    pub fn pow(&self, n: u32) -> Polynomial {
        let mut acc = Polynomial::one(&self.weights);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Composes `self` with `assignments`, substituting `assignments[j]` for
    /// variable `j`. The result lives in the assignments' common space.
    ///
    /// Panics when the assignment count differs from the variable count or
    /// the assignments disagree about their own space.
    pub fn substitute(&self, assignments: &[Polynomial]) -> Polynomial {
        assert_eq!(
            assignments.len(),
            self.weights.len(),
            "expected {} assignments, got {}",
            self.weights.len(),
            assignments.len()
        );
        assert!(
            !assignments.is_empty(),
            "cannot substitute into a polynomial over zero variables"
        );
        let target = assignments[0].weights.clone();
        for a in assignments {
            assert_eq!(
                a.weights, target,
                "substitution assignments live in different spaces"
            );
        }

        // Cache powers of each assignment up to the largest exponent used.
        let mut max_exp = vec![0u32; self.weights.len()];
        for m in self.terms.keys() {
            for (j, &e) in m.exps.iter().enumerate() {
                max_exp[j] = max_exp[j].max(e);
            }
        }
        let powers: Vec<Vec<Polynomial>> = assignments
            .iter()
            .zip(&max_exp)
            .map(|(a, &top)| {
                let mut ladder = Vec::with_capacity(top as usize + 1);
                ladder.push(Polynomial::one(&target));
                for k in 1..=top {
                    let next = &ladder[(k - 1) as usize] * a;
                    ladder.push(next);
                }
                ladder
            })
            .collect();

        let mut out = Polynomial::zero(&target);
        for (m, c) in &self.terms {
            let mut prod = Polynomial::constant(&target, c.clone());
            for (j, &e) in m.exps.iter().enumerate() {
                if e > 0 {
                    prod = &prod * &powers[j][e as usize];
                }
            }
            out = &out + &prod;
        }
        out
    }

    /// Sets the listed variables to zero, staying in the same space: terms
    /// that mention any of them are dropped.
    pub fn set_zero(&self, vars: &[usize]) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| vars.iter().all(|&v| m.exps[v] == 0))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Polynomial {
            weights: self.weights.clone(),
            terms,
        }
    }

    /// Re-indexes the variables into a larger space: variable `j` becomes
    /// variable `var_map[j]` of the space described by `new_weights`.
    ///
    /// The map must be injective and weight-preserving; panics otherwise.
    pub fn embed(&self, new_weights: &[u32], var_map: &[usize]) -> Polynomial {
        assert_eq!(var_map.len(), self.weights.len());
        for (j, &t) in var_map.iter().enumerate() {
            assert!(t < new_weights.len(), "target variable {t} out of range");
            assert_eq!(
                new_weights[t], self.weights[j],
                "embedding must preserve variable weights"
            );
        }
        let mut out = Polynomial::zero(new_weights);
        for (m, c) in &self.terms {
            let mut exps = vec![0u32; new_weights.len()];
            for (j, &e) in m.exps.iter().enumerate() {
                assert_eq!(exps[var_map[j]], 0, "variable map must be injective");
                exps[var_map[j]] = e;
            }
            out.add_term(Monomial::new(new_weights, exps), c.clone());
        }
        out
    }

    /// The common weighted degree of all terms, or `None` when the
    /// polynomial is zero or inhomogeneous.
    pub fn weighted_degree(&self) -> Option<u64> {
        let mut iter = self.terms.keys();
        let first = iter.next()?.wdeg;
        iter.all(|m| m.wdeg == first).then_some(first)
    }

    /// Whether every term has weighted degree `l`. The zero polynomial is
    /// homogeneous of every degree.
    pub fn is_weighted_homogeneous(&self, l: u64) -> bool {
        self.terms.keys().all(|m| m.wdeg == l)
    }

    /// The largest weighted degree among the terms, `None` for zero.
    pub fn max_weighted_degree(&self) -> Option<u64> {
        self.terms.keys().map(|m| m.wdeg).max()
    }

    /// Keeps only the terms of weighted degree at most `l`.
    pub fn truncate_above(&self, l: u64) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.wdeg <= l)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Polynomial {
            weights: self.weights.clone(),
            terms,
        }
    }

    /// Extracts the part of weighted degree exactly `l`.
    pub fn component_of_weight(&self, l: u64) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.wdeg == l)
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Polynomial {
            weights: self.weights.clone(),
            terms,
        }
    }

    /// The exact formal partial derivative with respect to variable `j`.
    ///
    /// Panics when `j` is out of range.
    pub fn partial_derivative(&self, j: usize) -> Polynomial {
        assert!(j < self.weights.len(), "variable {j} out of range");
        let mut out = Polynomial::zero(&self.weights);
        for (m, c) in &self.terms {
            let e = m.exps[j];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[j] -= 1;
            let dm = Monomial {
                wdeg: m.wdeg - u64::from(self.weights[j]),
                exps,
            };
            out.add_term(dm, c * Rational::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Evaluates at a floating-point point. Panics on a length mismatch.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.weights.len());
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut prod = c.to_f64().expect("rational representable as f64");
            for (j, &e) in m.exps.iter().enumerate() {
                match e {
                    0 => {}
                    1 => prod *= point[j],
                    _ => prod *= point[j].powi(e as i32),
                }
            }
            acc += prod;
        }
        acc
    }

    /// Evaluates exactly at a rational point. Panics on a length mismatch.
    pub fn evaluate_rational(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.weights.len());
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut prod = c.clone();
            for (j, &e) in m.exps.iter().enumerate() {
                for _ in 0..e {
                    prod *= &point[j];
                }
            }
            acc += prod;
        }
        acc
    }

    /// Lowers the polynomial to floating-point coefficients for repeated
    /// evaluation on hot paths.
    pub fn compile(&self) -> CompiledPoly {
        let nvars = self.weights.len();
        let mut coeffs = Vec::with_capacity(self.terms.len());
        let mut exps = Vec::with_capacity(self.terms.len() * nvars);
        for (m, c) in &self.terms {
            coeffs.push(c.to_f64().expect("rational representable as f64"));
            exps.extend_from_slice(&m.exps);
        }
        CompiledPoly { nvars, coeffs, exps }
    }

    /// Formats with caller-chosen variable names.
    pub fn display_with<'a>(
        &'a self,
        namer: &'a dyn Fn(usize) -> String,
    ) -> impl fmt::Display + 'a {
        DisplayWith { poly: self, namer }
    }
}

struct DisplayWith<'a> {
    poly: &'a Polynomial,
    namer: &'a dyn Fn(usize) -> String,
}

impl fmt::Display for DisplayWith<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.poly.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else if negative {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let abs = c.abs();
            let coeff_is_one = abs.is_one();
            if !coeff_is_one || m.is_constant() {
                if abs.denom().is_one() {
                    write!(f, "{}", abs.numer())?;
                } else {
                    write!(f, "{}/{}", abs.numer(), abs.denom())?;
                }
                if !m.is_constant() {
                    write!(f, "*")?;
                }
            }
            let mut first_factor = true;
            for (j, &e) in m.exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !first_factor {
                    write!(f, "*")?;
                }
                first_factor = false;
                write!(f, "{}", (self.namer)(j))?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn default_name(j: usize) -> String {
            format!("x{}", j + 1)
        }
        fmt::Display::fmt(&DisplayWith { poly: self, namer: &default_name }, f)
    }
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_space(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_space(rhs);
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), -c.clone()))
            .collect();
        Polynomial {
            weights: self.weights.clone(),
            terms,
        }
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.assert_same_space(rhs);
        let mut out = Polynomial::zero(&self.weights);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let exps: Vec<u32> = ma
                    .exps
                    .iter()
                    .zip(&mb.exps)
                    .map(|(&a, &b)| a + b)
                    .collect();
                let m = Monomial {
                    wdeg: ma.wdeg + mb.wdeg,
                    exps,
                };
                out.add_term(m, ca * cb);
            }
        }
        out
    }
}

impl std::ops::Add for Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: Polynomial) -> Polynomial {
        &self + &rhs
    }
}

impl std::ops::Sub for Polynomial {
    type Output = Polynomial;

    fn sub(self, rhs: Polynomial) -> Polynomial {
        &self - &rhs
    }
}

impl std::ops::Mul for Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: Polynomial) -> Polynomial {
        &self * &rhs
    }
}

impl std::ops::Neg for Polynomial {
    type Output = Polynomial;

    fn neg(self) -> Polynomial {
        -&self
    }
}

/// A polynomial lowered to `f64` coefficients with a flat exponent table,
/// for tight evaluation loops.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    coeffs: Vec<f64>,
    exps: Vec<u32>,
}

impl CompiledPoly {
    /// Number of variables expected by [`CompiledPoly::evaluate`].
    pub fn variable_count(&self) -> usize {
        self.nvars
    }

    /// Evaluates at `point`. Panics on a length mismatch.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        let mut acc = 0.0;
        for (t, &c) in self.coeffs.iter().enumerate() {
            let mut prod = c;
            let row = &self.exps[t * self.nvars..(t + 1) * self.nvars];
            for (j, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 => prod *= point[j],
                    _ => prod *= point[j].powi(e as i32),
                }
            }
            acc += prod;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn var(weights: &[u32], j: usize) -> Polynomial {
        Polynomial::variable(weights, j)
    }

    #[test]
    fn additive_inverse_cancels() {
        let w = [1, 1];
        let x1 = var(&w, 0);
        let sum = &x1 + &(-&x1);
        assert!(sum.is_zero());
        assert_eq!(sum, Polynomial::zero(&w));
    }

    #[test]
    fn product_of_variables() {
        let w = [1, 1];
        let p = &var(&w, 0) * &var(&w, 1);
        assert_eq!(p, Polynomial::monomial(&w, &[1, 1], rat(1, 1)));
    }

    #[test]
    fn difference_of_squares() {
        let w = [1, 1];
        let x1 = var(&w, 0);
        let x2 = var(&w, 1);
        let lhs = &(&x1 + &x2) * &(&x1 - &x2);
        let rhs = &(&x1 * &x1) - &(&x2 * &x2);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitute_shift() {
        let w = [1];
        let x1 = var(&w, 0);
        let p = &x1 * &x1;
        let shifted = p.substitute(&[&x1 + &Polynomial::one(&w)]);
        let expected = &(&p + &x1.scale(&rat(2, 1))) + &Polynomial::one(&w);
        assert_eq!(shifted, expected);
    }

    #[test]
    fn substitute_identity_and_swap() {
        let w = [1, 2];
        let p = &var(&w, 0) * &var(&w, 1);
        let id = [var(&w, 0), var(&w, 1)];
        assert_eq!(p.substitute(&id), p);
        let swapped = p.substitute(&[var(&w, 1), var(&w, 0)]);
        assert_eq!(swapped, p);
    }

    #[test]
    fn weighted_degrees() {
        let w = [1, 1, 2];
        let x1x2 = &var(&w, 0) * &var(&w, 1);
        let p = &x1x2 + &var(&w, 2);
        assert!(p.is_weighted_homogeneous(2));
        assert_eq!(p.weighted_degree(), Some(2));

        let q = &var(&w, 0) + &var(&w, 2);
        assert_eq!(q.weighted_degree(), None);
        assert!(!q.is_weighted_homogeneous(1));

        let engel = [1, 1, 2, 3];
        let x1 = var(&engel, 0);
        let r = &(&(&x1 * &x1) * &var(&engel, 1)) - &var(&engel, 3);
        assert_eq!(r.weighted_degree(), Some(3));

        assert_eq!(Polynomial::zero(&w).weighted_degree(), None);
        assert!(Polynomial::zero(&w).is_weighted_homogeneous(5));
    }

    #[test]
    fn partial_derivatives() {
        let w = [1, 1];
        let x1 = var(&w, 0);
        let x2 = var(&w, 1);
        let p = &(&x1 * &x1) * &x2;
        let dp = p.partial_derivative(0);
        assert_eq!(dp, (&x1 * &x2).scale(&rat(2, 1)));
        assert!(x1.partial_derivative(1).is_zero());
    }

    #[test]
    fn evaluate_half_square() {
        let w = [1];
        let p = (&var(&w, 0) * &var(&w, 0)).scale(&rat(1, 2));
        assert_eq!(p.evaluate(&[3.0]), 4.5);
        assert_eq!(p.compile().evaluate(&[3.0]), 4.5);
        assert_eq!(p.evaluate_rational(&[rat(3, 1)]), rat(9, 2));
    }

    #[test]
    fn degree_filters() {
        let w = [1, 2];
        let x1 = var(&w, 0);
        let x2 = var(&w, 1);
        let p = &(&x1 + &x2) + &(&x1 * &x2);
        assert_eq!(p.max_weighted_degree(), Some(3));
        assert_eq!(p.truncate_above(2), &x1 + &x2);
        assert_eq!(p.component_of_weight(2), x2);
        assert_eq!(p.component_of_weight(5), Polynomial::zero(&w));
    }

    #[test]
    fn embed_preserves_structure() {
        let w = [1, 2];
        let big = [1, 1, 2, 2];
        let p = &var(&w, 0) * &var(&w, 1);
        let q = p.embed(&big, &[1, 3]);
        assert_eq!(q, &var(&big, 1) * &var(&big, 3));
    }

    #[test]
    fn display_canonical_form() {
        let w = [1, 1, 2];
        let p = &(&var(&w, 2) - &(&var(&w, 0) * &var(&w, 1)).scale(&rat(1, 2)))
            + &Polynomial::constant(&w, rat(-3, 1));
        assert_eq!(p.to_string(), "-1/2*x1*x2 + x3 - 3");
        assert_eq!(Polynomial::zero(&w).to_string(), "0");
        let sq = (&var(&w, 0) * &var(&w, 0)).scale(&rat(1, 12));
        assert_eq!(sq.to_string(), "1/12*x1^2");
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-20i64..=20, 1i64..=9).prop_map(|(n, d)| rat(n, d))
    }

    fn small_poly(weights: &'static [u32]) -> impl Strategy<Value = Polynomial> {
        let exps = proptest::collection::vec(0u32..=2, weights.len());
        proptest::collection::vec((exps, small_rational()), 0..5).prop_map(move |terms| {
            let mut p = Polynomial::zero(weights);
            for (e, c) in terms {
                p = &p + &Polynomial::monomial(weights, &e, c);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(
            a in small_poly(&[1, 2, 3]),
            b in small_poly(&[1, 2, 3]),
            c in small_poly(&[1, 2, 3]),
        ) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a - &a, Polynomial::zero(&[1, 2, 3]));
        }

        #[test]
        fn evaluation_is_a_homomorphism(
            a in small_poly(&[1, 2, 3]),
            b in small_poly(&[1, 2, 3]),
            x in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let lhs = (&a * &b).evaluate(&x);
            let rhs = a.evaluate(&x) * b.evaluate(&x);
            let scale = 1.0f64.max(lhs.abs()).max(rhs.abs());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
        }

        #[test]
        fn substitution_chain_rule(
            p in small_poly(&[1, 1]),
            g1 in small_poly(&[1, 2]),
            g2 in small_poly(&[1, 2]),
        ) {
            let g = [g1.clone(), g2.clone()];
            let composed = p.substitute(&g);
            for u in 0..2 {
                let direct = composed.partial_derivative(u);
                let chained = &(&p.partial_derivative(0).substitute(&g)
                    * &g1.partial_derivative(u))
                    + &(&p.partial_derivative(1).substitute(&g) * &g2.partial_derivative(u));
                prop_assert_eq!(direct, chained);
            }
        }

        #[test]
        fn compiled_matches_exact(
            a in small_poly(&[1, 2, 3]),
            x in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let lhs = a.compile().evaluate(&x);
            let rhs = a.evaluate(&x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * 1.0f64.max(rhs.abs()));
        }
    }
}
