//! Built-in groups and worked example submanifolds, together with their
//! expected facts in machine-checkable form.
//!
//! The entries serve as the oracle layer: every closed-form coefficient,
//! degree, and density stored here was derived by hand from the group law
//! and the explicit parametrizations, so the generic machinery can be
//! validated against them. [`check_expectations`] runs the whole table for
//! one entry and reports each fact separately.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::algebra::{AlgebraError, BracketRule, StratifiedAlgebra};
use crate::expr::Expr;
use crate::group::GroupLaw;
use crate::manifold::{ManifoldError, Submanifold};
use crate::measure::{intrinsic_density, MeasureError};
use crate::multivec::PVector;
use crate::poly::{rat, Polynomial};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("no catalog entry named {name:?}")]
    UnknownEntry { name: String },
    #[error("entry {entry:?} has no submanifold named {name:?}")]
    UnknownManifold { entry: String, name: String },
    #[error("the operation is specific to the Engel group")]
    NotEngel,
    #[error("expected a {expected}, got a {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("expression error in expected fact: {0}")]
    BadExpression(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// A submanifold of a catalog group, stored as parseable component
/// expressions in exponential coordinates, with its expected facts.
#[derive(Clone, Debug)]
pub struct NamedSubmanifold {
    name: String,
    parameters: Vec<String>,
    components: Vec<String>,
    domain: Vec<(f64, f64)>,
    expected: Vec<Expectation>,
}

impl NamedSubmanifold {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    /// Component expressions in exponential coordinates.
    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn expected(&self) -> &[Expectation] {
        &self.expected
    }

    /// Parses and validates the submanifold over the given law.
    pub fn build(&self, law: Arc<GroupLaw>) -> Result<Submanifold, CatalogError> {
        let parameters: Vec<&str> = self.parameters.iter().map(|s| s.as_str()).collect();
        let components: Vec<&str> = self.components.iter().map(|s| s.as_str()).collect();
        Ok(Submanifold::parse(
            law,
            &parameters,
            &self.domain,
            &components,
        )?)
    }
}

/// One expected fact about a named submanifold: a statement of the fact, a
/// note on where the expected value comes from, and the checkable content.
#[derive(Clone, Debug)]
pub struct Expectation {
    pub statement: String,
    pub source: String,
    pub fact: Fact,
}

/// The machine-checkable content of an [`Expectation`]. Expressions are in
/// the submanifold's parameters.
#[derive(Clone, Debug)]
pub enum Fact {
    /// The pointwise degree equals `degree` at every grid sample.
    ConstantDegree {
        resolution: Vec<usize>,
        degree: u64,
        tolerance: f64,
    },
    /// The unnormalized tangent wedge has exactly these frame coefficients;
    /// index sets are ascending and 0-based, missing sets mean zero.
    FrameWedge {
        coefficients: Vec<(Vec<usize>, String)>,
        resolution: Vec<usize>,
        tolerance: f64,
    },
    /// The generic tangent wedge agrees with the closed-form minor
    /// expansion of [`engel_wedge`] at every grid sample.
    ClosedFormAgreement {
        resolution: Vec<usize>,
        tolerance: f64,
    },
    /// The intrinsic density at the stated degree equals the expression.
    IntrinsicDensity {
        degree: u64,
        expression: String,
        resolution: Vec<usize>,
        tolerance: f64,
    },
    /// Specific parameter points classified by pointwise degree.
    StrataSamples {
        samples: Vec<(Vec<f64>, u64)>,
        tolerance: f64,
    },
    /// The three top-degree coefficients of [`degree3_system`] at one
    /// sample equal the stated values.
    SystemResidual {
        sample: Vec<f64>,
        expected: [f64; 3],
        tolerance: f64,
    },
    /// The gradient identity of [`degree3_system`] holds at every grid
    /// sample (the first component must be the first parameter).
    GradientIdentity {
        resolution: Vec<usize>,
        tolerance: f64,
    },
}

/// The outcome of checking one expectation.
#[derive(Clone, Debug)]
pub struct ExpectationOutcome {
    pub manifold: String,
    pub statement: String,
    pub source: String,
    pub passed: bool,
    pub detail: String,
}

/// A built-in group together with its worked example submanifolds.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    name: String,
    algebra: StratifiedAlgebra,
    submanifolds: Vec<NamedSubmanifold>,
}

impl CatalogEntry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &StratifiedAlgebra {
        &self.algebra
    }

    /// Builds the group law. The construction is exact, so the result can
    /// be shared freely.
    pub fn law(&self) -> Arc<GroupLaw> {
        Arc::new(GroupLaw::new(self.algebra.clone()))
    }

    pub fn submanifolds(&self) -> &[NamedSubmanifold] {
        &self.submanifolds
    }

    pub fn submanifold(&self, name: &str) -> Result<&NamedSubmanifold, CatalogError> {
        self.submanifolds
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| CatalogError::UnknownManifold {
                entry: self.name.clone(),
                name: name.to_string(),
            })
    }

    /// Parses and validates one named submanifold.
    pub fn build(&self, name: &str) -> Result<Submanifold, CatalogError> {
        self.submanifold(name)?.build(self.law())
    }
}

/// The Heisenberg group H^n: layers (2n, 1) with [X_i, X_{n+i}] = X_{2n+1}.
pub fn heisenberg(n: usize) -> CatalogEntry {
    assert!(n >= 1, "heisenberg(n) needs n >= 1");
    let brackets: Vec<BracketRule> = (0..n)
        .map(|i| BracketRule::single(i, n + i, 2 * n, 1))
        .collect();
    let algebra = StratifiedAlgebra::new(&[2 * n, 1], &brackets)
        .expect("the Heisenberg bracket table is consistent");
    CatalogEntry {
        name: format!("heisenberg{n}"),
        algebra,
        submanifolds: Vec::new(),
    }
}

fn engel_algebra() -> StratifiedAlgebra {
    StratifiedAlgebra::new(
        &[2, 1, 1],
        &[
            BracketRule::single(0, 1, 2, 1),
            BracketRule::single(0, 2, 3, 1),
        ],
    )
    .expect("the Engel bracket table is consistent")
}

/// The filiform group of step 4 on five generators of weights (1,1,2,3,4):
/// [X₁,X₂] = X₃, [X₁,X₃] = X₄, [X₁,X₄] = X₅.
pub fn e5() -> CatalogEntry {
    let algebra = StratifiedAlgebra::new(
        &[2, 1, 1, 1],
        &[
            BracketRule::single(0, 1, 2, 1),
            BracketRule::single(0, 2, 3, 1),
            BracketRule::single(0, 3, 4, 1),
        ],
    )
    .expect("the step-4 filiform bracket table is consistent");
    CatalogEntry {
        name: "e5".to_string(),
        algebra,
        submanifolds: Vec::new(),
    }
}

/// The Engel group with the worked example submanifolds and their expected
/// facts.
pub fn engel4() -> CatalogEntry {
    let s3 = 3.0_f64.sqrt();
    let submanifolds = vec![
        NamedSubmanifold {
            name: "trivial-plane".to_string(),
            parameters: vec!["x".to_string(), "y".to_string()],
            components: vec![
                "0".to_string(),
                "x".to_string(),
                "y".to_string(),
                "0".to_string(),
            ],
            domain: vec![(-2.0, 2.0), (-2.0, 2.0)],
            expected: vec![
                Expectation {
                    statement: "the vertical plane has degree 3 everywhere".to_string(),
                    source: "its tangent frame is X2, X3 at every point".to_string(),
                    fact: Fact::ConstantDegree {
                        resolution: vec![7, 7],
                        degree: 3,
                        tolerance: 1e-9,
                    },
                },
                Expectation {
                    statement: "the tangent wedge is X2^X3".to_string(),
                    source: "direct differentiation of the parametrization".to_string(),
                    fact: Fact::FrameWedge {
                        coefficients: vec![(vec![1, 2], "1".to_string())],
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "the top-degree density is identically 1".to_string(),
                    source: "the wedge is a unit frame bivector".to_string(),
                    fact: Fact::IntrinsicDensity {
                        degree: 3,
                        expression: "1".to_string(),
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
            ],
        },
        NamedSubmanifold {
            name: "deg3-exp".to_string(),
            parameters: vec!["x".to_string(), "y".to_string()],
            components: vec![
                "x".to_string(),
                "x + exp(y)".to_string(),
                "x*exp(y)/2".to_string(),
                "x^2*exp(y)/12".to_string(),
            ],
            domain: vec![(-2.0, 2.0), (-2.0, 2.0)],
            expected: vec![
                Expectation {
                    statement: "the exponential embedding has degree 3 everywhere".to_string(),
                    source: "the degree-4 wedge coefficients cancel identically".to_string(),
                    fact: Fact::ConstantDegree {
                        resolution: vec![7, 7],
                        degree: 3,
                        tolerance: 1e-9,
                    },
                },
                Expectation {
                    statement: "the tangent wedge is exp(y) X1^X2 - exp(2y) X2^X3".to_string(),
                    source: "hand expansion of the chart-change minors".to_string(),
                    fact: Fact::FrameWedge {
                        coefficients: vec![
                            (vec![0, 1], "exp(y)".to_string()),
                            (vec![1, 2], "-exp(2*y)".to_string()),
                        ],
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "the closed-form minor expansion matches the generic wedge"
                        .to_string(),
                    source: "two independent computations of the same bivector".to_string(),
                    fact: Fact::ClosedFormAgreement {
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "the degree-3 density is exp(2y)".to_string(),
                    source: "the norm of the degree-3 part of the wedge".to_string(),
                    fact: Fact::IntrinsicDensity {
                        degree: 3,
                        expression: "exp(2*y)".to_string(),
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "grad(F4) = -(F1^2/2) grad(F2) + F1 grad(F3) in the second-kind chart"
                        .to_string(),
                    source: "the construction solves this identity by design".to_string(),
                    fact: Fact::GradientIdentity {
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
            ],
        },
        NamedSubmanifold {
            name: "deg4-parabola".to_string(),
            parameters: vec!["x".to_string(), "y".to_string()],
            components: vec![
                "x".to_string(),
                "y".to_string(),
                "y^2/2 - x*y/2".to_string(),
                "y^2/2 - x*y^2/4 + x^2*y/12".to_string(),
            ],
            domain: vec![(-4.0, 6.0), (-4.0, 6.0)],
            expected: vec![
                Expectation {
                    statement: "the tangent wedge is X1^X2 + (y-x) X1^X3 + (y-xy+x^2/2) X1^X4"
                        .to_string(),
                    source: "hand expansion of the chart-change minors".to_string(),
                    fact: Fact::FrameWedge {
                        coefficients: vec![
                            (vec![0, 1], "1".to_string()),
                            (vec![0, 2], "y - x".to_string()),
                            (vec![0, 3], "y - x*y + x^2/2".to_string()),
                        ],
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "the closed-form minor expansion matches the generic wedge"
                        .to_string(),
                    source: "two independent computations of the same bivector".to_string(),
                    fact: Fact::ClosedFormAgreement {
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "degree is 4 off the exceptional sets, 3 on the two curves \
                                x = y +- sqrt(y^2-2y), and 2 at (0,0) and (2,2)"
                        .to_string(),
                    source: "vanishing pattern of the wedge coefficients".to_string(),
                    fact: Fact::StrataSamples {
                        samples: vec![
                            (vec![1.0, 1.0], 4),
                            (vec![3.0, 3.0], 4),
                            (vec![-1.0, -1.0], 4),
                            (vec![0.5, 1.25], 4),
                            (vec![3.0 + s3, 3.0], 3),
                            (vec![3.0 - s3, 3.0], 3),
                            (vec![-1.0 + s3, -1.0], 3),
                            (vec![-1.0 - s3, -1.0], 3),
                            (vec![0.0, 0.0], 2),
                            (vec![2.0, 2.0], 2),
                        ],
                        tolerance: 1e-9,
                    },
                },
                Expectation {
                    statement: "the third first-order condition equals 1/2 at (1,1)".to_string(),
                    source: "substitution into the minors".to_string(),
                    fact: Fact::SystemResidual {
                        sample: vec![1.0, 1.0],
                        expected: [0.0, 0.0, 0.5],
                        tolerance: 1e-12,
                    },
                },
            ],
        },
        NamedSubmanifold {
            name: "deg5-vertical".to_string(),
            parameters: vec!["x".to_string(), "y".to_string()],
            components: vec![
                "0".to_string(),
                "x + y".to_string(),
                "x".to_string(),
                "y".to_string(),
            ],
            domain: vec![(-2.0, 2.0), (-2.0, 2.0)],
            expected: vec![
                Expectation {
                    statement: "the vertical slab has degree 5 everywhere".to_string(),
                    source: "its X3^X4 coefficient is the constant 1".to_string(),
                    fact: Fact::ConstantDegree {
                        resolution: vec![7, 7],
                        degree: 5,
                        tolerance: 1e-9,
                    },
                },
                Expectation {
                    statement: "the tangent wedge is -X2^X3 + X2^X4 + X3^X4".to_string(),
                    source: "direct differentiation of the parametrization".to_string(),
                    fact: Fact::FrameWedge {
                        coefficients: vec![
                            (vec![1, 2], "-1".to_string()),
                            (vec![1, 3], "1".to_string()),
                            (vec![2, 3], "1".to_string()),
                        ],
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
                Expectation {
                    statement: "the closed-form minor expansion matches the generic wedge"
                        .to_string(),
                    source: "two independent computations of the same bivector".to_string(),
                    fact: Fact::ClosedFormAgreement {
                        resolution: vec![5, 5],
                        tolerance: 1e-12,
                    },
                },
            ],
        },
        sigma3_curve(1),
        sigma3_curve(-1),
    ];
    CatalogEntry {
        name: "engel4".to_string(),
        algebra: engel_algebra(),
        submanifolds,
    }
}

/// One of the two degree-3 stratum curves of the parabola example,
/// x = y + sigma*sqrt(y^2-2y), as a one-parameter submanifold.
fn sigma3_curve(sigma: i32) -> NamedSubmanifold {
    let (sign, name) = if sigma >= 0 {
        ("+", "deg4-sigma3-plus")
    } else {
        ("-", "deg4-sigma3-minus")
    };
    let x = format!("(y {sign} sqrt(y^2 - 2*y))");
    NamedSubmanifold {
        name: name.to_string(),
        parameters: vec!["y".to_string()],
        components: vec![
            x.clone(),
            "y".to_string(),
            format!("y^2/2 - {x}*y/2"),
            format!("y^2/2 - {x}*y^2/4 + {x}*{x}*y/12"),
        ],
        domain: vec![(2.2, 5.0)],
        expected: vec![
            Expectation {
                statement: "the stratum curve has degree 2 everywhere".to_string(),
                source: "its velocity stops at the X3 slot".to_string(),
                fact: Fact::ConstantDegree {
                    resolution: vec![9],
                    degree: 2,
                    tolerance: 1e-9,
                },
            },
            Expectation {
                statement: format!(
                    "the velocity has no X4 component and X3 component {}sqrt(y^2-2y)",
                    if sigma >= 0 { "-" } else { "" }
                ),
                source: "the curve solves the top coefficient equation exactly".to_string(),
                fact: Fact::FrameWedge {
                    coefficients: vec![
                        (
                            vec![0],
                            format!("1 {sign} (y - 1)/sqrt(y^2 - 2*y)"),
                        ),
                        (vec![1], "1".to_string()),
                        (
                            vec![2],
                            if sigma >= 0 {
                                "-sqrt(y^2 - 2*y)".to_string()
                            } else {
                                "sqrt(y^2 - 2*y)".to_string()
                            },
                        ),
                    ],
                    resolution: vec![9],
                    tolerance: 1e-10,
                },
            },
            Expectation {
                statement: "the degree-2 arc density is sqrt(y^2-2y)".to_string(),
                source: "the norm of the X3 part of the velocity".to_string(),
                fact: Fact::IntrinsicDensity {
                    degree: 2,
                    expression: "sqrt(y^2 - 2*y)".to_string(),
                    resolution: vec![9],
                    tolerance: 1e-10,
                },
            },
        ],
    }
}

/// All built-in entries with their default parameters.
pub fn entries() -> Vec<CatalogEntry> {
    vec![heisenberg(1), engel4(), e5()]
}

/// Looks up an entry by name: `heisenberg<N>` (plain `heisenberg` means
/// n = 1), `engel4`, or `e5`.
pub fn entry(name: &str) -> Result<CatalogEntry, CatalogError> {
    match name {
        "engel4" => return Ok(engel4()),
        "e5" => return Ok(e5()),
        _ => {}
    }
    if let Some(rest) = name.strip_prefix("heisenberg") {
        let n = if rest.is_empty() {
            Some(1)
        } else {
            rest.parse::<usize>().ok().filter(|&n| (1..=64).contains(&n))
        };
        if let Some(n) = n {
            return Ok(heisenberg(n));
        }
    }
    Err(CatalogError::UnknownEntry {
        name: name.to_string(),
    })
}

/// Whether the algebra is the Engel algebra: layers (2,1,1) with
/// [X₁,X₂] = X₃, [X₁,X₃] = X₄ and all other basis brackets zero.
pub fn is_engel(algebra: &StratifiedAlgebra) -> bool {
    if algebra.grading().layer_dims() != [2, 1, 1] {
        return false;
    }
    let expect = |i: usize, j: usize, k: Option<usize>| -> bool {
        let coeffs = algebra.bracket_basis(i, j);
        coeffs.iter().enumerate().all(|(l, c)| match k {
            Some(k) if l == k => *c == rat(1, 1),
            _ => *c == rat(0, 1),
        })
    };
    expect(0, 1, Some(2))
        && expect(0, 2, Some(3))
        && expect(0, 3, None)
        && expect(1, 2, None)
        && expect(1, 3, None)
        && expect(2, 3, None)
}

/// The tangent wedge of an Engel surface from the 2x2 minors of its
/// Jacobian in the second-kind chart, where the frame matrix depends on
/// the first coordinate alone. `jacobian` is the 4x2 matrix of chart
/// partials and `phi1` the first component value.
pub fn engel_wedge_closed_form(
    algebra: &StratifiedAlgebra,
    jacobian: &DMatrix<f64>,
    phi1: f64,
) -> Result<PVector, CatalogError> {
    if !is_engel(algebra) {
        return Err(CatalogError::NotEngel);
    }
    if jacobian.nrows() != 4 || jacobian.ncols() != 2 {
        return Err(CatalogError::ParameterCount {
            expected: 2,
            got: jacobian.ncols(),
        });
    }
    let minor = |i: usize, j: usize| {
        jacobian[(i, 0)] * jacobian[(j, 1)] - jacobian[(i, 1)] * jacobian[(j, 0)]
    };
    let half_sq = phi1 * phi1 / 2.0;
    let coefficients = [
        (0, 1, minor(0, 1)),
        (1, 2, minor(1, 2)),
        (0, 2, minor(0, 2) - phi1 * minor(0, 1)),
        (0, 3, minor(0, 3) - phi1 * minor(0, 2) + half_sq * minor(0, 1)),
        (1, 3, minor(1, 3) - phi1 * minor(1, 2)),
        (2, 3, minor(2, 3) + half_sq * minor(1, 2) - phi1 * minor(1, 3)),
    ];
    let grading = algebra.grading().clone();
    let mut wedge = PVector::zero(grading.clone(), 2);
    for (i, j, c) in coefficients {
        if c != 0.0 {
            wedge = wedge.add(&PVector::basis(grading.clone(), &[i, j]).scale(c));
        }
    }
    Ok(wedge)
}

/// Second-kind chart data of an Engel surface at a parameter: the chart
/// value of Φ, its 4x2 chart Jacobian, and the first component.
fn second_kind_data(
    m: &Submanifold,
    u: &[f64],
) -> Result<(Vec<f64>, DMatrix<f64>, f64), CatalogError> {
    if !is_engel(m.law().algebra()) {
        return Err(CatalogError::NotEngel);
    }
    if m.parameter_count() != 2 {
        return Err(CatalogError::ParameterCount {
            expected: 2,
            got: m.parameter_count(),
        });
    }
    let (x, jac) = m.jacobian(u)?;
    let chart = m.law().second_kind_chart();
    let from = chart.from_exponential();
    let q = x.len();
    let mut value = vec![0.0; q];
    let mut d = DMatrix::zeros(q, q);
    for i in 0..q {
        value[i] = from[i].evaluate(&x);
        for j in 0..q {
            d[(i, j)] = from[i].partial_derivative(j).evaluate(&x);
        }
    }
    let jac_chart = d * jac;
    let phi1 = value[0];
    Ok((value, jac_chart, phi1))
}

/// The closed-form tangent wedge of an Engel surface at a parameter,
/// computed through the second-kind chart. Equals the generic tangent
/// wedge (area factor times unit tangent) up to roundoff.
pub fn engel_wedge(m: &Submanifold, u: &[f64]) -> Result<PVector, CatalogError> {
    let (_, jac_chart, phi1) = second_kind_data(m, u)?;
    engel_wedge_closed_form(m.law().algebra(), &jac_chart, phi1)
}

/// Residuals of the first-order degree-3 system of an Engel surface.
#[derive(Clone, Debug)]
pub struct Degree3Report {
    /// Frame coefficients of X3^X4, X2^X4, X1^X4: all three vanish exactly
    /// when the point has degree at most 3.
    pub residuals: [f64; 3],
    /// Sup-norm residual of grad(F4) = -(F1^2/2) grad(F2) + F1 grad(F3) in
    /// the second-kind chart; only defined when the first chart component
    /// is the first parameter.
    pub gradient_residual: Option<f64>,
}

/// Evaluates the degree-3 system at one parameter of an Engel surface.
pub fn degree3_system(m: &Submanifold, u: &[f64]) -> Result<Degree3Report, CatalogError> {
    let (value, jac_chart, phi1) = second_kind_data(m, u)?;
    let wedge = engel_wedge_closed_form(m.law().algebra(), &jac_chart, phi1)?;
    let residuals = [
        wedge.coefficient(&[2, 3]),
        wedge.coefficient(&[1, 3]),
        wedge.coefficient(&[0, 3]),
    ];
    let is_graph_over_first = (value[0] - u[0]).abs() <= 1e-12
        && (jac_chart[(0, 0)] - 1.0).abs() <= 1e-12
        && jac_chart[(0, 1)].abs() <= 1e-12;
    let gradient_residual = if is_graph_over_first {
        let g = |col: usize| {
            jac_chart[(3, col)] + phi1 * phi1 / 2.0 * jac_chart[(1, col)]
                - phi1 * jac_chart[(2, col)]
        };
        Some(g(0).abs().max(g(1).abs()))
    } else {
        None
    };
    Ok(Degree3Report {
        residuals,
        gradient_residual,
    })
}

/// Grid samples partitioned by pointwise degree.
#[derive(Clone, Debug)]
pub struct StrataReport {
    pub strata: BTreeMap<u64, Vec<Vec<f64>>>,
    pub near_degenerate: usize,
}

/// Classifies the given parameter samples by pointwise degree. Samples on
/// stratum boundaries should be excluded by the caller; the
/// `near_degenerate` count flags how many fell in the ambiguity band.
pub fn strata_classification(
    m: &Submanifold,
    grid: &[Vec<f64>],
    tolerance: f64,
) -> Result<StrataReport, CatalogError> {
    let mut strata: BTreeMap<u64, Vec<Vec<f64>>> = BTreeMap::new();
    let mut near_degenerate = 0;
    for u in grid {
        let data = m.tangent_pvector_with_tolerance(u, tolerance)?;
        if data.near_degenerate {
            near_degenerate += 1;
        }
        strata.entry(data.point_degree).or_default().push(u.clone());
    }
    Ok(StrataReport {
        strata,
        near_degenerate,
    })
}

/// A random polynomial surface over the law: every component a polynomial
/// of the given total degree with coefficients in [-1, 1], resampled until
/// the immersion check passes.
pub fn random_polynomial_submanifold(
    law: Arc<GroupLaw>,
    max_degree: u32,
    rng: &mut impl Rng,
) -> Result<Submanifold, CatalogError> {
    let q = law.dimension();
    let weights = vec![1u32; 2];
    for _ in 0..32 {
        let mut components = Vec::with_capacity(q);
        for _ in 0..q {
            let mut poly = Polynomial::zero(&weights);
            for a in 0..=max_degree {
                for b in 0..=(max_degree - a) {
                    let c = rng.gen_range(-1000..=1000);
                    poly = &poly + &Polynomial::monomial(&weights, &[a, b], rat(c, 1000));
                }
            }
            components.push(Expr::from_polynomial(&poly, &["x", "y"]));
        }
        match Submanifold::new(
            Arc::clone(&law),
            &["x", "y"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            components,
        ) {
            Ok(m) => return Ok(m),
            Err(ManifoldError::ImmersionCheck { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    unreachable!("random coefficients keep failing the immersion check")
}

/// Runs every stored expectation of the entry and reports each outcome.
pub fn check_expectations(entry: &CatalogEntry) -> Result<Vec<ExpectationOutcome>, CatalogError> {
    let law = entry.law();
    let mut outcomes = Vec::new();
    for named in &entry.submanifolds {
        let m = named.build(Arc::clone(&law))?;
        for expectation in &named.expected {
            let (passed, detail) = check_fact(&m, &expectation.fact)?;
            outcomes.push(ExpectationOutcome {
                manifold: named.name.clone(),
                statement: expectation.statement.clone(),
                source: expectation.source.clone(),
                passed,
                detail,
            });
        }
    }
    Ok(outcomes)
}

fn parse_fact_expr(text: &str) -> Result<Expr, CatalogError> {
    Expr::parse(text).map_err(|e| CatalogError::BadExpression(format!("{text:?}: {e}")))
}

fn eval_fact_expr(expr: &Expr, m: &Submanifold, u: &[f64]) -> Result<f64, CatalogError> {
    let env: Vec<(&str, f64)> = m
        .parameters()
        .iter()
        .map(|s| s.as_str())
        .zip(u.iter().copied())
        .collect();
    expr.eval(&env)
        .map_err(|e| CatalogError::BadExpression(e.to_string()))
}

fn check_fact(m: &Submanifold, fact: &Fact) -> Result<(bool, String), CatalogError> {
    match fact {
        Fact::ConstantDegree {
            resolution,
            degree,
            tolerance,
        } => {
            let grid = m.grid(resolution);
            for u in &grid {
                let d = m.pointwise_degree(u, *tolerance)?;
                if d != *degree {
                    return Ok((false, format!("degree {d} at {u:?}, expected {degree}")));
                }
            }
            Ok((true, format!("degree {degree} at all {} samples", grid.len())))
        }
        Fact::FrameWedge {
            coefficients,
            resolution,
            tolerance,
        } => {
            let parsed: Vec<(Vec<usize>, Expr)> = coefficients
                .iter()
                .map(|(idx, text)| Ok((idx.clone(), parse_fact_expr(text)?)))
                .collect::<Result<_, CatalogError>>()?;
            let grading = m.law().grading().clone();
            let mut worst = 0.0_f64;
            for u in m.grid(resolution) {
                let data = m.tangent_pvector(&u)?;
                let wedge = data.tau.scale(data.area_factor);
                let mut expected = PVector::zero(grading.clone(), m.parameter_count());
                for (idx, expr) in &parsed {
                    let value = eval_fact_expr(expr, m, &u)?;
                    expected = expected.add(&PVector::basis(grading.clone(), idx).scale(value));
                }
                let gap = wedge.add(&expected.scale(-1.0)).norm()
                    / expected.norm().max(wedge.norm()).max(1.0);
                if gap > worst {
                    worst = gap;
                }
                if gap > *tolerance {
                    return Ok((false, format!("relative gap {gap:.3e} at {u:?}")));
                }
            }
            Ok((true, format!("worst relative gap {worst:.3e}")))
        }
        Fact::ClosedFormAgreement {
            resolution,
            tolerance,
        } => {
            let mut worst = 0.0_f64;
            for u in m.grid(resolution) {
                let data = m.tangent_pvector(&u)?;
                let generic = data.tau.scale(data.area_factor);
                let oracle = engel_wedge(m, &u)?;
                let gap = generic.add(&oracle.scale(-1.0)).norm() / oracle.norm().max(1.0);
                if gap > worst {
                    worst = gap;
                }
                if gap > *tolerance {
                    return Ok((false, format!("relative gap {gap:.3e} at {u:?}")));
                }
            }
            Ok((true, format!("worst relative gap {worst:.3e}")))
        }
        Fact::IntrinsicDensity {
            degree,
            expression,
            resolution,
            tolerance,
        } => {
            let expr = parse_fact_expr(expression)?;
            let mut worst = 0.0_f64;
            for u in m.grid(resolution) {
                let got = intrinsic_density(m, &u, *degree)?;
                let expected = eval_fact_expr(&expr, m, &u)?;
                let gap = (got - expected).abs() / expected.abs().max(1.0);
                if gap > worst {
                    worst = gap;
                }
                if gap > *tolerance {
                    return Ok((
                        false,
                        format!("density {got} at {u:?}, expected {expected}"),
                    ));
                }
            }
            Ok((true, format!("worst relative gap {worst:.3e}")))
        }
        Fact::StrataSamples { samples, tolerance } => {
            for (u, degree) in samples {
                let d = m.pointwise_degree(u, *tolerance)?;
                if d != *degree {
                    return Ok((false, format!("degree {d} at {u:?}, expected {degree}")));
                }
            }
            Ok((true, format!("{} samples classified as stated", samples.len())))
        }
        Fact::SystemResidual {
            sample,
            expected,
            tolerance,
        } => {
            let report = degree3_system(m, sample)?;
            let gap = report
                .residuals
                .iter()
                .zip(expected)
                .map(|(got, want)| (got - want).abs())
                .fold(0.0_f64, f64::max);
            if gap > *tolerance {
                return Ok((
                    false,
                    format!("residuals {:?}, expected {expected:?}", report.residuals),
                ));
            }
            Ok((true, format!("residuals match within {gap:.3e}")))
        }
        Fact::GradientIdentity {
            resolution,
            tolerance,
        } => {
            let mut worst = 0.0_f64;
            for u in m.grid(resolution) {
                let report = degree3_system(m, &u)?;
                match report.gradient_residual {
                    Some(r) => {
                        if r > worst {
                            worst = r;
                        }
                        if r > *tolerance {
                            return Ok((false, format!("gradient residual {r:.3e} at {u:?}")));
                        }
                    }
                    None => {
                        return Ok((
                            false,
                            format!("first component is not the first parameter at {u:?}"),
                        ));
                    }
                }
            }
            Ok((true, format!("worst gradient residual {worst:.3e}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn heisenberg_law_matches_the_quadratic_formula() {
        let entry = heisenberg(1);
        let law = entry.law();
        let product = law.multiply(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        // P3 = x3 + y3 + (x1 y2 - x2 y1)/2
        assert_eq!(product, vec![5.0, 7.0, 9.0 + (5.0 - 8.0) / 2.0]);
        let entry = heisenberg(2);
        assert_eq!(entry.algebra().dimension(), 5);
        assert_eq!(entry.algebra().homogeneous_dimension(), 6);
    }

    #[test]
    fn entry_lookup_accepts_known_names_only() {
        assert_eq!(entry("engel4").unwrap().name(), "engel4");
        assert_eq!(entry("e5").unwrap().name(), "e5");
        assert_eq!(entry("heisenberg").unwrap().name(), "heisenberg1");
        assert_eq!(entry("heisenberg3").unwrap().algebra().dimension(), 7);
        assert!(matches!(
            entry("borel"),
            Err(CatalogError::UnknownEntry { .. })
        ));
        assert!(matches!(
            entry("heisenberg0"),
            Err(CatalogError::UnknownEntry { .. })
        ));
        assert!(matches!(
            engel4().submanifold("nope"),
            Err(CatalogError::UnknownManifold { .. })
        ));
    }

    #[test]
    fn every_engel_submanifold_builds() {
        let entry = engel4();
        assert!(is_engel(entry.algebra()));
        assert!(!is_engel(heisenberg(1).algebra()));
        assert!(!is_engel(e5().algebra()));
        for named in entry.submanifolds() {
            entry.build(named.name()).unwrap();
        }
    }

    #[test]
    fn engel_expectations_all_pass() {
        let entry = engel4();
        let outcomes = check_expectations(&entry).unwrap();
        assert_eq!(
            outcomes.len(),
            entry
                .submanifolds()
                .iter()
                .map(|m| m.expected().len())
                .sum::<usize>()
        );
        for outcome in &outcomes {
            assert!(
                outcome.passed,
                "{} / {}: {}",
                outcome.manifold, outcome.statement, outcome.detail
            );
        }
    }

    #[test]
    fn closed_form_matches_the_generic_wedge_at_random_points() {
        let entry = engel4();
        let law = entry.law();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for named in entry.submanifolds() {
            if named.parameters().len() != 2 {
                continue;
            }
            let m = named.build(Arc::clone(&law)).unwrap();
            for _ in 0..100 {
                let u: Vec<f64> = m
                    .domain()
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo..hi))
                    .collect();
                let data = m.tangent_pvector(&u).unwrap();
                let generic = data.tau.scale(data.area_factor);
                let oracle = engel_wedge(&m, &u).unwrap();
                let gap = generic.add(&oracle.scale(-1.0)).norm() / oracle.norm().max(1.0);
                assert!(gap <= 1e-12, "{}: gap {gap:.3e} at {u:?}", named.name());
            }
        }
    }

    #[test]
    fn degree_three_system_vanishes_exactly_on_the_cubic_embedding() {
        let entry = engel4();
        let m = entry.build("deg3-exp").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let u = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let report = degree3_system(&m, &u).unwrap();
            for r in report.residuals {
                assert!(r.abs() <= 1e-12, "residuals {:?} at {u:?}", report.residuals);
            }
            let g = report.gradient_residual.unwrap();
            assert!(g <= 1e-12, "gradient residual {g} at {u:?}");
        }
    }

    #[test]
    fn parabola_system_residual_is_one_half_at_one_one() {
        let entry = engel4();
        let m = entry.build("deg4-parabola").unwrap();
        let report = degree3_system(&m, &[1.0, 1.0]).unwrap();
        assert!(report.residuals[0].abs() <= 1e-12);
        assert!(report.residuals[1].abs() <= 1e-12);
        assert!((report.residuals[2] - 0.5).abs() <= 1e-12);
        assert!((report.gradient_residual.unwrap() - 0.5).abs() <= 1e-12);
        // The vertical slab is not a graph over its first chart component.
        let vertical = entry.build("deg5-vertical").unwrap();
        let report = degree3_system(&vertical, &[0.3, -0.4]).unwrap();
        assert!(report.gradient_residual.is_none());
    }

    #[test]
    fn strata_classification_follows_the_coefficient_pattern() {
        let entry = engel4();
        let m = entry.build("deg4-parabola").unwrap();
        // Sample away from stratum boundaries and predict the degree from
        // the closed-form coefficients c13 = y-x, c14 = y-xy+x^2/2.
        let mut grid = Vec::new();
        for i in 0..12 {
            for j in 0..12 {
                let u = vec![-3.7 + 0.61 * i as f64, -3.7 + 0.61 * j as f64];
                let c13 = u[1] - u[0];
                let c14 = u[1] - u[0] * u[1] + u[0] * u[0] / 2.0;
                if c13.abs() > 1e-3 && c14.abs() > 1e-3 {
                    grid.push(u);
                }
            }
        }
        let report = strata_classification(&m, &grid, 1e-9).unwrap();
        assert_eq!(report.near_degenerate, 0);
        // Off both vanishing loci every sample has degree 4.
        assert_eq!(report.strata.len(), 1);
        assert_eq!(report.strata[&4].len(), grid.len());
        let mixed = strata_classification(
            &m,
            &[vec![0.0, 0.0], vec![2.0, 2.0], vec![1.0, 1.0]],
            1e-9,
        )
        .unwrap();
        assert_eq!(mixed.strata[&2].len(), 2);
        assert_eq!(mixed.strata[&4].len(), 1);
    }

    #[test]
    fn filiform_step_four_has_homogeneous_dimension_eleven() {
        let entry = e5();
        assert_eq!(entry.algebra().dimension(), 5);
        assert_eq!(entry.algebra().homogeneous_dimension(), 11);
        assert_eq!(entry.algebra().step(), 4);
    }

    #[test]
    fn random_filiform_surfaces_stay_below_degree_eight() {
        let law = e5().law();
        let mut rng = ChaCha8Rng::seed_from_u64(2026);
        for _ in 0..50 {
            let m = random_polynomial_submanifold(Arc::clone(&law), 2, &mut rng).unwrap();
            let d = m.pointwise_degree(&[0.1, -0.2], 1e-9).unwrap();
            assert!(d < 8, "degree {d}");
            assert!(d >= 2);
        }
    }

    #[test]
    fn closed_form_rejects_the_wrong_group_or_shape() {
        let h = heisenberg(1);
        let law = h.law();
        let m = Submanifold::parse(
            law,
            &["x", "y"],
            &[(-1.0, 1.0), (-1.0, 1.0)],
            &["x", "y", "0"],
        )
        .unwrap();
        assert!(matches!(engel_wedge(&m, &[0.0, 0.0]), Err(CatalogError::NotEngel)));
        let jac = DMatrix::zeros(3, 2);
        assert!(matches!(
            engel_wedge_closed_form(h.algebra(), &jac, 0.0),
            Err(CatalogError::NotEngel)
        ));
        let entry = engel4();
        let jac = DMatrix::zeros(4, 3);
        assert!(matches!(
            engel_wedge_closed_form(entry.algebra(), &jac, 0.0),
            Err(CatalogError::ParameterCount { .. })
        ));
        let curve = entry.build("deg4-sigma3-plus").unwrap();
        assert!(matches!(
            engel_wedge(&curve, &[3.0]),
            Err(CatalogError::ParameterCount { .. })
        ));
    }
}
