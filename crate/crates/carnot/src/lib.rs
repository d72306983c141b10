//! Exact calculus on stratified (Carnot) groups.
//!
//! A stratified group is a simply connected nilpotent Lie group whose algebra
//! splits into layers generated by the first one. This crate builds such
//! groups from structure constants, derives their polynomial group law by the
//! Baker-Campbell-Hausdorff formula in exact rational arithmetic, and then
//! works with parametrized submanifolds inside them: pointwise degrees,
//! adapted frames, the intrinsic measure built from the degree-d part of the
//! tangent p-vector, metric factors, blow-up limits, and the curve
//! asymptotics that drive the blow-up analysis.
//!
//! The layering is bottom-up:
//!
//! * [`poly`]: exact multivariate polynomials over rationals with weighted
//!   degrees, the substrate for everything symbolic.
//! * [`algebra`]: stratified Lie algebras as validated structure constants.
//! * [`group`]: BCH group laws, dilations, left-invariant frames, homogeneous
//!   norms with calibrated layer constants.
//! * [`multivec`]: exterior algebra over the graded basis with the degree
//!   filtration.
//! * [`expr`]: a small expression language with exact literals and
//!   forward-mode derivatives, used to parametrize submanifolds.
//! * [`manifold`]: submanifolds, tangent p-vectors, pointwise degree,
//!   adapted frames, local graph parametrizations.
//! * [`measure`]: intrinsic densities and measures, metric factors, density
//!   ratios against spherical balls.
//! * [`blowup`]: dilated point clouds, Hausdorff distances, subgroup checks,
//!   curve integration and coefficient asymptotics.
//! * [`catalog`]: ready-made groups and submanifolds with their known
//!   expected behavior, used as executable regression oracles.

pub mod algebra;
pub mod expr;
pub mod group;
pub mod blowup;
pub mod catalog;
pub mod manifold;
pub mod measure;
pub mod multivec;
pub mod poly;

/// The guide's chapters, included here so `cargo test --doc` compiles and
/// runs every snippet in `book/`.
pub mod guide {
    #[doc = include_str!("../../../book/src/intro.md")]
    pub mod intro {}
    #[doc = include_str!("../../../book/src/groups.md")]
    pub mod groups {}
    #[doc = include_str!("../../../book/src/submanifolds.md")]
    pub mod submanifolds {}
    #[doc = include_str!("../../../book/src/measure.md")]
    pub mod measure {}
    #[doc = include_str!("../../../book/src/blowup.md")]
    pub mod blowup {}
    #[doc = include_str!("../../../book/src/curves.md")]
    pub mod curves {}
    #[doc = include_str!("../../../book/src/catalog.md")]
    pub mod catalog {}
}
