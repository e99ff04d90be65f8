//! Numerical laboratory for collapsing metrics on principal bundles.
//!
//! A compact structure group `G` with a bi-invariant metric acts on a total
//! space `P` over a closed base `M`.  A principal connection splits `TP` into
//! horizontal and vertical parts, and shrinking the fibers by a factor `t`
//! produces the one-parameter family of metrics studied here.  The crate
//! computes the curvature operator of that family in a scaled bivector frame,
//! tracks its minimal eigenvalue against a diameter-weighted criterion as
//! `t -> 0`, and cross-checks every closed-form block against an independent
//! finite-difference oracle built from coordinate Christoffel symbols.
//!
//! The pieces:
//!
//! * [`linalg`]: dense tensors, a cyclic Jacobi eigensolver, metric
//!   Gram-Schmidt, and small least-squares fits.
//! * [`lie`]: compact-type Lie algebra data (structure constants, bi-invariant
//!   inner product, commutator subalgebra and its complement).
//! * [`geometry`]: model base manifolds (spheres, complex projective spaces,
//!   flat tori, products) with closed-form curvature operators and diameters.
//! * [`bundle`]: connection data on a trivialized chart, curvature forms by
//!   differentiated structure equation, and the eigenvalue criterion inputs.
//! * [`operator`]: the scaled-bivector block assembly of the curvature
//!   operator of the shrunken metric and its `t`-sweeps.
//! * [`oracle`]: a coordinate finite-difference engine for the same metrics,
//!   used to verify blocks, signs, and scaling laws.
//! * [`topology`]: integer cohomology of circle bundles over products of
//!   complex projective spaces via Smith normal form.
//! * [`report`]: serializable run reports with deterministic layout.
//! * [`cli`]: the command-line front end.

pub mod bundle;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod lie;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod report;
pub mod topology;

pub use error::{Error, Result};
