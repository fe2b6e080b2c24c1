//! Numerical laboratory for two-dimensional conformal Ricci flow on
//! time-varying planar domains.
//!
//! A metric `g(t) = u(·, t) |dz|²` evolves by the logarithmic fast diffusion
//! equation `∂u/∂t = Δ log u`. The crate provides the grid substrate, discrete
//! spacetimes, an implicit solver for the flow, complete hyperbolic factors,
//! measure-valued initial data and a harness of inequality checks.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod grid;
pub mod lfde;
mod linalg;
pub mod measures;
pub mod spacetime;
pub mod uniformize;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{curve_length, integrate, laplacian, Adjacency, Curve, Field, Grid, Mask, Point};
pub use lfde::{BoundaryPolicy, FlowState, ImplicitStepper, Stepper, Trajectory};
pub use linalg::CgOptions;
pub use measures::DiscreteMeasure;
pub use spacetime::{cantor_bendixson, isolated_points, CbDecomposition, SpacetimeDomain, Worldline};
pub use uniformize::HyperbolicFactor;
pub use verify::{Verdict, VerificationReport};
