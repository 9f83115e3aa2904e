//! Numerical toolkit for vector p-Laplacian boundary value inclusions
//!
//! ```text
//! (phi(x'(t)))' in A(x(t)) + F(t, x(t)),   t in [0, T]
//! (phi(x'(0)), -phi(x'(T))) in xi(x(0), x(T))
//! ```
//!
//! with `phi(z) = |z|^{p-2} z`, `A` maximal monotone, `F` a multifunction and
//! `xi` a maximal monotone boundary operator. Everything is generic over the
//! scalar type ([`Scalar`], implemented for `f32` and `f64`); the `*64`
//! aliases below fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod base;
pub mod boundary;
pub mod error;
pub mod evidence;
pub mod fields;
pub mod linalg;
pub mod monotone;
pub mod sampling;
pub mod scalar;
pub mod solver;

pub use base::{discrete_lp_norm, Exponent, Grid, Trajectory};
pub use boundary::{
    bc_residual, check_h0, check_h_xi, graph_samples, make_catalog_bc, BcResidual, BoundaryKind,
    BoundaryOperator, BoundaryTag, H0Report, HxiBranch, HxiReport,
};
pub use error::{Error, NonConvergence, Result};
pub use evidence::Evidence;
pub use fields::{
    check_hartman, estimate_growth, radial_retraction, BuiltinField, HartmanReport, MultiField, Selection,
};
pub use monotone::{make_normal_cone, ConvexSet, CustomMap, GraphSample, MapKind, MapTag, MonotoneMap};
pub use scalar::Scalar;
pub use solver::{
    assemble_residual, continuation_solve, convergence_study, evaluate_trajectory, green_terms, solve_regularized,
    verify_solution, Certificate, ContinuationStep, ProblemSpec, SolveReport, SolverConfig, StudyRow, Verdicts,
};

pub type Exponent64 = Exponent<f64>;
pub type Grid64 = Grid<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type ConvexSet64 = ConvexSet<f64>;
pub type MonotoneMap64 = MonotoneMap<f64>;
pub type MultiField64 = MultiField<f64>;
pub type BoundaryOperator64 = BoundaryOperator<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolveReport64 = SolveReport<f64>;
