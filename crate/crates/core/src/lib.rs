//! Solutions of linear programs with a random right-hand side.
//!
//! The crate solves standard-form programs `min ⟨c,x⟩ s.t. Ax = b, x ≥ 0`
//! with basis reporting, measures how bases and optimal sets react to
//! perturbations of `b`, samples the set-valued limit laws of the optimal
//! set through auxiliary linear programs, and builds confidence sets from a
//! single solved basis.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the experiments and the
//! command-line tool use.

pub mod confidence;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod limits;
pub mod linalg;
pub mod lp_core;
pub mod rng;
pub mod scalar;
pub mod simplex;
pub mod stability;
pub mod stats;

pub use error::{Error, Result};
pub use lp_core::{
    basic_solution, enumerate_feasible_bases, optimal_vertices, support, Basis, BasicSolution,
    LpJson, OptimalSet, Polytope, StandardLp, Tolerances,
};
pub use scalar::Scalar;
pub use simplex::{solve, verify_kkt, LpStatus, SolveResult};

pub type Lp = StandardLp<f64>;
pub type Lp32 = StandardLp<f32>;
pub type Mat = linalg::Matrix<f64>;
pub type Poly = Polytope<f64>;
pub type Solution = SolveResult<f64>;
pub type Dir = geometry::Direction<f64>;
pub type Grid = geometry::SphereGrid<f64>;
pub type Region = confidence::ConfidenceRegion<f64>;
pub type Confidence = confidence::ConfidenceSet<f64>;
pub type Stability = stability::StabilityReport<f64>;
