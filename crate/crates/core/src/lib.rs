//! Fréchet medians of finite measures on the constant-curvature model spaces.
//!
//! The crate is organised bottom-up: [`geometry`] provides the sphere, flat
//! and hyperboloid kernels; [`solver`] computes medians; [`bounds`] and
//! [`hmin`] evaluate the concentration bounds; [`harness`] runs the
//! reproducible experiments behind the command-line tool.

// `!(x > 0.0)` is how NaN gets rejected alongside the range check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod hmin;
pub mod oracle;
pub mod solver;

pub use bounds::{BoundReport, CaseTag, ConcentrationSpec};
pub use error::{Error, Result};
pub use geometry::{Ball, Geometry, ModelSpace, Point, Radius, TangentVector};
pub use hmin::{Branch, HminInstance};
pub use solver::{DiscreteMeasure, SolverConfig, SolverResult, StepRule};
