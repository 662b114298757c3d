//! Meshfree collocation for the two-dimensional Monge-Ampère problem
//! `det D²u = f` in a convex domain, `u = g` on its boundary, using
//! trial spaces spanned by compactly supported Wendland kernels.

// `!(v > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod kernel;
pub mod manufactured;
pub mod operator;
pub mod solver;
pub mod spatial;
pub mod trialspace;

pub use error::{Error, Result};
pub use geometry::{Domain, MeshMetrics, PointSet, Role};
pub use kernel::{Jet, KernelFamily, Point, ScaledKernel};
pub use manufactured::Manufactured;
pub use operator::{HessianSample, Problem};
pub use solver::{SolveReport, SolverConfig, Tolerance};
pub use trialspace::{Coefficients, TrialSpace};
