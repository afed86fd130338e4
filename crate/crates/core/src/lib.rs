//! Diffeomorphic 2D image registration with a relaxed Jacobian-determinant
//! constraint `det ∇φ = f > 0`, solved by a penalty-splitting iteration inside
//! a coarse-to-fine driver.
//!
//! The crate is organized bottom-up:
//!
//! - [`grid`]: cell-centered grids, scalar/vector fields and stencils
//! - [`fields`]: deformations and bilinear warping
//! - [`jacobian`]: Jacobian determinant, folding detection and correction
//! - [`energy`]: control functions, the objective and subproblem right-hand sides
//! - [`linsolve`]: screened Poisson solver with Dirichlet data
//! - [`registration`]: the outer iteration and the multilevel driver
//! - [`metrics`]: Re_SSD, PSNR, SSIM and Jacobian statistics
//! - [`synth`]: synthetic test image pairs
//! - [`cli`]: configuration parsing, image I/O and artifact emission

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy;
pub mod fields;
pub mod grid;
pub mod jacobian;
pub mod linsolve;
pub mod metrics;
pub mod registration;
pub mod synth;

pub use energy::{EnergyBreakdown, EnergyParams, PenaltyVariant};
pub use fields::{identity_deformation, warp, Deformation};
pub use grid::{GridError, GridSpec, ScalarField, VectorField};
pub use jacobian::{correct_deformation, folding_indicator, jacobian_det, FoldingReport};
pub use linsolve::{ScreenedPoissonProblem, ScreenedPoissonSolver, SolveError};
pub use metrics::MetricsReport;
pub use registration::{
    dirpm, multilevel_register, RegistrationError, RegistrationResult, SolverConfig,
};
