//! Recovery of binary sparse signals from biased partial random circulant
//! and Toeplitz measurements.
//!
//! The crate is organized around the measurement pipeline:
//!
//! - [`operators`]: biased partial circulant/Toeplitz operators `A = μ1 + Φ_Θ`
//!   with FFT-backed and dense code paths.
//! - [`randomness`]: seeded sub-Gaussian generators, row selections and
//!   binary signals.
//! - [`solvers`]: a bounded-variable simplex engine and the three recovery
//!   programs (box-constrained basis pursuit, nonnegative basis pursuit and
//!   box-constrained least squares).
//! - [`certificates`]: the explicit dual certificate, margin verification,
//!   LP certificate search and noise radii.
//! - [`proof_analysis`]: numerical checks of the quadratic-form machinery
//!   behind the recovery guarantee.
//! - [`harness`]: seeded Monte-Carlo experiments, oracles and output files.

pub mod certificates;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod operators;
pub mod proof_analysis;
pub mod randomness;
pub mod signal;
pub mod solvers;

pub use error::{Error, Result};
pub use operators::{IndexSet, MeasurementOperator, OperatorKind};
pub use randomness::{Ensemble, Seed, Stream};
pub use signal::BinarySignal;
pub use solvers::{SolverOptions, SolverOutcome, SolverStatus};
