//! Seeded Monte-Carlo experiments: trials, phase grids, outputs and the
//! brute-force uniqueness oracle.
//!
//! Every random draw is keyed by the base seed and the trial coordinates,
//! so results do not depend on scheduling or on which other cells run.

pub mod config;
pub mod grid;
pub mod oracle;
pub mod output;
pub mod trial;

pub use config::ExperimentConfig;
pub use grid::{run_phase_grid, run_phase_grid_with, CellSummary, PhaseGrid};
pub use oracle::{brute_force_unique, BinaryUniqueness};
pub use output::{emit_outputs, to_csv, to_pgm};
pub use trial::{run_trial, TrialResult};
