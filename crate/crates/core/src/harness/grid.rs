//! Phase-transition grids over `(s, M)`.

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::trial::{run_trial, TrialResult};
use crate::error::{Error, Result};
use crate::solvers::Program;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "BINSENSE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProgramTally {
    pub successes: usize,
    pub error_sum: f64,
    pub error_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub s: usize,
    pub m: usize,
    pub trials: usize,
    /// indexed like [`Program::ALL`]; `None` for programs not run
    pub tallies: [Option<ProgramTally>; 3],
    pub cert_verified: usize,
}

fn slot(p: Program) -> usize {
    Program::ALL.iter().position(|&q| q == p).expect("listed program")
}

impl CellSummary {
    /// Aggregates trials in the given order.
    pub fn from_trials(s: usize, m: usize, trials: &[TrialResult]) -> Self {
        let mut tallies: [Option<ProgramTally>; 3] = [None; 3];
        for t in trials {
            for r in &t.programs {
                let e = tallies[slot(r.program)].get_or_insert_with(ProgramTally::default);
                e.successes += r.success as usize;
                e.error_sum += r.error_l2;
                e.error_max = e.error_max.max(r.error_l2);
            }
        }
        let cert_verified = trials
            .iter()
            .filter(|t| t.certificate.as_ref().is_some_and(|c| c.verified))
            .count();
        Self {
            s,
            m,
            trials: trials.len(),
            tallies,
            cert_verified,
        }
    }

    pub fn tally(&self, p: Program) -> Option<&ProgramTally> {
        self.tallies[slot(p)].as_ref()
    }

    pub fn rate(&self, p: Program) -> Option<f64> {
        self.tally(p)
            .map(|t| t.successes as f64 / self.trials.max(1) as f64)
    }

    pub fn mean_error(&self, p: Program) -> Option<f64> {
        self.tally(p).map(|t| t.error_sum / self.trials.max(1) as f64)
    }

    pub fn cert_rate(&self) -> f64 {
        self.cert_verified as f64 / self.trials.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub n: usize,
    /// row-major: every `s` for the first `M`, then the next `M`
    pub cells: Vec<CellSummary>,
}

impl PhaseGrid {
    pub fn cell(&self, s: usize, m: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.s == s && c.m == m)
    }
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a pool capped by `BINSENSE_THREADS`, or on the global pool.
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    match thread_cap()? {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Runs every trial of one cell, in parallel, returning them in order.
pub fn run_cell(config: &ExperimentConfig, s: usize, m: usize) -> Result<Vec<TrialResult>> {
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, s, m, t))
        .collect()
}

/// Runs the grid cell by cell. `on_cell` sees each finished cell with its
/// trials, so callers can flush partial output.
pub fn run_phase_grid_with(
    config: &ExperimentConfig,
    mut on_cell: impl FnMut(&CellSummary, &[TrialResult]) -> Result<()> + Send,
) -> Result<PhaseGrid> {
    config.validate()?;
    with_thread_pool(|| {
        let mut cells = Vec::with_capacity(config.s_values.len() * config.m_values.len());
        for &m in &config.m_values {
            for &s in &config.s_values {
                let trials = run_cell(config, s, m)?;
                let cell = CellSummary::from_trials(s, m, &trials);
                on_cell(&cell, &trials)?;
                cells.push(cell);
            }
        }
        Ok(PhaseGrid { n: config.n, cells })
    })?
}

pub fn run_phase_grid(config: &ExperimentConfig) -> Result<PhaseGrid> {
    run_phase_grid_with(config, |_, _| Ok(()))
}
