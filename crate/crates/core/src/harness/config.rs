//! Experiment configuration in `key = value` text form.
//!
//! ```text
//! # desk-scale phase diagram
//! n = 100
//! s = 5:100:5
//! m = 5:100:5
//! trials = 25
//! ensemble = gaussian:1
//! operator = circulant
//! mu = 1
//! programs = bp,ls
//! seed = 7
//! ```
//!
//! Grids are `start:end:step` (inclusive), comma lists, or single values.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::operators::OperatorKind;
use crate::randomness::Ensemble;
use crate::solvers::{Program, SolverOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub s_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub trials: usize,
    pub ensemble: Ensemble,
    pub operator_kind: OperatorKind,
    /// added to the ensemble mean to give the operator bias
    pub mu: f64,
    pub programs: Vec<Program>,
    /// exact Euclidean norm of the measurement noise
    pub eta: Option<f64>,
    pub base_seed: u64,
    pub solver: SolverOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid: Vec<usize> = (5..=100).step_by(5).collect();
        Self {
            n: 100,
            s_values: grid.clone(),
            m_values: grid,
            trials: 25,
            ensemble: Ensemble::Gaussian { sigma: 1.0 },
            operator_kind: OperatorKind::Circulant,
            mu: 1.0,
            programs: vec![Program::Bp, Program::Ls],
            eta: None,
            base_seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

/// Parses `start:end:step`, `a,b,c`, or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<usize>> {
    let bad = || Error::invalid(format!("bad grid `{text}`"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let parts: Vec<&str> = text.split(':').collect();
    match parts.len() {
        1 => text.split(',').map(num).collect(),
        2 | 3 => {
            let start = num(parts[0])?;
            let end = num(parts[1])?;
            let step = if parts.len() == 3 { num(parts[2])? } else { 1 };
            if step == 0 || end < start {
                return Err(bad());
            }
            Ok((start..=end).step_by(step).collect())
        }
        _ => Err(bad()),
    }
}

fn format_grid(values: &[usize]) -> String {
    if values.len() >= 3 {
        let step = values[1].wrapping_sub(values[0]);
        if step > 0 && values.windows(2).all(|w| w[1].wrapping_sub(w[0]) == step) {
            return format!("{}:{}:{}", values[0], values[values.len() - 1], step);
        }
    }
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "n" => self.n = parse_num(key, value)?,
            "s" | "s_values" => self.s_values = parse_grid(value)?,
            "m" | "m_values" => self.m_values = parse_grid(value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "ensemble" => self.ensemble = value.parse()?,
            "operator" | "operator_kind" => self.operator_kind = value.parse()?,
            "mu" => self.mu = parse_num(key, value)?,
            "programs" => {
                self.programs = value
                    .split(',')
                    .map(|p| p.trim().parse())
                    .collect::<Result<_>>()?;
            }
            "eta" => {
                self.eta = match value {
                    "" | "none" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "seed" | "base_seed" => self.base_seed = parse_num(key, value)?,
            "tolerance_feas" => self.solver.tolerance_feas = parse_num(key, value)?,
            "tolerance_opt" => self.solver.tolerance_opt = parse_num(key, value)?,
            "max_iterations" => self.solver.max_iterations = parse_num(key, value)?,
            "success_radius" => self.solver.success_radius = parse_num(key, value)?,
            other => return Err(Error::invalid(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults. Blank lines and `#`
    /// comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(k, v).map_err(|e| Error::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        for (name, grid) in [("s", &self.s_values), ("m", &self.m_values)] {
            if grid.is_empty() {
                return Err(Error::invalid(format!("{name} grid is empty")));
            }
            if let Some(v) = grid.iter().find(|&&v| v > self.n) {
                return Err(Error::invalid(format!("{name} value {v} exceeds n = {}", self.n)));
            }
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.programs.is_empty() {
            return Err(Error::invalid("no programs selected"));
        }
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::invalid(format!("mu must be >= 0, got {}", self.mu)));
        }
        if let Some(eta) = self.eta {
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Error::invalid(format!("eta must be >= 0, got {eta}")));
            }
        }
        self.ensemble.validate()?;
        self.solver.validate()
    }

    /// Text form accepted by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let programs: Vec<&str> = self.programs.iter().map(|p| p.as_str()).collect();
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "s = {}", format_grid(&self.s_values));
        let _ = writeln!(out, "m = {}", format_grid(&self.m_values));
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "ensemble = {}", self.ensemble);
        let _ = writeln!(out, "operator = {}", self.operator_kind);
        let _ = writeln!(out, "mu = {}", self.mu);
        let _ = writeln!(out, "programs = {}", programs.join(","));
        match self.eta {
            Some(eta) => {
                let _ = writeln!(out, "eta = {eta}");
            }
            None => {
                let _ = writeln!(out, "eta = none");
            }
        }
        let _ = writeln!(out, "seed = {}", self.base_seed);
        let _ = writeln!(out, "tolerance_feas = {}", self.solver.tolerance_feas);
        let _ = writeln!(out, "tolerance_opt = {}", self.solver.tolerance_opt);
        let _ = writeln!(out, "max_iterations = {}", self.solver.max_iterations);
        let _ = writeln!(out, "success_radius = {}", self.solver.success_radius);
        out
    }
}
