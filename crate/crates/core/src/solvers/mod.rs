//! The three recovery programs and the engines behind them.
//!
//! - box-constrained basis pursuit: `min Σ x_i  s.t. Ax = y, x ∈ [0,1]^N`
//!   (on the box the ℓ₁ norm is the plain sum),
//! - nonnegative basis pursuit: the same with `x ∈ R^N_+`,
//! - box-constrained least squares: `min ‖Ax - y‖₂  s.t. x ∈ [0,1]^N`.

mod box_ls;
mod lp;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

pub use box_ls::solve_box_ls;
pub use lp::lp_solve;

use crate::error::{check_len, Error, Result};
use crate::linalg::{norm2, LinearMap};
use crate::operators::MeasurementOperator;
use crate::signal::BinarySignal;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tolerance_feas: f64,
    pub tolerance_opt: f64,
    pub max_iterations: usize,
    /// ℓ₂ distance to the ground truth below which recovery counts as exact.
    pub success_radius: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance_feas: 1e-8,
            tolerance_opt: 1e-8,
            max_iterations: 100_000,
            success_radius: 1e-4,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if positive(self.tolerance_feas)
            && positive(self.tolerance_opt)
            && positive(self.success_radius)
        {
            Ok(())
        } else {
            Err(Error::invalid("solver tolerances must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    Unbounded,
    /// the final basis failed the feasibility or duality-gap check
    NumericalFailure,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::Infeasible => "infeasible",
            SolverStatus::IterationLimit => "iteration_limit",
            SolverStatus::Unbounded => "unbounded",
            SolverStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOutcome {
    pub x_star: Vec<f64>,
    pub status: SolverStatus,
    /// `‖A x_star - y‖₂`
    pub residual_l2: f64,
    pub objective: f64,
    pub iterations: usize,
    /// primal minus dual objective, for LP solves
    pub duality_gap: Option<f64>,
}

impl SolverOutcome {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }
}

/// Which recovery program to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Program {
    /// box-constrained basis pursuit
    Bp,
    /// box-constrained least squares
    Ls,
    /// nonnegative basis pursuit
    BpPlus,
}

impl Program {
    pub const ALL: [Program; 3] = [Program::Bp, Program::Ls, Program::BpPlus];

    pub fn as_str(self) -> &'static str {
        match self {
            Program::Bp => "bp",
            Program::Ls => "ls",
            Program::BpPlus => "bp+",
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Program {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bp" => Ok(Program::Bp),
            "ls" => Ok(Program::Ls),
            "bp+" | "bpplus" => Ok(Program::BpPlus),
            other => Err(Error::invalid(format!("unknown program `{other}`"))),
        }
    }
}

/// Box-constrained basis pursuit on an explicit matrix.
pub fn solve_box_bp_matrix(a: &DMatrix<f64>, y: &[f64], opts: &SolverOptions) -> Result<SolverOutcome> {
    let n = a.ncols();
    lp_solve(&vec![1.0; n], a, y, &vec![0.0; n], &vec![1.0; n], opts)
}

/// Nonnegative basis pursuit on an explicit matrix.
pub fn solve_nonneg_bp_matrix(
    a: &DMatrix<f64>,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    let n = a.ncols();
    lp_solve(
        &vec![1.0; n],
        a,
        y,
        &vec![0.0; n],
        &vec![f64::INFINITY; n],
        opts,
    )
}

pub fn solve_box_bp(
    op: &MeasurementOperator,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    check_len(op.m(), y.len())?;
    solve_box_bp_matrix(&op.to_dense()?, y, opts)
}

pub fn solve_nonneg_bp(
    op: &MeasurementOperator,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    check_len(op.m(), y.len())?;
    solve_nonneg_bp_matrix(&op.to_dense()?, y, opts)
}

/// Runs `program` on an explicit matrix.
pub fn solve_program(
    program: Program,
    a: &DMatrix<f64>,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<SolverOutcome> {
    match program {
        Program::Bp => solve_box_bp_matrix(a, y, opts),
        Program::Ls => solve_box_ls(a, y, opts),
        Program::BpPlus => solve_nonneg_bp_matrix(a, y, opts),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounded {
    pub signal: BinarySignal,
    /// whether the rounded vector reproduces the measurements
    pub consistent: bool,
    pub residual_l2: f64,
}

/// Thresholds at 1/2 (exactly 1/2 rounds down) and checks
/// `‖A·rounded - y‖₂ <= 10·tolerance_feas·(1 + ‖y‖₂)`.
pub fn round_to_binary<A: LinearMap + ?Sized>(
    x: &[f64],
    a: &A,
    y: &[f64],
    opts: &SolverOptions,
) -> Result<Rounded> {
    check_len(a.cols(), x.len())?;
    check_len(a.rows(), y.len())?;
    let signal = BinarySignal::from_support(
        x.len(),
        x.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(i, _)| i),
    )?;
    let mut ax = vec![0.0; a.rows()];
    a.apply_into(&signal.to_f64(), &mut ax);
    let residual_l2 = ax
        .iter()
        .zip(y)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt();
    Ok(Rounded {
        consistent: residual_l2 <= 10.0 * opts.tolerance_feas * (1.0 + norm2(y)),
        signal,
        residual_l2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> MeasurementOperator {
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        MeasurementOperator::circulant(b, &(0..n).collect::<Vec<_>>(), 0.0).unwrap()
    }

    #[test]
    fn identity_programs_return_target() {
        let op = identity(6);
        let x0 = [1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let y = op.apply(&x0).unwrap();
        let opts = SolverOptions::default();
        for out in [
            solve_box_bp(&op, &y, &opts).unwrap(),
            solve_nonneg_bp(&op, &y, &opts).unwrap(),
            solve_box_ls(&op, &y, &opts).unwrap(),
        ] {
            assert_eq!(out.status, SolverStatus::Optimal);
            for (u, v) in out.x_star.iter().zip(&x0) {
                assert!((u - v).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn zero_measurements_give_zero() {
        let op = MeasurementOperator::circulant(vec![0.4, -1.0, 0.3, 0.8, -0.2], &[0, 2, 3], 0.0)
            .unwrap();
        let out = solve_box_bp(&op, &[0.0; 3], &SolverOptions::default()).unwrap();
        assert_eq!(out.status, SolverStatus::Optimal);
        assert!(out.objective.abs() < 1e-12);
        assert!(out.x_star.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn negative_measurement_is_infeasible_for_positive_rows() {
        let op = MeasurementOperator::circulant(vec![0.1, -0.2, 0.3], &[0, 1], 5.0).unwrap();
        let out = solve_nonneg_bp(&op, &[1.0, -1.0], &SolverOptions::default()).unwrap();
        assert_eq!(out.status, SolverStatus::Infeasible);
    }

    #[test]
    fn rounding_rules() {
        let op = identity(4);
        let opts = SolverOptions::default();
        let x0 = [1.0, 0.0, 1.0, 0.0];
        let r = round_to_binary(&x0, &op, &x0, &opts).unwrap();
        assert_eq!(r.signal.support(), &[0, 2]);
        assert!(r.consistent);

        let half = [0.5; 4];
        let r = round_to_binary(&half, &op, &x0, &opts).unwrap();
        assert_eq!(r.signal, BinarySignal::zeros(4));
        assert!(!r.consistent);

        let near = [1.0 - 1e-4, 1e-4, 0.99995, 0.0];
        let r = round_to_binary(&near, &op, &x0, &opts).unwrap();
        assert_eq!(r.signal.support(), &[0, 2]);
        assert!(r.consistent);
    }

    #[test]
    fn program_names() {
        for p in Program::ALL {
            assert_eq!(p.as_str().parse::<Program>().unwrap(), p);
        }
        assert!("lasso".parse::<Program>().is_err());
    }

    #[test]
    fn options_are_validated() {
        let bad = SolverOptions {
            tolerance_feas: 0.0,
            ..SolverOptions::default()
        };
        let a = DMatrix::<f64>::identity(1, 1);
        assert!(solve_box_bp_matrix(&a, &[1.0], &bad).is_err());
        assert!(solve_box_ls(&a, &[1.0], &bad).is_err());
    }
}
