//! One seeded trial: sample, measure, solve, certify.

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::certificates::{build_certificate, certified_noise_radius, margin_report, noise_error_bound};
use crate::error::Result;
use crate::linalg::dist2;
use crate::operators::{manifest::to_manifest, MeasurementOperator, OperatorKind};
use crate::randomness::{sample_binary_signal, sample_generator, sample_noise, sample_selection, Seed, Stream};
use crate::signal::BinarySignal;
use crate::solvers::{solve_program, Program, SolverOptions, SolverStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramResult {
    pub program: Program,
    pub status: SolverStatus,
    /// `‖x_* - x₀‖₂`
    pub error_l2: f64,
    pub residual_l2: f64,
    pub iterations: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSummary {
    pub verified: bool,
    pub flipped: bool,
    pub t_target: f64,
    pub t_actual: f64,
    pub nu_norm: f64,
    /// `2‖ν‖η/t_actual`, for verified certificates under noise
    pub noise_radius: Option<f64>,
    /// the a-priori noise bound formula, when noise is configured
    pub theorem_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub s: usize,
    pub m: usize,
    pub trial: usize,
    pub operator_key: u64,
    pub signal_key: u64,
    pub operator_digest: String,
    pub signal_digest: String,
    pub programs: Vec<ProgramResult>,
    /// `None` when the certificate is undefined (`μ = 0`)
    pub certificate: Option<CertificateSummary>,
}

impl TrialResult {
    pub fn program(&self, p: Program) -> Option<&ProgramResult> {
        self.programs.iter().find(|r| r.program == p)
    }
}

/// A sampled problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub op: MeasurementOperator,
    pub x0: BinarySignal,
    pub y: Vec<f64>,
    pub operator_key: u64,
    pub signal_key: u64,
}

/// The operator of cell `m`, trial `trial`; it is shared by every `s`.
pub fn sample_operator(config: &ExperimentConfig, m: usize, trial: usize) -> Result<(MeasurementOperator, u64)> {
    let seed = Seed::new(config.base_seed);
    let labels = [m as u64, trial as u64];
    let n = config.n;
    let key = seed.key(Stream::Generator, &labels);
    let theta = sample_selection(n, m, &mut seed.rng(Stream::Selection, &labels))?;
    let gen_len = match config.operator_kind {
        OperatorKind::Circulant => n,
        OperatorKind::Toeplitz => 2 * n - 1,
    };
    let g = sample_generator(&config.ensemble, gen_len, &mut seed.rng(Stream::Generator, &labels))?;
    let mu = config.mu + g.bias;
    let op = match config.operator_kind {
        OperatorKind::Circulant => MeasurementOperator::circulant(g.centered, &theta, mu)?,
        OperatorKind::Toeplitz => MeasurementOperator::toeplitz(g.centered, &theta, mu)?,
    };
    Ok((
        op.with_statistics(config.ensemble.sigma(), config.ensemble.subgauss_norm())
            .with_seed(key),
        key,
    ))
}

pub fn sample_signal(config: &ExperimentConfig, s: usize, m: usize, trial: usize) -> Result<(BinarySignal, u64)> {
    let seed = Seed::new(config.base_seed);
    let labels = [s as u64, m as u64, trial as u64];
    let x0 = sample_binary_signal(config.n, s, &mut seed.rng(Stream::Signal, &labels))?;
    Ok((x0, seed.key(Stream::Signal, &labels)))
}

/// Measurements `A x₀ + e` with `‖e‖₂ = η` exactly when noise is configured.
pub fn measure(config: &ExperimentConfig, op: &MeasurementOperator, x0: &BinarySignal, s: usize, trial: usize) -> Result<Vec<f64>> {
    let mut y = op.apply(&x0.to_f64())?;
    if let Some(eta) = config.eta {
        let labels = [s as u64, op.m() as u64, trial as u64];
        let e = sample_noise(y.len(), eta, &mut Seed::new(config.base_seed).rng(Stream::Noise, &labels))?;
        y.iter_mut().zip(&e).for_each(|(u, v)| *u += v);
    }
    Ok(y)
}

pub fn sample_instance(config: &ExperimentConfig, s: usize, m: usize, trial: usize) -> Result<Instance> {
    let (op, operator_key) = sample_operator(config, m, trial)?;
    let (x0, signal_key) = sample_signal(config, s, m, trial)?;
    let y = measure(config, &op, &x0, s, trial)?;
    Ok(Instance {
        op,
        x0,
        y,
        operator_key,
        signal_key,
    })
}

fn digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn signal_digest(x0: &BinarySignal) -> String {
    let support: Vec<String> = x0.support().iter().map(|i| i.to_string()).collect();
    digest(&format!("{} {}", x0.len(), support.join(" ")))
}

/// Runs `program` on a dense matrix and scores it against `x0`.
///
/// Basis pursuit counts as a success when it is optimal and within the
/// success radius; least squares only needs to be within the radius.
pub fn score_program(
    program: Program,
    a: &DMatrix<f64>,
    y: &[f64],
    x0: &BinarySignal,
    opts: &SolverOptions,
) -> Result<ProgramResult> {
    let out = solve_program(program, a, y, opts)?;
    let error_l2 = if out.x_star.len() == x0.len() {
        dist2(&out.x_star, &x0.to_f64())
    } else {
        f64::INFINITY
    };
    let close = error_l2 <= opts.success_radius;
    let success = match program {
        Program::Ls => close,
        Program::Bp | Program::BpPlus => close && out.status == SolverStatus::Optimal,
    };
    Ok(ProgramResult {
        program,
        status: out.status,
        error_l2,
        residual_l2: out.residual_l2,
        iterations: out.iterations,
        success,
    })
}

/// Certificate summary for `x0` under `op`, or `None` if `μσ = 0`.
pub fn certificate_summary(op: &MeasurementOperator, x0: &BinarySignal, eta: Option<f64>) -> Result<Option<CertificateSummary>> {
    if !(op.mu() > 0.0 && op.sigma() > 0.0) {
        return Ok(None);
    }
    let cert = build_certificate(op, x0)?;
    let report = margin_report(&cert.margins, &cert.support, cert.t_target)?;
    let noise_radius = match eta {
        Some(eta) if cert.verified => Some(certified_noise_radius(&cert, eta)?.radius),
        _ => None,
    };
    let theorem_bound = match eta {
        Some(eta) if op.m() > 0 => Some(noise_error_bound(
            x0.sparsity(),
            x0.len(),
            op.m(),
            op.sigma(),
            op.mu(),
            eta,
        )?),
        _ => None,
    };
    Ok(Some(CertificateSummary {
        verified: cert.verified,
        flipped: cert.flipped,
        t_target: cert.t_target,
        t_actual: report.t_actual,
        nu_norm: cert.nu_norm(),
        noise_radius,
        theorem_bound,
    }))
}

/// Runs the full pipeline for cell `(s, m)`, trial `trial`. Solver
/// failures are recorded in the result.
pub fn run_trial(config: &ExperimentConfig, s: usize, m: usize, trial: usize) -> Result<TrialResult> {
    let inst = sample_instance(config, s, m, trial)?;
    let a = inst.op.to_dense()?;
    let programs = config
        .programs
        .iter()
        .map(|&p| score_program(p, &a, &inst.y, &inst.x0, &config.solver))
        .collect::<Result<Vec<_>>>()?;
    let certificate = certificate_summary(&inst.op, &inst.x0, config.eta)?;
    Ok(TrialResult {
        s,
        m,
        trial,
        operator_key: inst.operator_key,
        signal_key: inst.signal_key,
        operator_digest: digest(&to_manifest(&inst.op)),
        signal_digest: signal_digest(&inst.x0),
        programs,
        certificate,
    })
}
