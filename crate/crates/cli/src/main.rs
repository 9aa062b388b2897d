//! `binsense` command-line driver.
//!
//! Exit codes: 0 on success, 2 on invalid input or a failed validation,
//! 3 when a solver does not reach optimality.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use binsense::certificates::{build_certificate, certified_noise_radius, margin_report, search_certificate};
use binsense::harness::output::{emit_outputs, read_vector, write_vector, CsvSink};
use binsense::harness::trial::sample_instance;
use binsense::harness::{run_phase_grid_with, ExperimentConfig};
use binsense::operators::manifest::{read_manifest, write_manifest};
use binsense::proof_analysis::{validate_proof, ValidateConfig};
use binsense::solvers::{solve_program, Program, SolverOptions};
use binsense::{BinarySignal, Ensemble};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "binsense", version, about = "Binary signal recovery from biased circulant and Toeplitz measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an operator, a binary signal and its measurements.
    Gen {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// trial index used for seeding
        #[arg(long, default_value_t = 0)]
        trial: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a recovery program on stored measurements.
    Solve {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long, default_value = "bp")]
        program: Program,
        /// ground truth for reporting the error
        #[arg(long)]
        truth: Option<PathBuf>,
        /// where to write the solution vector
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Build and verify the dual certificate for a stored signal.
    Certify {
        #[arg(long)]
        operator: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        /// noise level for the certified error radius
        #[arg(long)]
        eta: Option<f64>,
        /// also run the linear-programming certificate search
        #[arg(long)]
        search: bool,
    },
    /// Run a phase-transition grid and write CSV, PGM and manifest files.
    Phase {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the quadratic-form machinery of the recovery proof numerically.
    ValidateProof {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, default_value_t = 4)]
        s: usize,
        #[arg(long, default_value = "rademacher:1")]
        ensemble: Ensemble,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// number of audited indices
        #[arg(long, default_value_t = 8)]
        indices: usize,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` config file; flags below override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    /// sparsity grid, e.g. `5:100:5` or `3,7`
    #[arg(long)]
    s: Option<String>,
    /// measurement-count grid
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    ensemble: Option<String>,
    /// circulant or toeplitz
    #[arg(long)]
    operator: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// comma list of bp, ls, bp+
    #[arg(long)]
    programs: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// extra `key=value` settings
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-8)]
    tolerance_feas: f64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance_opt: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iterations: usize,
}

enum Failure {
    Invalid(String),
    Solver(String),
}

impl From<binsense::Error> for Failure {
    fn from(e: binsense::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("n", &self.n),
            ("s", &self.s),
            ("m", &self.m),
            ("trials", &self.trials),
            ("ensemble", &self.ensemble),
            ("operator", &self.operator),
            ("mu", &self.mu),
            ("programs", &self.programs),
            ("eta", &self.eta),
            ("seed", &self.seed),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Invalid(format!("expected KEY=VALUE, got `{kv}`")))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn read_signal(path: &Path) -> Result<BinarySignal, Failure> {
    Ok(BinarySignal::from_values(&read_vector(path)?)?)
}

fn gen(exp: &ExperimentArgs, trial: usize, out: &Path) -> CliResult {
    let cfg = exp.resolve()?;
    let (s, m) = (cfg.s_values[0], cfg.m_values[0]);
    let inst = sample_instance(&cfg, s, m, trial)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    write_manifest(&inst.op, &out.join("operator.txt"))?;
    write_vector(&out.join("signal.txt"), &inst.x0.to_f64())?;
    write_vector(&out.join("measurements.txt"), &inst.y)?;
    println!("n = {}", cfg.n);
    println!("m = {m}");
    println!("s = {s}");
    println!("operator_key = {}", inst.operator_key);
    println!("signal_key = {}", inst.signal_key);
    println!("wrote {}", out.display());
    Ok(())
}

fn solve(
    operator: &Path,
    measurements: &Path,
    program: Program,
    truth: Option<&Path>,
    output: Option<&Path>,
    solver: &SolverArgs,
) -> CliResult {
    let op = read_manifest(operator)?;
    let y = read_vector(measurements)?;
    let opts = SolverOptions {
        tolerance_feas: solver.tolerance_feas,
        tolerance_opt: solver.tolerance_opt,
        max_iterations: solver.max_iterations,
        ..SolverOptions::default()
    };
    let out = solve_program(program, &op.to_dense()?, &y, &opts)?;
    println!("program = {program}");
    println!("status = {}", out.status);
    println!("objective = {:e}", out.objective);
    println!("residual_l2 = {:e}", out.residual_l2);
    println!("iterations = {}", out.iterations);
    if let Some(gap) = out.duality_gap {
        println!("duality_gap = {gap:e}");
    }
    if let Some(t) = truth {
        let x0 = read_signal(t)?;
        if x0.len() != out.x_star.len() {
            return Err(Failure::Invalid("truth has the wrong dimension".into()));
        }
        println!("error_l2 = {:e}", binsense::linalg::dist2(&out.x_star, &x0.to_f64()));
    }
    if let Some(p) = output {
        write_vector(p, &out.x_star)?;
    }
    if out.is_optimal() {
        Ok(())
    } else {
        Err(Failure::Solver(format!("solver ended with status {}", out.status)))
    }
}

fn certify(operator: &Path, signal: &Path, eta: Option<f64>, search: bool) -> CliResult {
    let op = read_manifest(operator)?;
    let x0 = read_signal(signal)?;
    let cert = build_certificate(&op, &x0)?;
    let report = margin_report(&cert.margins, &cert.support, cert.t_target)?;
    println!("verified = {}", cert.verified);
    println!("flipped = {}", cert.flipped);
    println!("rho = {}", cert.rho);
    println!("t_target = {}", cert.t_target);
    println!("t_actual = {}", report.t_actual);
    println!("nu_norm = {}", cert.nu_norm());
    if let Some(eta) = eta {
        match certified_noise_radius(&cert, eta) {
            Ok(r) => println!("noise_radius = {}", r.radius),
            Err(_) => println!("noise_radius = NA"),
        }
    }
    if search {
        let found = search_certificate(&op, &cert.support, &SolverOptions::default())?;
        match found {
            Some(c) => println!("lp_t_best = {}", c.t_best),
            None => println!("lp_t_best = none"),
        }
    }
    Ok(())
}

fn phase(exp: &ExperimentArgs, out: &Path) -> CliResult {
    let cfg = exp.resolve()?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Invalid(format!("{}: {e}", out.display())))?;
    let mut sink = CsvSink::create(&out.join("phase.csv"))?;
    let grid = run_phase_grid_with(&cfg, |cell, _| sink.push(cell))?;
    drop(sink);
    for p in emit_outputs(&grid, &cfg, out)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn validate(n: usize, m: usize, s: usize, ensemble: Ensemble, mu: f64, seed: u64, trials: usize, indices: usize) -> CliResult {
    let rows = validate_proof(&ValidateConfig {
        n,
        m,
        s,
        ensemble,
        mu,
        seed,
        trials,
        indices,
    })?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
    println!("{:<32} {:>14} {:>14} {:>14}  result  note", "quantity", "formula", "empirical", "bound");
    let mut failed = 0;
    for r in &rows {
        failed += !r.pass as usize;
        println!(
            "{:<32} {:>14} {:>14.6e} {:>14}  {:<6}  {}",
            r.quantity,
            fmt(r.formula),
            r.empirical,
            fmt(r.bound),
            if r.pass { "pass" } else { "FAIL" },
            r.note
        );
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("{failed} check(s) failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { exp, trial, out } => gen(exp, *trial, out),
        Command::Solve {
            operator,
            measurements,
            program,
            truth,
            output,
            solver,
        } => solve(operator, measurements, *program, truth.as_deref(), output.as_deref(), solver),
        Command::Certify {
            operator,
            signal,
            eta,
            search,
        } => certify(operator, signal, *eta, *search),
        Command::Phase { exp, out } => phase(exp, out),
        Command::ValidateProof {
            n,
            m,
            s,
            ensemble,
            mu,
            seed,
            trials,
            indices,
        } => validate(*n, *m, *s, *ensemble, *mu, *seed, *trials, *indices),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
