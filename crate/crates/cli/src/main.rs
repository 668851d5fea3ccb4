//! `lrmr` — command-line experiment runner for low-rank matrix recovery.
//!
//! Subcommands:
//! * `centralized`  — gradient descent on the factored objective over a μ
//!   sweep, one trace CSV per run plus a JSON summary.
//! * `distributed`  — the penalty-consensus variant over a network of agents.
//! * `landscape`    — classify a candidate point (strict saddle / global
//!   minimum), report as JSON on stdout.
//! * `verify`       — randomized derivative/adjoint/lift/eigen suites.
//!
//! Exit codes are the only success/failure channel: 0 success, 1 bad flags,
//! 2 divergence, 3 I/O failure, 4 undetermined classification under
//! `--strict`, 5 verification failure. Human-readable output goes to stderr;
//! machine output goes to files or stdout.

mod error;
mod io_util;
mod landscape_cmd;
mod manifest;
mod runs;
mod verify_cmd;

use clap::{Args, Parser, Subcommand};
use error::{CliError, ExitResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "lrmr", version, about = "Low-rank matrix recovery experiments")]
struct Cli {
    /// Output directory (default: $LRMR_OUT_DIR, then ./out)
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Centralized matrix sensing: gradient descent over a μ sweep
    Centralized(CentralizedArgs),
    /// Distributed (penalty-consensus) matrix sensing over a μ sweep
    Distributed(DistributedArgs),
    /// Classify a candidate critical point
    Landscape(landscape_cmd::LandscapeArgs),
    /// Run the randomized verification suites
    Verify(verify_cmd::VerifyArgs),
}

/// Shared solver flags. Defaults reproduce the experiment presets.
#[derive(Args, Debug, Clone)]
pub struct SolverFlags {
    /// Regularization weights to sweep (comma separated; default preset list)
    #[arg(long = "mu", value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generate the operator with raw N(0,1) entries (no 1/√p scaling)
    #[arg(long)]
    pub unnormalized: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub opt_tol: f64,
    /// Use a fixed step size instead of backtracking
    #[arg(long, allow_hyphen_values = true)]
    pub fixed_step: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub eta0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub shrink: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub armijo_c: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 10)]
    pub record_every: u64,
    /// Concurrent runs in the μ sweep
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug)]
pub struct CentralizedArgs {
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    /// Measurements (default 3·max(m,n)·r)
    #[arg(long)]
    pub p: Option<usize>,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Re-run exactly the parameters recorded in a summary manifest
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistributedArgs {
    /// Number of agents
    #[arg(long = "J", default_value_t = 5)]
    pub agents: usize,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Columns per agent (all agents equal; total m = J·mj)
    #[arg(long, default_value_t = 5)]
    pub mj: usize,
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    /// Hard threshold for the random network generator
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub threshold: f64,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Re-run exactly the parameters recorded in a summary manifest
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not failures
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let out_dir = io_util::resolve_out_dir(cli.out_dir);
    let result: ExitResult = match cli.command {
        Command::Centralized(args) => runs::run_centralized(args, &out_dir),
        Command::Distributed(args) => runs::run_distributed(args, &out_dir),
        Command::Landscape(args) => landscape_cmd::run(args),
        Command::Verify(args) => verify_cmd::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

impl SolverFlags {
    pub fn step_mode(&self) -> lrmr::StepMode {
        match self.fixed_step {
            Some(eta) => lrmr::StepMode::Fixed(eta),
            None => lrmr::StepMode::Backtracking {
                eta0: self.eta0,
                shrink: self.shrink,
                c: self.armijo_c,
            },
        }
    }

    pub fn config(&self, mu: f64) -> lrmr::SolverConfig {
        lrmr::SolverConfig {
            mu,
            max_iters: self.max_iters,
            step_mode: self.step_mode(),
            init_scale: self.init_scale,
            seed: self.seed,
            stop_grad_tol: self.grad_tol,
            stop_opt_tol: self.opt_tol,
            record_every: self.record_every,
        }
    }

    pub fn validate(&self, mu_list: &[f64]) -> Result<(), CliError> {
        for &mu in mu_list {
            if !(mu >= 0.0) || !mu.is_finite() {
                return Err(CliError::flags(format!("mu must be nonnegative, got {mu}")));
            }
        }
        if mu_list.is_empty() {
            return Err(CliError::flags("at least one mu value is required"));
        }
        if self.jobs == 0 {
            return Err(CliError::flags("--jobs must be at least 1"));
        }
        // the solver's own validation covers the step parameters
        self.config(0.0)
            .validate()
            .map_err(|e| CliError::flags(e.to_string()))
    }
}
