//! `lrmr landscape` — classify one candidate point and print the report as
//! JSON on stdout.

use crate::error::{CliError, ExitResult};
use crate::io_util::{load_pair, save_pair};
use clap::Args;
use lrmr::factorized::scale_factors;
use lrmr::landscape::{classify, Classification, ClassifyThresholds};
use lrmr::linalg::random_with_condition;
use lrmr::problem::SensingProblem;
use lrmr::solvers::{gd_solve, SolveError, SolverConfig};
use lrmr::{rng, FactorPair, Matrix};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct LandscapeArgs {
    /// Use the 1×1 toy instance f(x) = ½(1−x)²
    #[arg(long)]
    pub toy: bool,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub m: usize,
    #[arg(long, default_value_t = 5)]
    pub r: usize,
    /// Measurements (default 3·max(m,n)·r)
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub unnormalized: bool,

    /// Evaluate at explicit scalars "u,v" (toy instance only)
    #[arg(long, allow_hyphen_values = true)]
    pub at: Option<String>,
    /// Evaluate at the zero pair
    #[arg(long)]
    pub at_zero: bool,
    /// Run the solver first and evaluate at its result
    #[arg(long)]
    pub at_solution: bool,
    /// After solving, unbalance the solution with a random G of this
    /// condition number
    #[arg(long = "scale-G", allow_hyphen_values = true)]
    pub scale_g: Option<f64>,
    /// Load the point from a JSON file ({"u": [[..]], "v": [[..]]})
    #[arg(long)]
    pub load: Option<PathBuf>,
    /// Save the evaluated point to a JSON file
    #[arg(long)]
    pub save: Option<PathBuf>,

    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Exit with code 4 when the classification is Undetermined
    #[arg(long)]
    pub strict: bool,
    #[arg(long, default_value_t = 100_000)]
    pub max_iters: u64,
}

pub fn run(args: LandscapeArgs) -> ExitResult {
    if !(args.mu >= 0.0) || !args.mu.is_finite() {
        return Err(CliError::flags(format!("mu must be nonnegative, got {}", args.mu)));
    }
    let problem = if args.toy {
        SensingProblem::scalar_toy()
    } else {
        let p = args.p.unwrap_or(3 * args.m.max(args.n) * args.r);
        SensingProblem::gen(args.n, args.m, args.r, p, !args.unnormalized, args.seed)
            .map_err(|e| CliError::flags(e.to_string()))?
    };

    let sources = [
        args.at.is_some(),
        args.at_zero,
        args.at_solution || args.scale_g.is_some(),
        args.load.is_some(),
    ];
    if sources.iter().filter(|&&s| s).count() != 1 {
        return Err(CliError::flags(
            "pick exactly one point source: --at, --at-zero, --at-solution[/--scale-G], or --load",
        ));
    }

    let point = if let Some(at) = &args.at {
        if !args.toy {
            return Err(CliError::flags("--at takes scalars and needs --toy"));
        }
        let parts: Vec<&str> = at.split(',').collect();
        if parts.len() != 2 {
            return Err(CliError::flags("--at expects \"u,v\""));
        }
        let u: f64 = parts[0].trim().parse().map_err(|_| CliError::flags("bad --at value"))?;
        let v: f64 = parts[1].trim().parse().map_err(|_| CliError::flags("bad --at value"))?;
        FactorPair::scalar(u, v)
    } else if args.at_zero {
        FactorPair::new(
            Matrix::zeros(problem.n(), problem.r()),
            Matrix::zeros(problem.m(), problem.r()),
        )
        .expect("zero pair shapes")
    } else if args.at_solution || args.scale_g.is_some() {
        let cfg = SolverConfig { seed: args.seed, max_iters: args.max_iters, ..Default::default() };
        eprintln!("solving (seed {}) to obtain the evaluation point...", args.seed);
        let (pair, trace) = gd_solve(&problem, &cfg).map_err(|e| match e {
            SolveError::Diverged { iter, .. } => {
                CliError::divergence(format!("solver diverged at iteration {iter}"))
            }
            SolveError::Invalid(err) => CliError::flags(err.to_string()),
        })?;
        eprintln!(
            "solver: {:?} after {} iterations, opt_error {:.3e}",
            trace.termination,
            trace.final_iter,
            trace.final_row().opt_error
        );
        match args.scale_g {
            None => pair,
            Some(cond) => {
                if !(cond >= 1.0) || !cond.is_finite() {
                    return Err(CliError::flags("--scale-G needs a condition number >= 1"));
                }
                let g = random_with_condition(problem.r(), cond, &mut rng::seeded(args.seed ^ 0x5ca1e));
                scale_factors(&pair, &g).map_err(|e| CliError::flags(e.to_string()))?
            }
        }
    } else {
        let path = args.load.as_ref().expect("source checked above");
        load_pair(path)?
    };

    if let Some(path) = &args.save {
        save_pair(path, &point)?;
        eprintln!("point -> {}", path.display());
    }

    let thresholds = ClassifyThresholds::for_problem(&problem);
    let report = classify(&problem, &point, args.mu, &thresholds)
        .map_err(|e| CliError::flags(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| CliError::io(e.to_string()))?
    );
    if args.strict && report.classification == Classification::Undetermined {
        return Err(CliError::strict_undetermined());
    }
    Ok(())
}
