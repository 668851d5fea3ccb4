//! `lrmr verify` — run the randomized verification suites and exit 0 only if
//! every suite passes.

use crate::error::{CliError, ExitResult};
use clap::Args;
use lrmr::check::{run_all, VerifyConfig};

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trials per suite
    #[arg(long, default_value_t = 25)]
    pub trials: usize,
}

pub fn run(args: VerifyArgs) -> ExitResult {
    if args.trials == 0 {
        return Err(CliError::flags("--trials must be at least 1"));
    }
    let cfg = VerifyConfig { seed: args.seed, trials: args.trials };
    let reports = run_all(&cfg);
    let mut failing = 0;
    for report in &reports {
        eprintln!("{}", report.summary_line());
        if !report.passed() {
            failing += 1;
        }
    }
    if failing > 0 {
        Err(CliError::verify_failed(failing))
    } else {
        eprintln!("all {} suites passed", reports.len());
        Ok(())
    }
}
