//! The μ-sweep runners behind `centralized` and `distributed`.

use crate::error::{CliError, ExitResult};
use crate::io_util::{format_mu, write_trace_csv};
use crate::manifest::{RunManifest, RunResult, Summary};
use crate::{CentralizedArgs, DistributedArgs};
use lrmr::distributed::{dgd_solve, DistributedProblem, Network};
use lrmr::problem::SensingProblem;
use lrmr::solvers::{gd_solve, IterTrace, SolveError, SolverConfig};
use rayon::prelude::*;
use std::fs;
use std::path::Path;
use std::time::Instant;

const CENTRALIZED_MU: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 0.0];
// {0} ∪ {10^a : a = 0, -2, ..., -12}
const DISTRIBUTED_MU: [f64; 8] = [0.0, 1.0, 1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];

pub fn run_centralized(args: CentralizedArgs, out_dir: &Path) -> ExitResult {
    let manifest = match &args.manifest {
        Some(path) => load_manifest(path, "centralized")?,
        None => {
            let p = args.p.unwrap_or(3 * args.m.max(args.n) * args.r);
            let mu_list = args.solver.mu.clone().unwrap_or_else(|| CENTRALIZED_MU.to_vec());
            args.solver.validate(&mu_list)?;
            RunManifest {
                subcommand: "centralized".into(),
                n: args.n,
                m: args.m,
                r: args.r,
                p: vec![p],
                mu_list,
                seed: args.solver.seed,
                normalized: !args.solver.unnormalized,
                max_iters: args.solver.max_iters,
                grad_tol: args.solver.grad_tol,
                opt_tol: args.solver.opt_tol,
                step_mode: args.solver.step_mode(),
                init_scale: args.solver.init_scale,
                record_every: args.solver.record_every,
                jobs: args.solver.jobs,
                agents: None,
                block_widths: None,
                network_threshold: None,
                library_version: RunManifest::library_version(),
                platform: RunManifest::platform(),
            }
        }
    };

    let problem = SensingProblem::gen(
        manifest.n,
        manifest.m,
        manifest.r,
        manifest.p[0],
        manifest.normalized,
        manifest.seed,
    )
    .map_err(|e| CliError::flags(e.to_string()))?;

    eprintln!(
        "centralized: n={} m={} r={} p={} seed={} sweeping {} mu value(s)",
        manifest.n,
        manifest.m,
        manifest.r,
        manifest.p[0],
        manifest.seed,
        manifest.mu_list.len()
    );
    let runs = sweep(&manifest, out_dir, "centralized", |cfg| {
        gd_solve(&problem, &cfg).map(|(_, trace)| trace)
    })?;
    write_summary(out_dir, "centralized", &manifest, runs)
}

pub fn run_distributed(args: DistributedArgs, out_dir: &Path) -> ExitResult {
    let manifest = match &args.manifest {
        Some(path) => load_manifest(path, "distributed")?,
        None => {
            if args.agents == 0 {
                return Err(CliError::flags("--J must be at least 1"));
            }
            if !(0.0..1.0).contains(&args.threshold) {
                return Err(CliError::flags(format!(
                    "--threshold must be in [0,1), got {}",
                    args.threshold
                )));
            }
            let blocks = vec![args.mj; args.agents];
            let mu_list = args.solver.mu.clone().unwrap_or_else(|| DISTRIBUTED_MU.to_vec());
            args.solver.validate(&mu_list)?;
            let per_agent_p: Vec<usize> = blocks.iter().map(|&mj| 3 * mj.max(args.n) * args.r).collect();
            RunManifest {
                subcommand: "distributed".into(),
                n: args.n,
                m: args.mj * args.agents,
                r: args.r,
                p: per_agent_p,
                mu_list,
                seed: args.solver.seed,
                normalized: !args.solver.unnormalized,
                max_iters: args.solver.max_iters,
                grad_tol: args.solver.grad_tol,
                opt_tol: args.solver.opt_tol,
                step_mode: args.solver.step_mode(),
                init_scale: args.solver.init_scale,
                record_every: args.solver.record_every,
                jobs: args.solver.jobs,
                agents: Some(args.agents),
                block_widths: Some(blocks),
                network_threshold: Some(args.threshold),
                library_version: RunManifest::library_version(),
                platform: RunManifest::platform(),
            }
        }
    };

    let agents = manifest.agents.expect("distributed manifest has agents");
    let blocks = manifest.block_widths.clone().expect("distributed manifest has blocks");
    let threshold = manifest.network_threshold.expect("distributed manifest has threshold");
    // the centralized parent instance the blocks are cut from
    let parent_p = 3 * manifest.m.max(manifest.n) * manifest.r;
    let problem = SensingProblem::gen(
        manifest.n,
        manifest.m,
        manifest.r,
        parent_p,
        manifest.normalized,
        manifest.seed,
    )
    .map_err(|e| CliError::flags(e.to_string()))?;
    let net = if agents == 1 {
        Network::singleton()
    } else {
        Network::gen(agents, threshold, manifest.seed).map_err(|e| CliError::flags(e.to_string()))?
    };
    fs::create_dir_all(out_dir)?;
    let net_file = out_dir.join(format!("distributed_network_seed{}.txt", manifest.seed));
    fs::write(&net_file, net.edge_list())?;
    let dp = DistributedProblem::split(&problem, net, blocks, manifest.seed)
        .map_err(|e| CliError::flags(e.to_string()))?;

    eprintln!(
        "distributed: J={} n={} m={} r={} seed={} sweeping {} mu value(s); network -> {}",
        agents,
        manifest.n,
        manifest.m,
        manifest.r,
        manifest.seed,
        manifest.mu_list.len(),
        net_file.display()
    );
    let runs = sweep(&manifest, out_dir, "distributed", |cfg| {
        dgd_solve(&dp, &cfg).map(|(_, trace)| trace)
    })?;
    write_summary(out_dir, "distributed", &manifest, runs)
}

fn config_from(man: &RunManifest, mu: f64) -> SolverConfig {
    SolverConfig {
        mu,
        max_iters: man.max_iters,
        step_mode: man.step_mode,
        init_scale: man.init_scale,
        seed: man.seed,
        stop_grad_tol: man.grad_tol,
        stop_opt_tol: man.opt_tol,
        record_every: man.record_every,
    }
}

fn sweep<F>(manifest: &RunManifest, out_dir: &Path, prefix: &str, solve: F) -> Result<Vec<RunResult>, CliError>
where
    F: Fn(SolverConfig) -> Result<IterTrace, SolveError> + Sync,
{
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(manifest.jobs)
        .build()
        .map_err(|e| CliError::flags(e.to_string()))?;
    let outcomes: Vec<Result<RunResult, CliError>> = pool.install(|| {
        manifest
            .mu_list
            .par_iter()
            .map(|&mu| {
                let name = format!("{prefix}_mu{}_seed{}.csv", format_mu(mu), manifest.seed);
                let path = out_dir.join(&name);
                let started = Instant::now();
                match solve(config_from(manifest, mu)) {
                    Ok(trace) => {
                        write_trace_csv(&path, &trace.rows)?;
                        let result = RunResult {
                            mu,
                            trace_file: name.clone(),
                            iterations: trace.final_iter,
                            termination: trace.termination,
                            wall_seconds: started.elapsed().as_secs_f64(),
                            final_row: *trace.final_row(),
                        };
                        eprintln!(
                            "  mu={}: {:?} after {} iterations (opt_error {:.3e}) -> {}",
                            format_mu(mu),
                            result.termination,
                            result.iterations,
                            result.final_row.opt_error,
                            name
                        );
                        Ok(result)
                    }
                    Err(SolveError::Diverged { iter, trace }) => {
                        // keep the partial trace around for inspection
                        let _ = write_trace_csv(&path, &trace.rows);
                        Err(CliError::divergence(format!(
                            "mu={} diverged at iteration {iter} (partial trace in {name})",
                            format_mu(mu)
                        )))
                    }
                    Err(SolveError::Invalid(e)) => Err(CliError::flags(e.to_string())),
                }
            })
            .collect()
    });
    outcomes.into_iter().collect()
}

fn write_summary(out_dir: &Path, prefix: &str, manifest: &RunManifest, runs: Vec<RunResult>) -> ExitResult {
    let summary = Summary { manifest: manifest.clone(), runs };
    let path = out_dir.join(format!("{prefix}_summary.json"));
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::io(e.to_string()))?;
    fs::write(&path, text)?;
    eprintln!("summary -> {}", path.display());
    Ok(())
}

fn load_manifest(path: &Path, expected: &str) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)?;
    let manifest = serde_json::from_str::<Summary>(&text)
        .map(|s| s.manifest)
        .or_else(|_| serde_json::from_str::<RunManifest>(&text))
        .map_err(|e| CliError::flags(format!("cannot parse manifest: {e}")))?;
    if manifest.subcommand != expected {
        return Err(CliError::flags(format!(
            "manifest is for `{}`, expected `{expected}`",
            manifest.subcommand
        )));
    }
    Ok(manifest)
}
