use lrmr::distributed::{consensus_check, dgd_solve, lift_to_centralized, DistributedProblem};
use lrmr::problem::SensingProblem;
use lrmr::solvers::SolverConfig;
use std::time::Instant;

#[test]
fn seed_sweep_shared_init() {
    for seed in 1..=6u64 {
        let p = SensingProblem::gen(50, 25, 5, 750, true, seed).unwrap();
        let dp = DistributedProblem::split_default(&p, 5, vec![5; 5], seed).unwrap();
        for mu in [0.0, 1e-12] {
            let cfg = SolverConfig { mu, seed: seed + 100, max_iters: 100_000, record_every: 10_000, ..Default::default() };
            let t = Instant::now();
            let (state, trace) = dgd_solve(&dp, &cfg).unwrap();
            let (_, dev) = consensus_check(&state, 1e-6);
            let last = trace.final_row();
            println!(
                "seed={seed} mu={mu:.0e} it={} term={:?} fit={:.2e} opt={:.2e} cons={:.2e} dev={:.2e} wall={:.1?}",
                trace.final_iter, trace.termination, last.fit_error, last.opt_error,
                last.consensus_error.unwrap(), dev, t.elapsed()
            );
        }
    }
}

#[test]
fn grad_tol_termination() {
    // criterion-8 style: small random instances driven to stacked grad <= 1e-10
    for seed in 1..=3u64 {
        let p = SensingProblem::gen(8, 6, 2, 3 * 8 * 2, true, seed ^ 0xd15).unwrap();
        let dp = DistributedProblem::split_default(&p, 3, vec![2; 3], seed ^ 0xd15).unwrap();
        let cfg = SolverConfig {
            seed: seed + 7,
            stop_grad_tol: 1e-10,
            stop_opt_tol: 0.0,
            max_iters: 200_000,
            record_every: 50_000,
            ..Default::default()
        };
        let t = Instant::now();
        let (state, trace) = dgd_solve(&dp, &cfg).unwrap();
        let (_, dev) = consensus_check(&state, 1e-6);
        let (_, lifted_grad) = lift_to_centralized(&dp, &state, 1e-6).unwrap();
        println!(
            "seed={seed} it={} term={:?} grad={:.2e} dev={:.2e} lifted_grad={:.2e} wall={:.1?}",
            trace.final_iter, trace.termination, trace.final_row().grad_norm, dev, lifted_grad, t.elapsed()
        );
    }
}
