//! Acceptance suite: one test per criterion, each printing a pass line with
//! the measured quantities (run with `--nocapture` to see them).

use lrmr::check::{self, VerifyConfig};
use lrmr::distributed::{consensus_check, dgd_solve, lift_to_centralized, DistributedProblem};
use lrmr::factorized::{self, FactorPair};
use lrmr::landscape::{self, Classification, ClassifyThresholds, DegenerateOutcome};
use lrmr::linalg;
use lrmr::problem::SensingProblem;
use lrmr::rng;
use lrmr::solvers::{gd_solve, SolverConfig};
use lrmr::Matrix;

fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual}, expected {expected} ± {tol}"
    );
}

/// Criterion 1: the toy instance reproduces the closed-form Hessians and
/// their extreme eigenvalues exactly.
#[test]
fn acceptance_1_toy_hessians_exact() {
    let p = SensingProblem::scalar_toy();

    let h0 = landscape::dense_hessian(&p, &FactorPair::scalar(0.0, 0.0), 0.0).unwrap();
    let expect0 = Matrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
    assert!((h0 - &expect0).amax() <= 1e-12, "Hessian of g at the origin");

    let mu = 1.0 / 16.0;
    let h1 = landscape::dense_hessian(&p, &FactorPair::scalar(1.0, 1.0), mu).unwrap();
    let expect1 = Matrix::from_row_slice(2, 2, &[1.125, 0.875, 0.875, 1.125]);
    assert!((h1 - &expect1).amax() <= 1e-12, "Hessian of regularized g at (1,1)");

    let eig0 = landscape::min_eig_hessian(&p, &FactorPair::scalar(0.0, 0.0), 0.0, 1e-10, 200, 1).unwrap();
    assert_close(eig0.value, -1.0, 1e-6, "min eigenvalue at the origin");

    let eig1 = landscape::min_eig_hessian(&p, &FactorPair::scalar(1.0, 1.0), mu, 1e-10, 200, 1).unwrap();
    assert_close(eig1.value, 0.25, 1e-6, "min eigenvalue of regularized g at (1,1)");

    println!(
        "ACCEPTANCE 1 PASS: toy Hessians exact; min eig (origin) = {:.9}, min eig (1,1; mu=1/16) = {:.9}",
        eig0.value, eig1.value
    );
}

/// Criterion 2: derivative oracles on 50 random small instances.
#[test]
fn acceptance_2_derivative_oracles() {
    let cfg = VerifyConfig { seed: 2024, trials: 50 };
    let grad = check::suite_gradient_fd(&cfg);
    let hess = check::suite_hessian_fd(&cfg);
    let cons = check::suite_hessian_consistency(&cfg);
    for report in [&grad, &hess, &cons] {
        assert!(report.passed(), "{}", report.summary_line());
    }
    println!(
        "ACCEPTANCE 2 PASS: gradient FD worst {:.2e} (tol 1e-5), Hessian FD worst {:.2e} (tol 1e-4), consistency/symmetry worst {:.2e} (tol 1e-10)",
        grad.worst, hess.worst, cons.worst
    );
}

/// Criterion 3: balanced-lift invariants on 100 random pairs, and lifted
/// exact critical points stay critical for the regularized objective.
#[test]
fn acceptance_3_balanced_lift() {
    let cfg = VerifyConfig { seed: 33, trials: 100 };
    let lift = check::suite_balanced_lift(&cfg);
    assert!(lift.passed(), "{}", lift.summary_line());
    let critical = check::suite_lift_critical_transport(&cfg);
    assert!(critical.passed(), "{}", critical.summary_line());
    println!(
        "ACCEPTANCE 3 PASS: lift invariants worst {:.2e} (tol 1e-8); lifted critical points worst {:.2e} (tol 1e-8)",
        lift.worst, critical.worst
    );
}

/// Criterion 4: the degenerate escape certificate at the zero pair on 10
/// random instances: curvature −1 exactly, and the eigensolver agrees the
/// point is a saddle.
#[test]
fn acceptance_4_degenerate_escape() {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let p = SensingProblem::gen(8, 6, 2, 2 * 8 * 6, false, 1000 + seed).unwrap();
        let w = FactorPair::new(Matrix::zeros(8, 2), Matrix::zeros(6, 2)).unwrap();
        let esc = match landscape::degenerate_escape(&p, &w).unwrap() {
            DegenerateOutcome::Escape(esc) => esc,
            other => panic!("expected an escape direction, got {other:?}"),
        };
        let curv = factorized::hess_bilinear(&p, &w, &esc.direction, 0.0).unwrap();
        assert_close(curv, -1.0, 1e-6, "escape curvature");
        worst = worst.max((curv + 1.0).abs());
        let eig = landscape::min_eig_hessian(&p, &w, 0.0, 1e-8, 600, seed).unwrap();
        assert!(eig.value < 0.0, "min eig {} not negative at the zero pair", eig.value);
    }
    println!("ACCEPTANCE 4 PASS: 10/10 escape certificates at -1 (worst deviation {worst:.2e}), min eig negative");
}

/// Criterion 5: centralized experiment preset, all five regularization
/// weights and five seeds reach opt_error < 1e-10 within the iteration cap.
#[test]
fn acceptance_5_centralized_experiment() {
    let mus = [0.0, 1e-4, 1e-3, 1e-2, 1e-1];
    let mut mu0_successes = 0;
    let mut total_iters = 0u64;
    for seed in 1..=5u64 {
        let p = SensingProblem::gen(40, 50, 5, 750, true, seed).unwrap();
        for &mu in &mus {
            let cfg = SolverConfig { mu, seed: 100 + seed, ..Default::default() };
            let (_, trace) = gd_solve(&p, &cfg).unwrap();
            let last = trace.final_row();
            assert!(
                last.opt_error < 1e-10 && trace.final_iter <= 100_000,
                "seed {seed} mu {mu}: opt_error {:.3e} after {} iterations ({:?})",
                last.opt_error,
                trace.final_iter,
                trace.termination
            );
            if mu == 0.0 {
                mu0_successes += 1;
            }
            total_iters += trace.final_iter;
        }
    }
    assert_eq!(mu0_successes, 5, "unregularized runs must succeed on all seeds");
    println!(
        "ACCEPTANCE 5 PASS: 25/25 runs reached opt_error < 1e-10 (mu=0 in 5/5 seeds), mean iterations {}",
        total_iters / 25
    );
}

/// Criterion 6: distributed experiment preset. Unregularized runs reach
/// global optimality and exact consensus; a tiny regularizer keeps
/// near-consensus.
#[test]
fn acceptance_6_distributed_experiment() {
    let mut worst_consensus_mu0 = 0.0f64;
    let mut worst_consensus_tiny = 0.0f64;
    for seed in 1..=5u64 {
        let p = SensingProblem::gen(50, 25, 5, 750, true, seed).unwrap();
        let dp = DistributedProblem::split_default(&p, 5, vec![5; 5], seed).unwrap();
        for mu in [0.0, 1e-12] {
            let cfg = SolverConfig { mu, seed: 100 + seed, ..Default::default() };
            let (_, trace) = dgd_solve(&dp, &cfg).unwrap();
            let last = trace.final_row();
            let consensus = last.consensus_error.unwrap();
            if mu == 0.0 {
                assert!(
                    last.fit_error < 1e-8 && last.opt_error < 1e-8 && consensus < 1e-8,
                    "seed {seed} mu=0: fit {:.2e} opt {:.2e} consensus {:.2e} ({:?} at {})",
                    last.fit_error,
                    last.opt_error,
                    consensus,
                    trace.termination,
                    trace.final_iter
                );
                worst_consensus_mu0 = worst_consensus_mu0.max(consensus);
            } else {
                assert!(
                    consensus < 1e-6,
                    "seed {seed} mu=1e-12: consensus {:.2e} not near-consensus",
                    consensus
                );
                worst_consensus_tiny = worst_consensus_tiny.max(consensus);
            }
        }
    }
    println!(
        "ACCEPTANCE 6 PASS: mu=0 exact consensus (worst {worst_consensus_mu0:.2e} < 1e-8); mu=1e-12 near-consensus (worst {worst_consensus_tiny:.2e} < 1e-6)"
    );
}

/// Criterion 7: unbalanced global minima keep their classification: after an
/// ill-conditioned rescaling the classifier still reports GlobalMin with a
/// near-nonnegative spectrum.
#[test]
fn acceptance_7_unbalanced_global_minimum() {
    let p = SensingProblem::gen(40, 50, 5, 750, true, 7).unwrap();
    let cfg = SolverConfig { seed: 77, ..Default::default() };
    let (solution, trace) = gd_solve(&p, &cfg).unwrap();
    assert!(trace.final_row().opt_error < 1e-10, "solver must converge first");
    let thresholds = ClassifyThresholds::for_problem(&p);
    let mut rng = rng::seeded(778);
    for trial in 0..10 {
        let g = linalg::random_with_condition(5, 100.0, &mut rng);
        let scaled = factorized::scale_factors(&solution, &g).unwrap();
        let report = landscape::classify(&p, &scaled, 0.0, &thresholds).unwrap();
        assert_eq!(
            report.classification,
            Classification::GlobalMin,
            "trial {trial}: classified {:?} (grad {:.2e}, opt {:.2e})",
            report.classification,
            report.grad_norm,
            report.opt_error
        );
        assert!(report.grad_norm <= thresholds.eps_crit);
        let min_eig = report.min_eig.unwrap();
        let hnorm = report.hess_norm_est.unwrap();
        assert!(
            min_eig >= -1e-6 * hnorm,
            "trial {trial}: min eig {min_eig:.3e} below -1e-6·‖H‖ ({hnorm:.3e})"
        );
    }
    println!("ACCEPTANCE 7 PASS: 10/10 rescaled solutions (cond 1e2) classified GlobalMin with min eig ≥ -1e-6·‖H‖");
}

/// Criterion 8: terminal states of unregularized distributed descent are
/// consensus states whose lift is centrally critical.
#[test]
fn acceptance_8_consensus_at_critical_points() {
    let mut worst_dev = 0.0f64;
    let mut worst_grad = 0.0f64;
    for seed in 0..10u64 {
        let n = 6 + (seed as usize) % 3;
        let agents = 2 + (seed as usize) % 3;
        let mj = 2;
        let m = agents * mj;
        let p = SensingProblem::gen(n, m, 2, 3 * n.max(m) * 2, true, 2000 + seed).unwrap();
        let dp = DistributedProblem::split_default(&p, agents, vec![mj; agents], 2000 + seed).unwrap();
        let cfg = SolverConfig {
            seed: 3000 + seed,
            stop_grad_tol: 1e-10,
            stop_opt_tol: 0.0,
            max_iters: 400_000,
            record_every: 100_000,
            ..Default::default()
        };
        let (state, trace) = dgd_solve(&dp, &cfg).unwrap();
        assert!(
            trace.final_row().grad_norm <= 1e-10,
            "seed {seed}: stacked gradient {:.2e} after {} iterations ({:?})",
            trace.final_row().grad_norm,
            trace.final_iter,
            trace.termination
        );
        let (ok, dev) = consensus_check(&state, 1e-6);
        assert!(ok, "seed {seed}: consensus deviation {dev:.2e} > 1e-6");
        let (_, grad_norm) = lift_to_centralized(&dp, &state, 1e-6).unwrap();
        assert!(
            grad_norm <= 1e-9,
            "seed {seed}: lifted centralized gradient {grad_norm:.2e} > 1e-9"
        );
        worst_dev = worst_dev.max(dev);
        worst_grad = worst_grad.max(grad_norm);
    }
    println!(
        "ACCEPTANCE 8 PASS: 10/10 terminal states; worst consensus deviation {worst_dev:.2e}, worst lifted gradient {worst_grad:.2e}"
    );
}

/// Criterion 9: the Lanczos minimum eigenvalue matches a dense
/// eigendecomposition of the assembled Hessian on 20 instances.
#[test]
fn acceptance_9_eigensolver_matches_dense() {
    // (n, m, r) with (n+m)·r up to 200
    let shapes = [(50usize, 50usize, 2usize), (40, 30, 2), (20, 20, 5), (10, 8, 4), (6, 5, 2)];
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut rng = rng::seeded(909);
    for round in 0..4u64 {
        for &(n, m, r) in &shapes {
            assert!((n + m) * r <= 200);
            let p = SensingProblem::gen(n, m, r, 3 * n.max(m) * r, true, 4000 + round * 10 + count).unwrap();
            let w = FactorPair::new(
                rng::gaussian_matrix(&mut rng, n, r),
                rng::gaussian_matrix(&mut rng, m, r),
            )
            .unwrap();
            let mu = if count % 2 == 0 { 0.0 } else { 0.05 };
            let err = check::eigen_vs_dense_error(&p, &w, mu, 5000 + count).unwrap();
            assert!(err <= 1e-6, "instance {count} ({n},{m},{r}): |Lanczos - dense| = {err:.3e}");
            worst = worst.max(err);
            count += 1;
        }
    }
    assert_eq!(count, 20);
    println!("ACCEPTANCE 9 PASS: 20/20 instances, worst |Lanczos - dense| = {worst:.3e} (tol 1e-6)");
}
