//! Randomized verification suites: finite-difference derivative checks,
//! adjoint identities, balanced-lift invariants, escape-direction
//! certificates, and eigensolver cross-checks.
//!
//! These run both inside the test suite and behind the CLI `verify`
//! subcommand. Every oracle here goes through an independent computational
//! path (finite differences of values, explicit inner products, dense
//! eigendecompositions) rather than the formulas it checks.

use crate::error::Result;
use crate::factorized::{self, FactorDirection, FactorPair};
use crate::landscape;
use crate::linalg;
use crate::problem::{gen_ground_truth, SensingProblem};
use crate::rng::{self};
use crate::{Matrix, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Outcome of one randomized suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Worst error observed, in the units of the suite's tolerance.
    pub worst: f64,
    pub tol: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{:<24} {:>4} trials  {:>2} failures  worst {:.3e}  tol {:.1e}  [{}]",
            self.name,
            self.trials,
            self.failures,
            self.worst,
            self.tol,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

/// Knobs for the randomized suites.
#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    pub trials: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { seed: 0, trials: 50 }
    }
}

// ---------------------------------------------------------------------------
// finite-difference building blocks
// ---------------------------------------------------------------------------

/// Entrywise central-difference gradient of a scalar function of a factor
/// pair.
pub fn central_diff_gradient(f: impl Fn(&FactorPair) -> f64, w: &FactorPair, step: f64) -> FactorDirection {
    let (n, r) = (w.u().nrows(), w.u().ncols());
    let m = w.v().nrows();
    let mut du = Matrix::zeros(n, r);
    let mut dv = Matrix::zeros(m, r);
    for j in 0..r {
        for i in 0..n {
            let mut up = w.clone();
            let mut um = w.clone();
            perturb_u(&mut up, i, j, step);
            perturb_u(&mut um, i, j, -step);
            du[(i, j)] = (f(&up) - f(&um)) / (2.0 * step);
        }
        for i in 0..m {
            let mut vp = w.clone();
            let mut vm = w.clone();
            perturb_v(&mut vp, i, j, step);
            perturb_v(&mut vm, i, j, -step);
            dv[(i, j)] = (f(&vp) - f(&vm)) / (2.0 * step);
        }
    }
    FactorDirection { du, dv }
}

fn perturb_u(w: &mut FactorPair, i: usize, j: usize, h: f64) {
    let mut u = w.u().clone();
    u[(i, j)] += h;
    *w = FactorPair::new(u, w.v().clone()).expect("shape preserved");
}

fn perturb_v(w: &mut FactorPair, i: usize, j: usize, h: f64) {
    let mut v = w.v().clone();
    v[(i, j)] += h;
    *w = FactorPair::new(w.u().clone(), v).expect("shape preserved");
}

/// `w + t·d` as a new pair.
pub fn pair_step(w: &FactorPair, t: f64, d: &FactorDirection) -> FactorPair {
    FactorPair::new(w.u() + t * &d.du, w.v() + t * &d.dv).expect("shape preserved")
}

/// Second-order central difference `(f(w+td) + f(w−td) − 2f(w)) / t²`.
pub fn second_central_diff(
    f: impl Fn(&FactorPair) -> f64,
    w: &FactorPair,
    d: &FactorDirection,
    t: f64,
) -> f64 {
    (f(&pair_step(w, t, d)) + f(&pair_step(w, -t, d)) - 2.0 * f(w)) / (t * t)
}

/// Relative error between a claimed gradient and the central-difference
/// gradient of `value`. Exposed separately so a deliberately wrong gradient
/// can be fed in to confirm the check has teeth.
pub fn gradient_fd_rel_error(
    value: impl Fn(&FactorPair) -> f64,
    claimed: &FactorDirection,
    w: &FactorPair,
    step: f64,
) -> f64 {
    let fd = central_diff_gradient(value, w, step);
    let diff = (&claimed.du - &fd.du).norm_squared() + (&claimed.dv - &fd.dv).norm_squared();
    diff.sqrt() / claimed.norm().max(1e-12)
}

// ---------------------------------------------------------------------------
// randomized instances
// ---------------------------------------------------------------------------

fn small_instance(rng: &mut impl Rng) -> (SensingProblem, FactorPair) {
    let n = rng.random_range(2..=6);
    let m = rng.random_range(2..=6);
    let r = rng.random_range(1..=2usize.min(n.min(m)));
    let p = rng.random_range(n.max(m)..=2 * n * m);
    let seed = rng.random::<u64>();
    let problem = SensingProblem::gen(n, m, r, p, false, seed).expect("valid dims");
    let mut sub = rng::seeded(rng.random::<u64>());
    let w = FactorPair::new(
        rng::gaussian_matrix(&mut sub, n, r),
        rng::gaussian_matrix(&mut sub, m, r),
    )
    .expect("matching columns");
    (problem, w)
}

fn random_direction_like(w: &FactorPair, rng: &mut impl Rng) -> FactorDirection {
    FactorDirection::new(
        rng::gaussian_matrix(rng, w.u().nrows(), w.u().ncols()),
        rng::gaussian_matrix(rng, w.v().nrows(), w.v().ncols()),
    )
    .expect("matching columns")
}

// ---------------------------------------------------------------------------
// suites
// ---------------------------------------------------------------------------

/// `⟨A(X), y⟩ = ⟨X, A*(y)⟩_F` on random operators and inputs.
pub fn suite_adjoint(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 101);
    for _ in 0..cfg.trials {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let p = rng.random_range(1..=10);
        let op = crate::problem::SensingOperator::gaussian(n, m, p, rng.random(), rng.random())
            .expect("valid dims");
        let x = rng::gaussian_matrix(&mut rng, n, m);
        let y = Vector::from_fn(p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let ax = op.apply(&x).expect("dims");
        let lhs = ax.dot(&y);
        let rhs = x.dot(&op.adjoint(&y).expect("dims"));
        let rel = (lhs - rhs).abs() / (ax.norm() * y.norm()).max(1e-300);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "adjoint_identity", trials: cfg.trials, failures, worst, tol }
}

/// `f(X+D) = f(X) + ⟨∇f(X), D⟩ + ½ ∇²f[D,D]` exactly (f is quadratic).
pub fn suite_quadratic_expansion(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 102);
    for _ in 0..cfg.trials {
        let (p, _) = small_instance(&mut rng);
        let x = rng::gaussian_matrix(&mut rng, p.n(), p.m());
        let d = rng::gaussian_matrix(&mut rng, p.n(), p.m());
        let lhs = p.f_value(&(&x + &d)).expect("dims");
        let rhs = p.f_value(&x).expect("dims")
            + p.f_grad(&x).expect("dims").dot(&d)
            + 0.5 * p.f_hess_quadratic(&d).expect("dims");
        let rel = (lhs - rhs).abs() / lhs.abs().max(1.0);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "quadratic_expansion", trials: cfg.trials, failures, worst, tol }
}

/// Analytic gradient of `g̃` against entrywise central differences.
pub fn suite_gradient_fd(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-5;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 103);
    for t in 0..cfg.trials {
        let (p, w) = small_instance(&mut rng);
        let mu = if t % 2 == 0 { 0.0 } else { 0.1 };
        let g = factorized::g_grad(&p, &w, mu).expect("dims");
        let rel = gradient_fd_rel_error(|w| factorized::g_value(&p, w, mu).expect("dims"), &g, &w, 1e-4);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "gradient_fd", trials: cfg.trials, failures, worst, tol }
}

/// Hessian quadratic form against second-order central differences.
pub fn suite_hessian_fd(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-4;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 104);
    for t in 0..cfg.trials {
        let (p, w) = small_instance(&mut rng);
        let d = random_direction_like(&w, &mut rng);
        let mu = if t % 2 == 0 { 0.0 } else { 0.1 };
        let h = factorized::hess_bilinear(&p, &w, &d, mu).expect("dims");
        let fd = second_central_diff(|w| factorized::g_value(&p, w, mu).expect("dims"), &w, &d, 1e-3);
        let rel = (h - fd).abs() / h.abs().max(1e-6);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "hessian_fd", trials: cfg.trials, failures, worst, tol }
}

/// `⟨H[D], D⟩` equals the quadratic form, and `H` is symmetric.
pub fn suite_hessian_consistency(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-10;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 105);
    for t in 0..cfg.trials {
        let (p, w) = small_instance(&mut rng);
        let d1 = random_direction_like(&w, &mut rng);
        let d2 = random_direction_like(&w, &mut rng);
        let mu = if t % 2 == 0 { 0.0 } else { 0.1 };
        let h1 = factorized::hess_vec(&p, &w, &d1, mu).expect("dims");
        let h2 = factorized::hess_vec(&p, &w, &d2, mu).expect("dims");
        let quad = factorized::hess_bilinear(&p, &w, &d1, mu).expect("dims");
        let rel_q = (h1.dot(&d1) - quad).abs() / quad.abs().max(1.0);
        let scale = (h1.norm() * d2.norm() + d1.norm() * h2.norm()).max(1e-300);
        let rel_s = (h1.dot(&d2) - d1.dot(&h2)).abs() / scale;
        let rel = rel_q.max(rel_s);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "hessian_consistency", trials: cfg.trials, failures, worst, tol }
}

/// Balanced-lift invariants: same product, balanced factors, `G₁G₂ᵀ = I`.
pub fn suite_balanced_lift(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 106);
    for _ in 0..cfg.trials {
        let n = rng.random_range(2..=7);
        let m = rng.random_range(2..=7);
        let r = rng.random_range(1..=n.min(m));
        let w = FactorPair::new(
            rng::gaussian_matrix(&mut rng, n, r),
            rng::gaussian_matrix(&mut rng, m, r),
        )
        .expect("matching columns");
        let lift = match factorized::balanced_lift(&w) {
            Ok(l) => l,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let scale = w.product().norm().max(1e-300);
        let e_prod = (lift.pair().product() - w.product()).norm() / scale;
        let e_bal = lift.pair().balance_gap().norm() / scale;
        let e_gg = (&lift.g1 * lift.g2.transpose() - Matrix::identity(r, r)).norm() / (r as f64).sqrt();
        let rel = e_prod.max(e_bal).max(e_gg);
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "balanced_lift", trials: cfg.trials, failures, worst, tol }
}

/// Lifting an exact critical point of `g` (an unbalanced factorization of
/// `X⋆`) yields a near-exact critical point of the regularized objective.
pub fn suite_lift_critical_transport(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-8;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 107);
    for _ in 0..cfg.trials {
        let n = rng.random_range(3..=6);
        let m = rng.random_range(3..=6);
        let r = rng.random_range(1..=2);
        let seed = rng.random::<u64>();
        let p = SensingProblem::gen(n, m, r, 3 * n.max(m) * r, true, seed).expect("valid dims");
        let (_, w_star) = gen_ground_truth(n, m, r, seed).expect("valid dims");
        // unbalance the exact solution with a random well-conditioned G
        let g = linalg::random_with_condition(r, 50.0, &mut rng);
        let w = factorized::scale_factors(&w_star, &g).expect("well conditioned");
        let lift = match factorized::balanced_lift(&w) {
            Ok(l) => l,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let mu = 0.1;
        let grad = factorized::g_grad(&p, &lift.pair(), mu).expect("dims");
        let scale = 1.0
            + p.f_grad(&Matrix::zeros(n, m)).expect("dims").norm()
                * (lift.u_tilde.norm() + lift.v_tilde.norm());
        let rel = grad.norm() / scale;
        worst = worst.max(rel);
        if rel > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "lift_critical_point", trials: cfg.trials, failures, worst, tol }
}

/// The degenerate escape direction is self-normalizing: its curvature is
/// exactly −1 up to floating error.
pub fn suite_degenerate_escape(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-6;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 108);
    for t in 0..cfg.trials {
        let n = rng.random_range(3..=8);
        let m = rng.random_range(3..=6);
        let r = rng.random_range(2..=n.min(m));
        let p = SensingProblem::gen(n, m, r, 2 * n * m, false, rng.random()).expect("valid dims");
        // rank-deficient candidates: the zero pair, or a pair with a zeroed factor column
        let w = if t % 2 == 0 {
            FactorPair::new(Matrix::zeros(n, r), Matrix::zeros(m, r)).expect("shapes")
        } else {
            let mut u = rng::gaussian_matrix(&mut rng, n, r);
            u.column_mut(r - 1).fill(0.0);
            let mut v = rng::gaussian_matrix(&mut rng, m, r);
            v.column_mut(r - 1).fill(0.0);
            FactorPair::new(u, v).expect("shapes")
        };
        match landscape::degenerate_escape(&p, &w) {
            Ok(landscape::DegenerateOutcome::Escape(esc)) => {
                let curv = factorized::hess_bilinear(&p, &w, &esc.direction, 0.0).expect("dims");
                let err = (curv + 1.0).abs();
                worst = worst.max(err);
                if err > tol {
                    failures += 1;
                }
            }
            _ => failures += 1,
        }
    }
    SuiteReport { name: "degenerate_escape", trials: cfg.trials, failures, worst, tol }
}

/// Lanczos minimum eigenvalue against a dense eigendecomposition of the
/// explicitly assembled Hessian.
pub fn suite_eigen_vs_dense(cfg: &VerifyConfig) -> SuiteReport {
    let tol = 1e-6;
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    let mut rng = rng::seeded_stream(cfg.seed, 109);
    let trials = cfg.trials.min(20);
    for t in 0..trials {
        let (p, w) = small_instance(&mut rng);
        let mu = if t % 2 == 0 { 0.0 } else { 0.1 };
        let err = match eigen_vs_dense_error(&p, &w, mu, rng.random()) {
            Ok(e) => e,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        worst = worst.max(err);
        if err > tol {
            failures += 1;
        }
    }
    SuiteReport { name: "eigen_vs_dense", trials, failures, worst, tol }
}

/// |Lanczos min eig − dense min eig| for one instance.
pub fn eigen_vs_dense_error(p: &SensingProblem, w: &FactorPair, mu: f64, seed: u64) -> Result<f64> {
    let dense = landscape::dense_hessian(p, w, mu)?;
    let dim = dense.nrows();
    let dense_min = dense.symmetric_eigen().eigenvalues.min();
    let est = landscape::min_eig_hessian(p, w, mu, 1e-9, (4 * dim).max(64), seed)?;
    Ok((est.value - dense_min).abs())
}

/// Every suite, in a fixed order.
pub fn run_all(cfg: &VerifyConfig) -> Vec<SuiteReport> {
    vec![
        suite_adjoint(cfg),
        suite_quadratic_expansion(cfg),
        suite_gradient_fd(cfg),
        suite_hessian_fd(cfg),
        suite_hessian_consistency(cfg),
        suite_balanced_lift(cfg),
        suite_lift_critical_transport(cfg),
        suite_degenerate_escape(cfg),
        suite_eigen_vs_dense(cfg),
    ]
}
