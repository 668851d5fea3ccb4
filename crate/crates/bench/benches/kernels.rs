//! Benchmarks for the hot kernels: operator application, factored gradient,
//! Hessian-vector products, the Lanczos eigensolver, and short solver runs.

use criterion::{criterion_group, criterion_main, Criterion};
use lrmr::factorized::{g_grad, hess_vec, FactorDirection, FactorPair};
use lrmr::landscape::min_eig_hessian;
use lrmr::problem::SensingProblem;
use lrmr::solvers::{gd_solve, SolverConfig};
use lrmr::rng;
use std::hint::black_box;

fn experiment_problem() -> SensingProblem {
    SensingProblem::gen(40, 50, 5, 750, true, 1).expect("preset dims")
}

fn random_pair(p: &SensingProblem, seed: u64) -> FactorPair {
    let mut rng = rng::seeded(seed);
    FactorPair::new(
        rng::gaussian_matrix(&mut rng, p.n(), p.r()),
        rng::gaussian_matrix(&mut rng, p.m(), p.r()),
    )
    .expect("matching columns")
}

fn bench_operator(c: &mut Criterion) {
    let p = experiment_problem();
    let x = rng::gaussian_matrix(&mut rng::seeded(2), p.n(), p.m());
    c.bench_function("apply_750x2000", |b| {
        b.iter(|| black_box(p.op().apply(black_box(&x)).unwrap()))
    });
    let y = p.op().apply(&x).unwrap();
    c.bench_function("adjoint_750x2000", |b| {
        b.iter(|| black_box(p.op().adjoint(black_box(&y)).unwrap()))
    });
}

fn bench_gradient(c: &mut Criterion) {
    let p = experiment_problem();
    let w = random_pair(&p, 3);
    c.bench_function("g_grad_preset", |b| {
        b.iter(|| black_box(g_grad(&p, black_box(&w), 0.1).unwrap()))
    });
}

fn bench_hess_vec(c: &mut Criterion) {
    let p = experiment_problem();
    let w = random_pair(&p, 4);
    let mut rng = rng::seeded(5);
    let d = FactorDirection::new(
        rng::gaussian_matrix(&mut rng, p.n(), p.r()),
        rng::gaussian_matrix(&mut rng, p.m(), p.r()),
    )
    .unwrap();
    c.bench_function("hess_vec_preset", |b| {
        b.iter(|| black_box(hess_vec(&p, &w, black_box(&d), 0.1).unwrap()))
    });
}

fn bench_min_eig(c: &mut Criterion) {
    let p = SensingProblem::gen(12, 10, 2, 240, true, 6).expect("dims");
    let w = random_pair(&p, 7);
    c.bench_function("min_eig_44dim", |b| {
        b.iter(|| black_box(min_eig_hessian(&p, &w, 0.0, 1e-8, 400, 8).unwrap()))
    });
}

fn bench_solver(c: &mut Criterion) {
    let p = SensingProblem::gen(12, 10, 2, 240, true, 9).expect("dims");
    let cfg = SolverConfig { max_iters: 200, seed: 10, ..Default::default() };
    c.bench_function("gd_200_iters_small", |b| b.iter(|| black_box(gd_solve(&p, &cfg).unwrap())));
}

criterion_group!(
    benches,
    bench_operator,
    bench_gradient,
    bench_hess_vec,
    bench_min_eig,
    bench_solver
);
criterion_main!(benches);
