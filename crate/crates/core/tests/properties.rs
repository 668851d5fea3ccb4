//! Property tests for the structural invariants: operator linearity and
//! adjointness, exact quadraticity of the loss, scaling invariance of the
//! factored objective, regularizer semantics, and network generation.

use lrmr::distributed::{DistributedProblem, DistributedState, Network};
use lrmr::factorized::{self, FactorPair};
use lrmr::linalg;
use lrmr::problem::{gen_ground_truth, SensingOperator, SensingProblem};
use lrmr::rng;
use lrmr::{Matrix, Vector};
use proptest::prelude::*;
use rand::Rng;

fn random_vector(rng: &mut impl Rng, len: usize) -> Vector {
    Vector::from_fn(len, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn adjoint_identity(n in 1usize..7, m in 1usize..7, p in 1usize..12, seed in any::<u64>()) {
        let op = SensingOperator::gaussian(n, m, p, seed % 2 == 0, seed).unwrap();
        let mut r = rng::seeded(seed ^ 0xabc);
        let x = rng::gaussian_matrix(&mut r, n, m);
        let y = random_vector(&mut r, p);
        let ax = op.apply(&x).unwrap();
        let lhs = ax.dot(&y);
        let rhs = x.dot(&op.adjoint(&y).unwrap());
        let scale = (ax.norm() * y.norm()).max(1e-300);
        prop_assert!((lhs - rhs).abs() / scale < 1e-10);
    }

    #[test]
    fn operator_linearity(n in 1usize..6, m in 1usize..6, p in 1usize..10, seed in any::<u64>()) {
        let op = SensingOperator::gaussian(n, m, p, false, seed).unwrap();
        let mut r = rng::seeded(seed ^ 0x111);
        let x = rng::gaussian_matrix(&mut r, n, m);
        let y = rng::gaussian_matrix(&mut r, n, m);
        let (a, b) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        let lhs = op.apply(&(a * &x + b * &y)).unwrap();
        let rhs = a * op.apply(&x).unwrap() + b * op.apply(&y).unwrap();
        let scale = lhs.norm().max(1.0);
        prop_assert!((lhs - rhs).norm() / scale < 1e-12);
    }

    #[test]
    fn loss_is_exactly_quadratic(n in 2usize..6, m in 2usize..6, seed in any::<u64>()) {
        let p = SensingProblem::gen(n, m, 1, n * m, seed % 2 == 1, seed).unwrap();
        let mut r = rng::seeded(seed ^ 0x222);
        let x = rng::gaussian_matrix(&mut r, n, m);
        let d = rng::gaussian_matrix(&mut r, n, m);
        let lhs = p.f_value(&(&x + &d)).unwrap();
        let rhs = p.f_value(&x).unwrap() + p.f_grad(&x).unwrap().dot(&d)
            + 0.5 * p.f_hess_quadratic(&d).unwrap();
        prop_assert!((lhs - rhs).abs() / lhs.abs().max(1.0) < 1e-10);
    }

    #[test]
    fn objective_is_scaling_invariant(seed in any::<u64>(), cond in 1.0f64..50.0) {
        let p = SensingProblem::gen(5, 4, 2, 30, true, seed).unwrap();
        let mut r = rng::seeded(seed ^ 0x333);
        let w = FactorPair::new(
            rng::gaussian_matrix(&mut r, 5, 2),
            rng::gaussian_matrix(&mut r, 4, 2),
        ).unwrap();
        let g = linalg::random_with_condition(2, cond, &mut r);
        let scaled = factorized::scale_factors(&w, &g).unwrap();
        let a = factorized::g_value(&p, &w, 0.0).unwrap();
        let b = factorized::g_value(&p, &scaled, 0.0).unwrap();
        prop_assert!((a - b).abs() / a.abs().max(1e-12) < 1e-10);
    }

    #[test]
    fn regularizer_is_nonnegative_and_detects_balance(seed in any::<u64>()) {
        let mut r = rng::seeded(seed ^ 0x444);
        let w = FactorPair::new(
            rng::gaussian_matrix(&mut r, 5, 2),
            rng::gaussian_matrix(&mut r, 4, 2),
        ).unwrap();
        let reg = factorized::regularizer_value(&w);
        prop_assert!(reg >= 0.0);
        prop_assert_eq!(reg == 0.0, w.balance_gap().norm() == 0.0);
        // balanced lifts have (numerically) zero regularizer
        if let Ok(lift) = factorized::balanced_lift(&w) {
            let scale = w.product().norm_squared().max(1e-300);
            prop_assert!(factorized::regularizer_value(&lift.pair()) <= 1e-16 * scale);
        }
    }

    #[test]
    fn generated_networks_are_connected_and_positive(
        agents in 2usize..8,
        threshold in 0.0f64..0.95,
        seed in any::<u64>(),
    ) {
        let net = Network::gen(agents, threshold, seed).unwrap();
        prop_assert_eq!(net.agents(), agents);
        for &(i, j, w) in net.edges() {
            prop_assert!(i < j && j < agents);
            prop_assert!(w > 0.0);
        }
        // regenerating with the same seed gives the same graph
        prop_assert_eq!(&net, &Network::gen(agents, threshold, seed).unwrap());
    }

    #[test]
    fn penalty_is_zero_iff_copies_agree(seed in any::<u64>(), agents in 2usize..5) {
        let blocks = vec![2usize; agents];
        let p = SensingProblem::gen(4, 2 * agents, 2, 24 * agents, true, seed).unwrap();
        let dp = DistributedProblem::split_default(&p, agents, blocks, seed).unwrap();
        let mut r = rng::seeded(seed ^ 0x555);
        let shared = rng::gaussian_matrix(&mut r, 4, 2);
        let v_blocks: Vec<Matrix> = (0..agents).map(|_| rng::gaussian_matrix(&mut r, 2, 2)).collect();
        let consensus = DistributedState::new(vec![shared.clone(); agents], v_blocks.clone()).unwrap();
        // with equal copies the value reduces to the pure data term
        let data: f64 = (0..agents)
            .map(|j| {
                let res = dp.op(j).apply(&(&shared * v_blocks[j].transpose())).unwrap()
                    - dp.op(j).apply(dp.x_star_block(j)).unwrap();
                0.5 * res.norm_squared()
            })
            .sum();
        let val = dp.value(&consensus, 0.0).unwrap();
        prop_assert!((val - data).abs() <= 1e-9 * data.abs().max(1.0));
        // perturbing one copy strictly increases the penalty
        let mut apart = consensus.clone();
        apart.u_copies[0][(0, 0)] += 1.0;
        let data_apart: f64 = (0..agents)
            .map(|j| {
                let u = &apart.u_copies[j];
                let res = dp.op(j).apply(&(u * v_blocks[j].transpose())).unwrap()
                    - dp.op(j).apply(dp.x_star_block(j)).unwrap();
                0.5 * res.norm_squared()
            })
            .sum();
        let val_apart = dp.value(&apart, 0.0).unwrap();
        prop_assert!(val_apart - data_apart > 0.0);
    }

    #[test]
    fn ground_truth_always_has_rank_r(n in 2usize..8, m in 2usize..8, seed in any::<u64>()) {
        let r = 1 + (seed as usize) % n.min(m);
        let (x, w) = gen_ground_truth(n, m, r, seed).unwrap();
        prop_assert_eq!(linalg::numerical_rank(&x), r);
        prop_assert_eq!(w.u().ncols(), r);
    }
}
