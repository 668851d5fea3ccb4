//! Penalty-consensus form of the factored recovery problem: `J` agents each
//! hold a sensing operator over a column block of `X⋆` and a local copy
//! `U^j` of the shared factor, coupled through weighted quadratic penalties
//! `w_{i,j}‖U^j − U^i‖_F²` over a connected graph.

use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::factorized::FactorPair;
use crate::problem::{SensingOperator, SensingProblem};
use crate::rng::{self, stream};
use crate::solvers::{
    add_poly, balance_quartic, line_pi, residual_quartic, run_descent, IterTrace, Objective,
    RowMetrics, SolveError, SolverConfig,
};
use crate::{Matrix, Vector};
use rand::Rng;

/// Weighted undirected connected graph over the agents. Each unordered edge
/// appears once; weights are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    agents: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Network {
    /// Validates symmetry conventions (edges stored as `i < j`), positive
    /// weights, and connectivity.
    pub fn new(agents: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if agents == 0 {
            return Err(invalid("a network needs at least one agent"));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        let mut seen = std::collections::HashSet::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(invalid(format!("self loop at agent {a}")));
            }
            if a >= agents || b >= agents {
                return Err(invalid(format!("edge ({a},{b}) out of range for {agents} agents")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(invalid(format!("edge ({a},{b}) has non-positive weight {w}")));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(invalid(format!("duplicate edge ({},{})", key.0, key.1)));
            }
            normalized.push((key.0, key.1, w));
        }
        let net = Self { agents, edges: normalized };
        if !net.is_connected() {
            return Err(invalid("graph is not connected"));
        }
        Ok(net)
    }

    /// The one-agent network (no edges).
    pub fn singleton() -> Self {
        Self { agents: 1, edges: Vec::new() }
    }

    /// Random connected graph: symmetric uniform(0,1) off-diagonal weights,
    /// hard-thresholded; disconnected draws are retried with fresh
    /// sub-seeds, lowering the threshold by 0.05 after every 20 attempts, so
    /// the procedure always terminates (threshold 0 keeps the complete
    /// graph).
    pub fn gen(agents: usize, threshold: f64, seed: u64) -> Result<Self> {
        if agents < 2 {
            return Err(invalid("network generation needs at least two agents"));
        }
        if !(0.0..1.0).contains(&threshold) {
            return Err(invalid(format!("threshold must be in [0,1), got {threshold}")));
        }
        let mut attempt = 0u64;
        loop {
            let round = attempt / 20;
            let th = (threshold - 0.05 * round as f64).max(0.0);
            let mut rng = rng::seeded_stream(seed, stream::NETWORK + attempt);
            let mut edges = Vec::new();
            for i in 0..agents {
                for j in (i + 1)..agents {
                    let w: f64 = rng.random();
                    if w > th && w > 0.0 {
                        edges.push((i, j, w));
                    }
                }
            }
            let net = Self { agents, edges };
            if net.is_connected() {
                return Ok(net);
            }
            attempt += 1;
        }
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    fn is_connected(&self) -> bool {
        if self.agents <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.agents];
        for &(i, j, _) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.agents];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.agents
    }

    /// Serializes as one `i j w` line per edge (0-based indices).
    pub fn edge_list(&self) -> String {
        let mut out = String::new();
        for &(i, j, w) in &self.edges {
            out.push_str(&format!("{i} {j} {w:.17e}\n"));
        }
        out
    }

    /// Parses the `i j w` edge-list format; the agent count is supplied by
    /// the caller (it is not recoverable from an edge list with isolated
    /// vertices).
    pub fn from_edge_list(agents: usize, text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<String> {
                s.map(str::to_owned)
                    .ok_or_else(|| invalid(format!("edge list line {} is malformed", lineno + 1)))
            };
            let i: usize = parse(parts.next())?
                .parse()
                .map_err(|_| invalid(format!("bad index on line {}", lineno + 1)))?;
            let j: usize = parse(parts.next())?
                .parse()
                .map_err(|_| invalid(format!("bad index on line {}", lineno + 1)))?;
            let w: f64 = parse(parts.next())?
                .parse()
                .map_err(|_| invalid(format!("bad weight on line {}", lineno + 1)))?;
            edges.push((i, j, w));
        }
        Self::new(agents, edges)
    }
}

/// The distributed instance: per-agent operators over column blocks of the
/// ground truth, plus the coupling network.
#[derive(Debug, Clone)]
pub struct DistributedProblem {
    net: Network,
    blocks: Vec<usize>,
    ops: Vec<SensingOperator>,
    x_star_blocks: Vec<Matrix>,
    measurements: Vec<Vector>,
    n: usize,
    m: usize,
    r: usize,
    seed: u64,
}

impl DistributedProblem {
    /// Splits a centralized instance across the agents of `net`.
    ///
    /// Per-agent operators are freshly generated Gaussians with
    /// `p_j = 3·max(m_j, n)·r` measurements (the experiment preset applied
    /// at agent scale), inheriting the normalization flag. With a single
    /// agent the centralized operator is reused unchanged, so the `J = 1`
    /// problem reduces to the centralized one exactly.
    pub fn split(p: &SensingProblem, net: Network, blocks: Vec<usize>, seed: u64) -> Result<Self> {
        if blocks.len() != net.agents() {
            return Err(invalid(format!(
                "{} blocks for {} agents",
                blocks.len(),
                net.agents()
            )));
        }
        if blocks.iter().any(|&b| b == 0) {
            return Err(invalid("all block widths must be positive"));
        }
        if blocks.iter().sum::<usize>() != p.m() {
            return Err(invalid(format!(
                "block widths sum to {}, problem has m = {}",
                blocks.iter().sum::<usize>(),
                p.m()
            )));
        }
        let (n, r) = (p.n(), p.r());
        let mut ops = Vec::with_capacity(blocks.len());
        let mut x_star_blocks = Vec::with_capacity(blocks.len());
        let mut measurements = Vec::with_capacity(blocks.len());
        let mut offset = 0usize;
        for (j, &mj) in blocks.iter().enumerate() {
            let op = if net.agents() == 1 {
                p.op().clone()
            } else {
                let pj = 3 * mj.max(n) * r;
                let mut rng = rng::seeded_stream(seed, stream::AGENT_OPERATOR + j as u64);
                let mut entries = rng::gaussian_matrix(&mut rng, pj, n * mj);
                if p.op().normalized() {
                    entries /= (pj as f64).sqrt();
                }
                SensingOperator::new(entries, n, mj, p.op().normalized())?
            };
            let xj = p.x_star().columns(offset, mj).into_owned();
            let bj = op.apply(&xj)?;
            ops.push(op);
            x_star_blocks.push(xj);
            measurements.push(bj);
            offset += mj;
        }
        Ok(Self {
            net,
            blocks: blocks.to_vec(),
            ops,
            x_star_blocks,
            measurements,
            n,
            m: p.m(),
            r,
            seed,
        })
    }

    /// Convenience form taking only the agent count: generates the network
    /// with the default hard threshold 0.5 (single agents get the trivial
    /// network).
    pub fn split_default(p: &SensingProblem, agents: usize, blocks: Vec<usize>, seed: u64) -> Result<Self> {
        let net = if agents == 1 {
            Network::singleton()
        } else {
            Network::gen(agents, 0.5, seed)?
        };
        Self::split(p, net, blocks, seed)
    }

    pub fn agents(&self) -> usize {
        self.net.agents()
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn op(&self, j: usize) -> &SensingOperator {
        &self.ops[j]
    }

    pub fn x_star_block(&self, j: usize) -> &Matrix {
        &self.x_star_blocks[j]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check_state(&self, s: &DistributedState) -> Result<()> {
        if s.u_copies.len() != self.agents() || s.v_blocks.len() != self.agents() {
            return Err(dim_mismatch("state has the wrong number of blocks"));
        }
        for u in &s.u_copies {
            if u.nrows() != self.n || u.ncols() != self.r {
                return Err(dim_mismatch("consensus copy has the wrong shape"));
            }
        }
        for (v, &mj) in s.v_blocks.iter().zip(&self.blocks) {
            if v.nrows() != mj || v.ncols() != self.r {
                return Err(dim_mismatch("local block has the wrong shape"));
            }
        }
        Ok(())
    }

    /// Objective value
    /// `Σ_j ½‖A_j(U^j V_jᵀ − X⋆_j)‖² + Σ_{(i,j)} w_{i,j}‖U^j − U^i‖_F²
    ///  + (μ/4)‖ŪᵀŪ − VᵀV‖_F²`,
    /// where the regularizer uses the mean consensus variable and the
    /// stacked local blocks.
    pub fn value(&self, s: &DistributedState, mu: f64) -> Result<f64> {
        self.check_state(s)?;
        if !(mu >= 0.0) {
            return Err(invalid(format!("mu must be nonnegative, got {mu}")));
        }
        let obj = DistributedObjective { dp: self, mu };
        let blocks = s.clone().into_blocks();
        let (val, _, _) = obj.eval(&blocks);
        Ok(val)
    }

    /// Gradient with the same block layout as the state.
    pub fn gradient(&self, s: &DistributedState, mu: f64) -> Result<DistributedState> {
        self.check_state(s)?;
        if !(mu >= 0.0) {
            return Err(invalid(format!("mu must be nonnegative, got {mu}")));
        }
        let obj = DistributedObjective { dp: self, mu };
        let blocks = s.clone().into_blocks();
        let (_, grad, _) = obj.eval(&blocks);
        Ok(DistributedState::from_blocks(self.agents(), grad))
    }

    /// Random state with `N(0, init_scale²)` entries. All consensus copies
    /// start from the same draw: starting the copies apart lets the scale
    /// ambiguity shrink the `U^j` against the penalty instead of aligning
    /// them, which stalls the unregularized runs. With one agent this
    /// reproduces the centralized initialization bit for bit.
    pub fn random_init(&self, init_scale: f64, seed: u64) -> DistributedState {
        let mut rng = rng::seeded_stream(seed, stream::INIT);
        let u = init_scale * rng::gaussian_matrix(&mut rng, self.n, self.r);
        let u_copies = vec![u; self.agents()];
        let v_blocks = self
            .blocks
            .iter()
            .map(|&mj| init_scale * rng::gaussian_matrix(&mut rng, mj, self.r))
            .collect();
        DistributedState { u_copies, v_blocks }
    }
}

/// The stacked optimization variable: consensus copies `U^1..U^J` and local
/// blocks `V_1..V_J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedState {
    pub u_copies: Vec<Matrix>,
    pub v_blocks: Vec<Matrix>,
}

impl DistributedState {
    pub fn new(u_copies: Vec<Matrix>, v_blocks: Vec<Matrix>) -> Result<Self> {
        if u_copies.len() != v_blocks.len() || u_copies.is_empty() {
            return Err(dim_mismatch("need one consensus copy and one block per agent"));
        }
        Ok(Self { u_copies, v_blocks })
    }

    pub fn agents(&self) -> usize {
        self.u_copies.len()
    }

    /// Mean of the consensus copies.
    pub fn mean_u(&self) -> Matrix {
        let mut acc = self.u_copies[0].clone();
        for u in &self.u_copies[1..] {
            acc += u;
        }
        acc * (1.0 / self.u_copies.len() as f64)
    }

    /// Stacks the local blocks into one `m × r` factor.
    pub fn stacked_v(&self) -> Matrix {
        let r = self.v_blocks[0].ncols();
        let m: usize = self.v_blocks.iter().map(|v| v.nrows()).sum();
        let mut out = Matrix::zeros(m, r);
        let mut offset = 0;
        for v in &self.v_blocks {
            out.view_mut((offset, 0), (v.nrows(), r)).copy_from(v);
            offset += v.nrows();
        }
        out
    }

    fn into_blocks(self) -> Vec<Matrix> {
        let mut out = self.u_copies;
        out.extend(self.v_blocks);
        out
    }

    fn from_blocks(agents: usize, mut blocks: Vec<Matrix>) -> Self {
        let v_blocks = blocks.split_off(agents);
        Self { u_copies: blocks, v_blocks }
    }

    pub fn norm(&self) -> f64 {
        self.u_copies
            .iter()
            .chain(self.v_blocks.iter())
            .map(|b| b.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

/// `(max_j ‖U^j − Ū‖_F ≤ eps, max_j ‖U^j − Ū‖_F)`. Exact equality is
/// guaranteed only at exact critical points; terminal solver states satisfy
/// this to the quantified tolerances.
pub fn consensus_check(s: &DistributedState, eps: f64) -> (bool, f64) {
    let u_bar = s.mean_u();
    let dev = s
        .u_copies
        .iter()
        .map(|u| (u - &u_bar).norm())
        .fold(0.0f64, f64::max);
    (dev <= eps, dev)
}

/// Collapses a consensus state to a centralized pair `(Ū, stacked V)` and
/// reports the centralized gradient norm of `Σ_j f_j(Ū V_jᵀ)` there.
/// Refuses when the copies deviate by more than `eps`.
pub fn lift_to_centralized(
    dp: &DistributedProblem,
    s: &DistributedState,
    eps: f64,
) -> Result<(FactorPair, f64)> {
    dp.check_state(s)?;
    let (ok, dev) = consensus_check(s, eps);
    if !ok {
        return Err(Error::RefuseToLift(format!(
            "consensus deviation {dev:.3e} exceeds tolerance {eps:.3e}"
        )));
    }
    let u_bar = s.mean_u();
    let mut gu = Matrix::zeros(dp.n, dp.r);
    let mut gv_norm_sq = 0.0;
    for j in 0..dp.agents() {
        let xj = &u_bar * s.v_blocks[j].transpose();
        let res = dp.ops[j].apply(&xj)? - &dp.measurements[j];
        let gf = dp.ops[j].adjoint(&res)?;
        gu += &gf * &s.v_blocks[j];
        gv_norm_sq += gf.tr_mul(&u_bar).norm_squared();
    }
    let grad_norm = (gu.norm_squared() + gv_norm_sq).sqrt();
    Ok((FactorPair::new(u_bar, s.stacked_v())?, grad_norm))
}

/// Synchronous gradient descent on the stacked variable
/// `(U^1..U^J, V_1..V_J)` with the same step control as the centralized
/// solver. The trace's `consensus_error` column records `Σ_j‖U^j − Ū‖_F²`.
pub fn dgd_solve(
    dp: &DistributedProblem,
    cfg: &SolverConfig,
) -> std::result::Result<(DistributedState, IterTrace), SolveError> {
    cfg.validate()?;
    let init = dp.random_init(cfg.init_scale, cfg.seed);
    dgd_solve_from(dp, init, cfg)
}

/// As [`dgd_solve`], from an explicit starting state.
pub fn dgd_solve_from(
    dp: &DistributedProblem,
    s0: DistributedState,
    cfg: &SolverConfig,
) -> std::result::Result<(DistributedState, IterTrace), SolveError> {
    cfg.validate()?;
    dp.check_state(&s0)?;
    let obj = DistributedObjective { dp, mu: cfg.mu };
    let (blocks, trace) = run_descent(&obj, s0.into_blocks(), cfg)?;
    Ok((DistributedState::from_blocks(dp.agents(), blocks), trace))
}

// ---------------------------------------------------------------------------
// objective plumbing
// ---------------------------------------------------------------------------

struct DistributedObjective<'a> {
    dp: &'a DistributedProblem,
    mu: f64,
}

struct DistState {
    res: Vec<Vector>,
    x: Vec<Matrix>,
}

impl DistributedObjective<'_> {
    fn split_blocks<'w>(&self, w: &'w [Matrix]) -> (&'w [Matrix], &'w [Matrix]) {
        w.split_at(self.dp.agents())
    }

    fn balance_inputs(&self, us: &[Matrix], vs: &[Matrix]) -> (Matrix, Matrix) {
        let mut acc = us[0].clone();
        for u in &us[1..] {
            acc += u;
        }
        let u_bar = acc * (1.0 / us.len() as f64);
        let r = vs[0].ncols();
        let m: usize = vs.iter().map(|v| v.nrows()).sum();
        let mut v_stack = Matrix::zeros(m, r);
        let mut offset = 0;
        for v in vs {
            v_stack.view_mut((offset, 0), (v.nrows(), r)).copy_from(v);
            offset += v.nrows();
        }
        (u_bar, v_stack)
    }
}

impl Objective for DistributedObjective<'_> {
    type State = DistState;

    fn eval(&self, w: &[Matrix]) -> (f64, Vec<Matrix>, DistState) {
        let dp = self.dp;
        let (us, vs) = self.split_blocks(w);
        let mut val = 0.0;
        let mut gu: Vec<Matrix> = Vec::with_capacity(dp.agents());
        let mut gv: Vec<Matrix> = Vec::with_capacity(dp.agents());
        let mut res_all = Vec::with_capacity(dp.agents());
        let mut x_all = Vec::with_capacity(dp.agents());
        for j in 0..dp.agents() {
            let x = &us[j] * vs[j].transpose();
            let res = dp.ops[j].apply(&x).expect("state validated at entry") - &dp.measurements[j];
            val += 0.5 * res.norm_squared();
            let gf = dp.ops[j].adjoint(&res).expect("state validated at entry");
            gu.push(&gf * &vs[j]);
            gv.push(gf.tr_mul(&us[j]));
            res_all.push(res);
            x_all.push(x);
        }
        for &(i, j, wt) in dp.net.edges() {
            let diff = &us[j] - &us[i];
            val += wt * diff.norm_squared();
            gu[j] += 2.0 * wt * &diff;
            gu[i] -= 2.0 * wt * &diff;
        }
        if self.mu > 0.0 {
            let (u_bar, v_stack) = self.balance_inputs(us, vs);
            let e = u_bar.tr_mul(&u_bar) - v_stack.tr_mul(&v_stack);
            val += self.mu / 4.0 * e.norm_squared();
            let mu_share = self.mu / dp.agents() as f64;
            for j in 0..dp.agents() {
                gu[j] += mu_share * (&u_bar * &e);
                gv[j] -= self.mu * (&vs[j] * &e);
            }
        }
        gu.extend(gv);
        (val, gu, DistState { res: res_all, x: x_all })
    }

    fn line_poly(&self, w: &[Matrix], state: &DistState, dir: &[Matrix]) -> [f64; 5] {
        let dp = self.dp;
        let (us, vs) = self.split_blocks(w);
        let (dus, dvs) = self.split_blocks(dir);
        let mut c = [0.0; 5];
        for j in 0..dp.agents() {
            let pi = line_pi(&us[j], &vs[j], &dus[j], &dvs[j]);
            let kk = &dus[j] * dvs[j].transpose();
            let a_pi = dp.ops[j].apply(&pi).expect("state validated at entry");
            let a_k = dp.ops[j].apply(&kk).expect("state validated at entry");
            add_poly(&mut c, residual_quartic(&state.res[j], &a_pi, &a_k));
        }
        for &(i, j, wt) in dp.net.edges() {
            let diff = &us[j] - &us[i];
            let ddiff = &dus[j] - &dus[i];
            c[0] += wt * diff.norm_squared();
            c[1] += 2.0 * wt * diff.dot(&ddiff);
            c[2] += wt * ddiff.norm_squared();
        }
        if self.mu > 0.0 {
            let (u_bar, v_stack) = self.balance_inputs(us, vs);
            let (du_bar, dv_stack) = self.balance_inputs(dus, dvs);
            add_poly(&mut c, balance_quartic(&u_bar, &v_stack, &du_bar, &dv_stack, self.mu));
        }
        c
    }

    fn metrics(&self, w: &[Matrix], state: &DistState, _val: f64) -> RowMetrics {
        let dp = self.dp;
        let (us, vs) = self.split_blocks(w);
        let fit_error = state.res.iter().map(|r| r.norm_squared()).sum();
        let opt_error = state
            .x
            .iter()
            .zip(&dp.x_star_blocks)
            .map(|(x, xs)| (x - xs).norm_squared())
            .sum();
        let (u_bar, v_stack) = self.balance_inputs(us, vs);
        let e = u_bar.tr_mul(&u_bar) - v_stack.tr_mul(&v_stack);
        let consensus = us.iter().map(|u| (u - &u_bar).norm_squared()).sum();
        RowMetrics {
            fit_error,
            opt_error,
            balance_error: e.norm_squared(),
            consensus_error: Some(consensus),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::gd_solve;
    use approx::assert_relative_eq;

    fn siv_small(seed: u64) -> (SensingProblem, DistributedProblem) {
        // scaled-down version of the distributed preset
        let p = SensingProblem::gen(6, 8, 2, 3 * 8 * 2, true, seed).unwrap();
        let dp = DistributedProblem::split_default(&p, 4, vec![2, 2, 2, 2], seed).unwrap();
        (p, dp)
    }

    #[test]
    fn two_agents_zero_threshold_single_edge() {
        let net = Network::gen(2, 0.0, 5).unwrap();
        assert_eq!(net.edges().len(), 1);
        let (i, j, w) = net.edges()[0];
        assert_eq!((i, j), (0, 1));
        assert!(w > 0.0 && w < 1.0);
    }

    #[test]
    fn generated_networks_are_connected_with_thresholded_weights() {
        let net = Network::gen(5, 0.5, 17).unwrap();
        assert!(net.edges().iter().all(|&(_, _, w)| w > 0.5));
        assert_eq!(net, Network::gen(5, 0.5, 17).unwrap());
        // aggressive threshold still terminates via the retry ladder
        let hard = Network::gen(5, 0.99, 17).unwrap();
        assert!(hard.is_connected());
    }

    #[test]
    fn invalid_networks_are_rejected() {
        assert!(Network::new(3, vec![(0, 0, 1.0)]).is_err());
        assert!(Network::new(3, vec![(0, 1, -1.0)]).is_err());
        assert!(Network::new(3, vec![(0, 1, 1.0)]).is_err()); // node 2 unreachable
        assert!(Network::new(2, vec![(0, 1, 1.0), (1, 0, 0.5)]).is_err()); // duplicate
        assert!(Network::gen(1, 0.5, 0).is_err());
        assert!(Network::gen(3, 1.0, 0).is_err());
    }

    #[test]
    fn edge_list_round_trips() {
        let net = Network::gen(4, 0.3, 9).unwrap();
        let text = net.edge_list();
        let back = Network::from_edge_list(4, &text).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn split_reassembles_the_ground_truth() {
        let (p, dp) = siv_small(3);
        let mut stacked = Matrix::zeros(p.n(), p.m());
        let mut offset = 0;
        for j in 0..dp.agents() {
            let xj = dp.x_star_block(j);
            stacked.view_mut((0, offset), (p.n(), xj.ncols())).copy_from(xj);
            offset += xj.ncols();
        }
        assert_eq!(&stacked, p.x_star());
    }

    #[test]
    fn split_rejects_bad_partitions() {
        let p = SensingProblem::gen(4, 6, 2, 30, true, 1).unwrap();
        assert!(DistributedProblem::split_default(&p, 2, vec![3, 2], 1).is_err());
        assert!(DistributedProblem::split_default(&p, 2, vec![6, 0], 1).is_err());
        assert!(DistributedProblem::split_default(&p, 3, vec![3, 3], 1).is_err());
    }

    #[test]
    fn experiment_preset_shapes() {
        let p = SensingProblem::gen(50, 25, 5, 3 * 50 * 5, true, 2).unwrap();
        let dp = DistributedProblem::split_default(&p, 5, vec![5; 5], 2).unwrap();
        for j in 0..5 {
            assert_eq!(dp.op(j).p(), 750); // 3*max(5,50)*5
            assert_eq!(dp.op(j).entries().ncols(), 250);
        }
    }

    #[test]
    fn consensus_critical_point_has_zero_value_and_gradient() {
        let (p, dp) = siv_small(7);
        let (_, w_star) = crate::problem::gen_ground_truth(p.n(), p.m(), p.r(), p.seed()).unwrap();
        let mut offset = 0;
        let mut v_blocks = Vec::new();
        for &mj in dp.blocks() {
            v_blocks.push(w_star.v().rows(offset, mj).into_owned());
            offset += mj;
        }
        let s = DistributedState::new(vec![w_star.u().clone(); dp.agents()], v_blocks).unwrap();
        assert!(dp.value(&s, 0.0).unwrap() < 1e-24);
        let g = dp.gradient(&s, 0.0).unwrap();
        assert!(g.norm() < 1e-10, "gradient norm {}", g.norm());
    }

    #[test]
    fn penalty_term_hand_check() {
        // zero local blocks kill the data gradient on U, isolating the penalty
        let p = SensingProblem::gen(3, 4, 1, 12, false, 11).unwrap();
        let net = Network::new(2, vec![(0, 1, 0.7)]).unwrap();
        let dp = DistributedProblem::split(&p, net, vec![2, 2], 11).unwrap();
        let mut rng = rng::seeded(12);
        let u0 = rng::gaussian_matrix(&mut rng, 3, 1);
        let u1 = rng::gaussian_matrix(&mut rng, 3, 1);
        let zero_state = |u0: &Matrix, u1: &Matrix| {
            DistributedState::new(
                vec![u0.clone(), u1.clone()],
                vec![Matrix::zeros(2, 1), Matrix::zeros(2, 1)],
            )
            .unwrap()
        };
        let s = zero_state(&u0, &u1);
        let s_same = zero_state(&u0, &u0);
        let penalty = dp.value(&s, 0.0).unwrap() - dp.value(&s_same, 0.0).unwrap();
        assert_relative_eq!(penalty, 0.7 * (&u1 - &u0).norm_squared(), max_relative = 1e-12);
        let g = dp.gradient(&s, 0.0).unwrap();
        let expected = 2.0 * 0.7 * (&u1 - &u0);
        assert_relative_eq!(g.u_copies[1], expected, max_relative = 1e-12);
        assert_relative_eq!(g.u_copies[0], -expected, max_relative = 1e-12);
    }

    #[test]
    fn distributed_gradient_matches_finite_differences() {
        let p = SensingProblem::gen(4, 6, 2, 3 * 6 * 2, false, 13).unwrap();
        let net = Network::gen(3, 0.2, 13).unwrap();
        let dp = DistributedProblem::split(&p, net, vec![2, 2, 2], 13).unwrap();
        let s = dp.random_init(1.0, 14);
        let mu = 0.1;
        let g = dp.gradient(&s, mu).unwrap();
        let h = 1e-5;
        let mut worst = 0.0f64;
        let value_at = |s: &DistributedState| dp.value(s, mu).unwrap();
        for (bi, block) in (0..).zip(s.u_copies.iter().chain(s.v_blocks.iter())) {
            for idx in 0..block.len() {
                let perturbed = |delta: f64| {
                    let mut t = s.clone();
                    let b = if bi < 3 { &mut t.u_copies[bi] } else { &mut t.v_blocks[bi - 3] };
                    b[idx] += delta;
                    t
                };
                let fd = (value_at(&perturbed(h)) - value_at(&perturbed(-h))) / (2.0 * h);
                let an = if bi < 3 { g.u_copies[bi][idx] } else { g.v_blocks[bi - 3][idx] };
                worst = worst.max((fd - an).abs() / an.abs().max(1.0));
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn single_agent_run_reproduces_the_centralized_solver() {
        let p = SensingProblem::gen(5, 4, 2, 3 * 5 * 2, true, 21).unwrap();
        let dp = DistributedProblem::split_default(&p, 1, vec![4], 21).unwrap();
        let cfg = SolverConfig { max_iters: 120, mu: 1e-3, seed: 22, ..Default::default() };
        let (pair, central) = gd_solve(&p, &cfg).unwrap();
        let (state, dist) = dgd_solve(&dp, &cfg).unwrap();
        assert_eq!(central.rows.len(), dist.rows.len());
        for (a, b) in central.rows.iter().zip(&dist.rows) {
            assert_eq!(a.iter, b.iter);
            assert_eq!(a.g_val, b.g_val);
            assert_eq!(a.fit_error, b.fit_error);
            assert_eq!(a.opt_error, b.opt_error);
            assert_eq!(a.balance_error, b.balance_error);
            assert_eq!(a.grad_norm, b.grad_norm);
            assert_eq!(b.consensus_error, Some(0.0));
        }
        assert_eq!(state.u_copies[0], *pair.u());
        assert_eq!(state.v_blocks[0], *pair.v());
        // identity lift
        let (lifted, grad_norm) = lift_to_centralized(&dp, &state, 1e-12).unwrap();
        assert_eq!(lifted.u(), pair.u());
        assert!(grad_norm.is_finite());
    }

    #[test]
    fn consensus_check_and_lift_guard() {
        let (_, dp) = siv_small(31);
        let s = dp.random_init(1.0, 32);
        let same = DistributedState::new(vec![s.u_copies[0].clone(); 4], s.v_blocks.clone()).unwrap();
        let (ok, dev) = consensus_check(&same, 1e-12);
        assert!(ok);
        assert_eq!(dev, 0.0);

        let mut perturbed = same.clone();
        perturbed.u_copies[2][(0, 0)] += 1e-3;
        let (ok, dev) = consensus_check(&perturbed, 1e-6);
        assert!(!ok);
        assert!(dev > 1e-4 && dev < 1e-2);
        assert!(matches!(
            lift_to_centralized(&dp, &perturbed, 1e-6),
            Err(Error::RefuseToLift(_))
        ));
    }
}
