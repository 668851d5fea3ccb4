//! Gradient descent on the factored objective with fixed or backtracking
//! (Armijo) step control and per-iteration trace recording.
//!
//! Both the centralized and the distributed objectives are polynomials of
//! degree four along any line, so the line search evaluates an exact
//! precomputed quartic instead of re-applying the sensing operator per trial
//! step.

use crate::error::{invalid, Error, Result};
use crate::factorized::FactorPair;
use crate::problem::SensingProblem;
use crate::rng::{self, stream};
use crate::{Matrix, Vector};
use serde::Serialize;

/// Step-size control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub enum StepMode {
    /// Constant step size.
    Fixed(f64),
    /// Armijo backtracking: the step is the largest `eta0·shrinkᵏ` with
    /// `g̃(W − η∇) ≤ g̃(W) − c·η‖∇‖²`.
    Backtracking { eta0: f64, shrink: f64, c: f64 },
}

impl Default for StepMode {
    fn default() -> Self {
        StepMode::Backtracking { eta0: 1.0, shrink: 0.5, c: 1e-4 }
    }
}

/// Solver configuration; the defaults match the experiment presets.
#[derive(Debug, Clone, Copy, Serialize, serde::Deserialize)]
pub struct SolverConfig {
    /// Balancing-regularizer weight (the objective is `g + (μ/4)R`).
    pub mu: f64,
    pub max_iters: u64,
    pub step_mode: StepMode,
    /// Initialization scale: entries are i.i.d. `N(0, init_scale²)`.
    pub init_scale: f64,
    pub seed: u64,
    /// Stop when the stacked gradient norm falls below this.
    pub stop_grad_tol: f64,
    /// Stop when `‖UVᵀ − X⋆‖_F²` falls below this.
    pub stop_opt_tol: f64,
    /// Record every k-th iteration (iteration 0 and the final one always).
    pub record_every: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 0.0,
            max_iters: 100_000,
            step_mode: StepMode::default(),
            init_scale: 1.0,
            seed: 0,
            stop_grad_tol: 1e-10,
            stop_opt_tol: 1e-12,
            record_every: 10,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(invalid(format!("mu must be nonnegative, got {}", self.mu)));
        }
        if !(self.init_scale >= 0.0) || !self.init_scale.is_finite() {
            return Err(invalid("init_scale must be nonnegative"));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every must be >= 1"));
        }
        if !(self.stop_grad_tol >= 0.0) || !(self.stop_opt_tol >= 0.0) {
            return Err(invalid("stopping tolerances must be nonnegative"));
        }
        match self.step_mode {
            StepMode::Fixed(eta) => {
                if !(eta > 0.0) || !eta.is_finite() {
                    return Err(invalid(format!("fixed step must be positive, got {eta}")));
                }
            }
            StepMode::Backtracking { eta0, shrink, c } => {
                if !(eta0 > 0.0) || !eta0.is_finite() {
                    return Err(invalid(format!("eta0 must be positive, got {eta0}")));
                }
                if !(shrink > 0.0 && shrink < 1.0) {
                    return Err(invalid(format!("shrink must be in (0,1), got {shrink}")));
                }
                if !(c > 0.0 && c < 1.0) {
                    return Err(invalid(format!("Armijo constant must be in (0,1), got {c}")));
                }
            }
        }
        Ok(())
    }
}

/// One recorded iteration. `consensus_error` is present only for
/// distributed runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct TraceRow {
    pub iter: u64,
    pub g_val: f64,
    /// `‖A(UVᵀ − X⋆)‖²` (summed over agents in the distributed case).
    pub fit_error: f64,
    /// `‖UVᵀ − X⋆‖_F²` (summed over agents in the distributed case).
    pub opt_error: f64,
    /// `R(U, V)`.
    pub balance_error: f64,
    pub grad_norm: f64,
    pub consensus_error: Option<f64>,
}

/// Why the solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Termination {
    GradTol,
    OptTol,
    MaxIters,
    /// No Armijo step was accepted (numerical floor reached).
    LineSearchStall,
    /// Objective or gradient became non-finite.
    Diverged,
}

/// Recorded trajectory of one solve.
#[derive(Debug, Clone, Serialize)]
pub struct IterTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
    pub final_iter: u64,
}

impl IterTrace {
    pub fn final_row(&self) -> &TraceRow {
        self.rows.last().expect("trace always records at least iteration 0")
    }
}

/// Solver failures. Divergence carries the trace recorded so far.
#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("objective diverged at iteration {iter}")]
    Diverged { iter: u64, trace: IterTrace },
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// Random factor pair with i.i.d. `N(0, init_scale²)` entries.
pub fn random_init(n: usize, m: usize, r: usize, init_scale: f64, seed: u64) -> Result<FactorPair> {
    if n == 0 || m == 0 || r == 0 {
        return Err(invalid(format!("dimensions must be positive, got n={n} m={m} r={r}")));
    }
    if !(init_scale >= 0.0) || !init_scale.is_finite() {
        return Err(invalid("init_scale must be nonnegative"));
    }
    let mut rng = rng::seeded_stream(seed, stream::INIT);
    let u = init_scale * rng::gaussian_matrix(&mut rng, n, r);
    let v = init_scale * rng::gaussian_matrix(&mut rng, m, r);
    FactorPair::new(u, v)
}

/// Gradient descent on `g̃` from a random initialization drawn from
/// `cfg.seed`.
pub fn gd_solve(p: &SensingProblem, cfg: &SolverConfig) -> std::result::Result<(FactorPair, IterTrace), SolveError> {
    cfg.validate()?;
    let w0 = random_init(p.n(), p.m(), p.r(), cfg.init_scale, cfg.seed)?;
    gd_solve_from(p, w0, cfg)
}

/// Gradient descent on `g̃` from an explicit starting pair.
pub fn gd_solve_from(
    p: &SensingProblem,
    w0: FactorPair,
    cfg: &SolverConfig,
) -> std::result::Result<(FactorPair, IterTrace), SolveError> {
    cfg.validate()?;
    if w0.u().nrows() != p.n() || w0.v().nrows() != p.m() {
        return Err(SolveError::Invalid(Error::DimensionMismatch(
            "starting pair does not match the problem".into(),
        )));
    }
    let objective = CentralizedObjective { p, mu: cfg.mu };
    let (u, v) = w0.into_parts();
    let (point, trace) = run_descent(&objective, vec![u, v], cfg)?;
    let mut it = point.into_iter();
    let pair = FactorPair::new(it.next().expect("u"), it.next().expect("v")).expect("shapes preserved");
    Ok((pair, trace))
}

// ---------------------------------------------------------------------------
// descent engine (shared with the distributed solver)
// ---------------------------------------------------------------------------

pub(crate) struct RowMetrics {
    pub fit_error: f64,
    pub opt_error: f64,
    pub balance_error: f64,
    pub consensus_error: Option<f64>,
}

/// A smooth objective over a list of matrix blocks, polynomial of degree ≤ 4
/// along lines.
pub(crate) trait Objective {
    type State;
    /// Value, gradient blocks, and reusable evaluation state (residuals).
    fn eval(&self, w: &[Matrix]) -> (f64, Vec<Matrix>, Self::State);
    /// Coefficients `c` of `φ(η) = objective(w + η·dir) = Σ cᵢ ηⁱ` (exact).
    fn line_poly(&self, w: &[Matrix], state: &Self::State, dir: &[Matrix]) -> [f64; 5];
    /// Per-row diagnostics at the current point.
    fn metrics(&self, w: &[Matrix], state: &Self::State, val: f64) -> RowMetrics;
}

pub(crate) fn eval_poly(c: &[f64; 5], eta: f64) -> f64 {
    c[0] + eta * (c[1] + eta * (c[2] + eta * (c[3] + eta * c[4])))
}

const MAX_BACKTRACKS: usize = 120;

pub(crate) fn run_descent<O: Objective>(
    obj: &O,
    mut w: Vec<Matrix>,
    cfg: &SolverConfig,
) -> std::result::Result<(Vec<Matrix>, IterTrace), SolveError> {
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut last_recorded: Option<u64> = None;
    let (mut val, mut grad, mut state) = obj.eval(&w);
    let mut iter: u64 = 0;
    loop {
        let grad_norm = grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt();
        if !val.is_finite() || !grad_norm.is_finite() {
            return Err(SolveError::Diverged {
                iter,
                trace: IterTrace {
                    rows,
                    termination: Termination::Diverged,
                    final_iter: iter,
                },
            });
        }
        let met = obj.metrics(&w, &state, val);
        let row = TraceRow {
            iter,
            g_val: val,
            fit_error: met.fit_error,
            opt_error: met.opt_error,
            balance_error: met.balance_error,
            grad_norm,
            consensus_error: met.consensus_error,
        };
        if iter % cfg.record_every == 0 {
            rows.push(row);
            last_recorded = Some(iter);
        }

        let termination = if grad_norm <= cfg.stop_grad_tol {
            Some(Termination::GradTol)
        } else if met.opt_error <= cfg.stop_opt_tol {
            Some(Termination::OptTol)
        } else if iter >= cfg.max_iters {
            Some(Termination::MaxIters)
        } else {
            None
        };
        if let Some(termination) = termination {
            if last_recorded != Some(iter) {
                rows.push(row);
            }
            return Ok((w, IterTrace { rows, termination, final_iter: iter }));
        }

        let dir: Vec<Matrix> = grad.iter().map(|g| -g).collect();
        let eta = match cfg.step_mode {
            StepMode::Fixed(eta) => eta,
            StepMode::Backtracking { eta0, shrink, c } => {
                let poly = obj.line_poly(&w, &state, &dir);
                let mut eta = eta0;
                let mut accepted = None;
                for _ in 0..MAX_BACKTRACKS {
                    if eval_poly(&poly, eta) <= val - c * eta * grad_norm * grad_norm {
                        accepted = Some(eta);
                        break;
                    }
                    eta *= shrink;
                }
                match accepted {
                    Some(eta) => eta,
                    None => {
                        if last_recorded != Some(iter) {
                            rows.push(row);
                        }
                        return Ok((
                            w,
                            IterTrace {
                                rows,
                                termination: Termination::LineSearchStall,
                                final_iter: iter,
                            },
                        ));
                    }
                }
            }
        };
        for (wi, di) in w.iter_mut().zip(&dir) {
            wi.zip_apply(di, |w, d| *w += eta * d);
        }
        (val, grad, state) = obj.eval(&w);
        iter += 1;
    }
}

/// `U·D_Vᵀ + D_U·Vᵀ`, the first-order change of the product along a
/// direction.
pub(crate) fn line_pi(u: &Matrix, v: &Matrix, du: &Matrix, dv: &Matrix) -> Matrix {
    u * dv.transpose() + du * v.transpose()
}

/// Quartic coefficients of `½‖res + η·a_pi + η²·a_k‖²`.
pub(crate) fn residual_quartic(res: &Vector, a_pi: &Vector, a_k: &Vector) -> [f64; 5] {
    [
        0.5 * res.norm_squared(),
        res.dot(a_pi),
        0.5 * a_pi.norm_squared() + res.dot(a_k),
        a_pi.dot(a_k),
        0.5 * a_k.norm_squared(),
    ]
}

/// Quartic coefficients of `(μ/4)·‖E + ηS + η²T‖²` for the balancing
/// regularizer along a line (`E, S, T` are the order-0/1/2 terms of the
/// balance gap).
pub(crate) fn balance_quartic(u: &Matrix, v: &Matrix, du: &Matrix, dv: &Matrix, mu: f64) -> [f64; 5] {
    let e = u.tr_mul(u) - v.tr_mul(v);
    let s_half = u.tr_mul(du) - v.tr_mul(dv);
    let s = &s_half + s_half.transpose();
    let t = du.tr_mul(du) - dv.tr_mul(dv);
    [
        mu / 4.0 * e.norm_squared(),
        mu / 2.0 * e.dot(&s),
        mu / 4.0 * (s.norm_squared() + 2.0 * e.dot(&t)),
        mu / 2.0 * s.dot(&t),
        mu / 4.0 * t.norm_squared(),
    ]
}

pub(crate) fn add_poly(acc: &mut [f64; 5], add: [f64; 5]) {
    for (a, b) in acc.iter_mut().zip(add) {
        *a += b;
    }
}

// ---------------------------------------------------------------------------
// centralized objective
// ---------------------------------------------------------------------------

struct CentralizedObjective<'a> {
    p: &'a SensingProblem,
    mu: f64,
}

pub(crate) struct CentralState {
    res: Vector,
    x: Matrix,
}

impl Objective for CentralizedObjective<'_> {
    type State = CentralState;

    fn eval(&self, w: &[Matrix]) -> (f64, Vec<Matrix>, CentralState) {
        let (u, v) = (&w[0], &w[1]);
        let x = u * v.transpose();
        let res = self.p.residual(&x).expect("dimensions validated at entry");
        let mut val = 0.5 * res.norm_squared();
        let gf = self.p.op().adjoint(&res).expect("dimensions validated at entry");
        let mut du = &gf * v;
        let mut dv = gf.tr_mul(u);
        if self.mu > 0.0 {
            let e = u.tr_mul(u) - v.tr_mul(v);
            val += self.mu / 4.0 * e.norm_squared();
            du += self.mu * (u * &e);
            dv -= self.mu * (v * &e);
        }
        (val, vec![du, dv], CentralState { res, x })
    }

    fn line_poly(&self, w: &[Matrix], state: &CentralState, dir: &[Matrix]) -> [f64; 5] {
        let (u, v) = (&w[0], &w[1]);
        let (du, dv) = (&dir[0], &dir[1]);
        let pi = line_pi(u, v, du, dv);
        let kk = du * dv.transpose();
        let a_pi = self.p.op().apply(&pi).expect("dims");
        let a_k = self.p.op().apply(&kk).expect("dims");
        let mut c = residual_quartic(&state.res, &a_pi, &a_k);
        if self.mu > 0.0 {
            add_poly(&mut c, balance_quartic(u, v, du, dv, self.mu));
        }
        c
    }

    fn metrics(&self, w: &[Matrix], state: &CentralState, _val: f64) -> RowMetrics {
        let (u, v) = (&w[0], &w[1]);
        let e = u.tr_mul(u) - v.tr_mul(v);
        RowMetrics {
            fit_error: state.res.norm_squared(),
            opt_error: (&state.x - self.p.x_star()).norm_squared(),
            balance_error: e.norm_squared(),
            consensus_error: None,
        }
    }
}
