//! The matrix-sensing instance: linear operator, ground truth, the smooth
//! loss `f(X) = ½‖A(X − X⋆)‖₂²` and its derivatives, and empirical
//! restricted-convexity constants.

use crate::error::{dim_mismatch, invalid, Result};
use crate::factorized::FactorPair;
use crate::linalg::numerical_rank;
use crate::rng::{self, stream};
use crate::{Matrix, Vector};
use nalgebra::{DVectorView, Dyn};
use rand::Rng;

/// Linear sensing operator `A : ℝ^{n×m} → ℝ^p`, stored densely: row `i` of
/// `entries` is the `i`-th measurement functional applied to the
/// column-major vectorization of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOperator {
    entries: Matrix,
    n: usize,
    m: usize,
    p: usize,
    normalized: bool,
}

impl SensingOperator {
    /// Wraps an explicit `p × (n·m)` measurement matrix.
    pub fn new(entries: Matrix, n: usize, m: usize, normalized: bool) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(invalid(format!("matrix dimensions must be positive, got {n}x{m}")));
        }
        if entries.ncols() != n * m || entries.nrows() == 0 {
            return Err(dim_mismatch(format!(
                "operator entries are {}x{}, expected p x {} with p >= 1",
                entries.nrows(),
                entries.ncols(),
                n * m
            )));
        }
        let p = entries.nrows();
        Ok(Self { entries, n, m, p, normalized })
    }

    /// Gaussian operator: `p × nm` i.i.d. `N(0,1)` entries from the seeded
    /// generator, scaled by `1/√p` when `normalized`. Deterministic given
    /// `(n, m, p, normalized, seed)`.
    pub fn gaussian(n: usize, m: usize, p: usize, normalized: bool, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 || p == 0 {
            return Err(invalid(format!("dimensions must be positive, got n={n} m={m} p={p}")));
        }
        let mut rng = rng::seeded_stream(seed, stream::OPERATOR);
        let mut entries = rng::gaussian_matrix(&mut rng, p, n * m);
        if normalized {
            entries /= (p as f64).sqrt();
        }
        Ok(Self { entries, n, m, p, normalized })
    }

    /// The identity operator (`p = n·m`, `A = I`), mainly for tests:
    /// `f` then reduces to `½‖X − X⋆‖_F²`.
    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            entries: Matrix::identity(n * m, n * m),
            n,
            m,
            p: n * m,
            normalized: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// `A(X)`: component `i` is `⟨row_i reshaped to n×m, X⟩_F`.
    pub fn apply(&self, x: &Matrix) -> Result<Vector> {
        self.check_dims(x)?;
        let xv = DVectorView::from_slice(x.as_slice(), self.n * self.m);
        Ok(&self.entries * xv)
    }

    /// Adjoint `A*(y)`, satisfying `⟨A(X), y⟩ = ⟨X, A*(y)⟩_F`.
    pub fn adjoint(&self, y: &Vector) -> Result<Matrix> {
        if y.len() != self.p {
            return Err(dim_mismatch(format!("vector has length {}, operator has p={}", y.len(), self.p)));
        }
        let z = self.entries.tr_mul(y);
        Ok(z.reshape_generic(Dyn(self.n), Dyn(self.m)))
    }

    fn check_dims(&self, x: &Matrix) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.m {
            return Err(dim_mismatch(format!(
                "matrix is {}x{}, operator expects {}x{}",
                x.nrows(),
                x.ncols(),
                self.n,
                self.m
            )));
        }
        Ok(())
    }
}

/// Rank-`r` ground truth `X⋆ = U⋆ V⋆ᵀ` with i.i.d. `N(0,1)` factors.
/// Rank is verified by singular values; the draw is retried on the
/// (probability-zero) failure.
pub fn gen_ground_truth(n: usize, m: usize, r: usize, seed: u64) -> Result<(Matrix, FactorPair)> {
    if r == 0 || r > n.min(m) {
        return Err(invalid(format!("rank r={r} out of range for {n}x{m}")));
    }
    for attempt in 0..64 {
        let mut rng = rng::seeded_stream(seed, stream::TRUTH + attempt);
        let u = rng::gaussian_matrix(&mut rng, n, r);
        let v = rng::gaussian_matrix(&mut rng, m, r);
        let x = &u * v.transpose();
        if numerical_rank(&x) == r {
            return Ok((x, FactorPair::new(u, v)?));
        }
    }
    Err(invalid("ground-truth generation kept producing rank-deficient draws"))
}

/// A sensing instance: operator, rank-`r` ground truth, and the loss
/// `f(X) = ½‖A(X − X⋆)‖²` with its derivatives. `A(X⋆)` is cached so the
/// residual costs one operator application.
#[derive(Debug, Clone)]
pub struct SensingProblem {
    op: SensingOperator,
    x_star: Matrix,
    r: usize,
    seed: u64,
    measurements: Vector, // b = A(X⋆)
}

impl SensingProblem {
    /// Generates the full instance: Gaussian operator and Gaussian rank-`r`
    /// ground truth, both derived from `seed`.
    pub fn gen(n: usize, m: usize, r: usize, p: usize, normalized: bool, seed: u64) -> Result<Self> {
        let op = SensingOperator::gaussian(n, m, p, normalized, seed)?;
        let (x_star, _) = gen_ground_truth(n, m, r, seed)?;
        Self::from_parts(op, x_star, r, seed)
    }

    /// Builds an instance from an explicit operator and ground truth.
    pub fn from_parts(op: SensingOperator, x_star: Matrix, r: usize, seed: u64) -> Result<Self> {
        if x_star.nrows() != op.n() || x_star.ncols() != op.m() {
            return Err(dim_mismatch(format!(
                "ground truth is {}x{}, operator expects {}x{}",
                x_star.nrows(),
                x_star.ncols(),
                op.n(),
                op.m()
            )));
        }
        if r == 0 || r > op.n().min(op.m()) {
            return Err(invalid(format!("rank r={r} out of range")));
        }
        let measurements = op.apply(&x_star)?;
        Ok(Self { op, x_star, r, seed, measurements })
    }

    /// The 1×1 instance `f(x) = ½(1 − x)²` (identity operator, `x⋆ = 1`),
    /// whose factored landscape has the critical set `uv = 1` plus the
    /// strict saddle at the origin.
    pub fn scalar_toy() -> Self {
        let op = SensingOperator::identity(1, 1);
        Self::from_parts(op, Matrix::from_element(1, 1, 1.0), 1, 0).expect("scalar instance")
    }

    pub fn op(&self) -> &SensingOperator {
        &self.op
    }

    pub fn x_star(&self) -> &Matrix {
        &self.x_star
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn m(&self) -> usize {
        self.op.m()
    }

    pub fn p(&self) -> usize {
        self.op.p()
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `A(X) − A(X⋆)`.
    pub fn residual(&self, x: &Matrix) -> Result<Vector> {
        Ok(self.op.apply(x)? - &self.measurements)
    }

    /// `f(X) = ½‖A(X − X⋆)‖²`.
    pub fn f_value(&self, x: &Matrix) -> Result<f64> {
        Ok(0.5 * self.residual(x)?.norm_squared())
    }

    /// `∇f(X) = A*(A(X − X⋆))`.
    pub fn f_grad(&self, x: &Matrix) -> Result<Matrix> {
        self.op.adjoint(&self.residual(x)?)
    }

    /// Hessian action `∇²f[D] = A*(A(D))`; `f` is quadratic so this does not
    /// depend on the base point.
    pub fn f_hess_apply(&self, d: &Matrix) -> Result<Matrix> {
        self.op.adjoint(&self.op.apply(d)?)
    }

    /// `∇²f[D, D] = ‖A(D)‖²`.
    pub fn f_hess_quadratic(&self, d: &Matrix) -> Result<f64> {
        Ok(self.op.apply(d)?.norm_squared())
    }

    /// Empirical restricted-convexity constants: samples `trials` random
    /// matrices `D = G₁G₂ᵀ` of rank ≤ `max_rank` (the rank is drawn
    /// uniformly per trial) and returns the min/max of the Rayleigh ratio
    /// `∇²f[D,D] / ‖D‖_F²`.
    ///
    /// This is an inner estimate: `alpha_hat` is not guaranteed to lower
    /// bound the true restricted strong-convexity constant, it only reports
    /// what the sampler saw.
    pub fn estimate_rsc_constants(&self, max_rank: usize, trials: usize, seed: u64) -> Result<RscEstimate> {
        if trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if max_rank == 0 || max_rank > self.n().min(self.m()) {
            return Err(invalid(format!("max_rank={max_rank} out of range")));
        }
        let mut alpha_hat = f64::INFINITY;
        let mut beta_hat = f64::NEG_INFINITY;
        // Per-trial sub-streams: the min/max is independent of evaluation order.
        for t in 0..trials {
            let mut rng = rng::seeded_stream(seed, stream::RSC + t as u64);
            let k = rng.random_range(1..=max_rank);
            let g1 = rng::gaussian_matrix(&mut rng, self.n(), k);
            let g2 = rng::gaussian_matrix(&mut rng, self.m(), k);
            let d = &g1 * g2.transpose();
            let rho = self.f_hess_quadratic(&d)? / d.norm_squared();
            alpha_hat = alpha_hat.min(rho);
            beta_hat = beta_hat.max(rho);
        }
        Ok(RscEstimate { alpha_hat, beta_hat, trials, max_rank_tested: max_rank })
    }
}

/// Empirical bounds on the Hessian Rayleigh ratio over low-rank directions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RscEstimate {
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub trials: usize,
    pub max_rank_tested: usize,
}

impl RscEstimate {
    pub fn ratio(&self) -> f64 {
        self.beta_hat / self.alpha_hat
    }
}
