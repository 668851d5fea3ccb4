//! Classification of candidate critical points of the factored objective as
//! global minima or strict saddles.
//!
//! Two certificates are available:
//! * the minimum Hessian eigenvalue, computed matrix-free by Lanczos over
//!   [`factorized::hess_vec`];
//! * for rank-deficient products, an explicit escape direction built from a
//!   null vector of a factor and the largest gradient entry, scaled so its
//!   curvature is exactly −1.

use crate::eigen;
use crate::error::{invalid, Error, Result};
use crate::factorized::{self, FactorDirection, FactorPair};
use crate::linalg::numerical_rank;
use crate::problem::SensingProblem;
use crate::rng::{self, stream};
use crate::{Matrix, Vector};
use serde::Serialize;

/// Verdict for a candidate point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    GlobalMin,
    StrictSaddle,
    Undetermined,
    NotCritical,
}

/// Decision thresholds. The defaults scale with the instance so the
/// classifier behaves the same across problem sizes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClassifyThresholds {
    /// Gradient norm above which a point is not considered critical.
    pub eps_crit: f64,
    /// `‖UVᵀ − X⋆‖_F²` below which a critical point is a global minimum.
    pub eps_opt: f64,
    /// Curvature must fall below `−tau_neg` to certify a strict saddle.
    pub tau_neg: f64,
    /// Eigensolver residual tolerance.
    pub eig_tol: f64,
    /// Eigensolver budget in Hessian-vector products.
    pub eig_max_iter: usize,
    /// Seed for the eigensolver start vectors.
    pub eig_seed: u64,
}

impl ClassifyThresholds {
    /// Instance-scaled defaults: `eps_crit = 1e-6·(1 + ‖∇f(0)‖_F)`,
    /// `eps_opt = 1e-8·‖X⋆‖_F²`, `tau_neg = 1e-8`.
    pub fn for_problem(p: &SensingProblem) -> Self {
        let g0 = p
            .f_grad(&Matrix::zeros(p.n(), p.m()))
            .expect("zero matrix matches the problem dimensions")
            .norm();
        Self {
            eps_crit: 1e-6 * (1.0 + g0),
            eps_opt: 1e-8 * p.x_star().norm_squared(),
            tau_neg: 1e-8,
            eig_tol: 1e-9,
            eig_max_iter: 4000,
            eig_seed: 0,
        }
    }
}

/// Output of the matrix-free minimum-eigenvalue solve.
#[derive(Debug, Clone)]
pub struct MinEigEstimate {
    /// Smallest eigenvalue estimate (a Rayleigh quotient, so always an upper
    /// bound on the true minimum).
    pub value: f64,
    /// Unit direction achieving `value` as its Rayleigh quotient.
    pub vector: FactorDirection,
    pub converged: bool,
    pub residual: f64,
    /// Lower bound on the Hessian spectral norm (max |Ritz value| seen).
    pub hess_norm_est: f64,
}

/// Smallest eigenvalue of `∇²g̃(U,V)` on the `(n+m)·r`-dimensional factor
/// space, via Lanczos with a seeded random start.
pub fn min_eig_hessian(
    p: &SensingProblem,
    w: &FactorPair,
    mu: f64,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<MinEigEstimate> {
    if tol <= 0.0 {
        return Err(invalid(format!("eigensolver tolerance must be positive, got {tol}")));
    }
    // validate dimensions and mu once; the closure below can then unwrap
    let probe = FactorDirection::zeros_like(w);
    factorized::hess_vec(p, w, &probe, mu)?;

    let (n, m, r) = (p.n(), p.m(), w.rank_parameter());
    let dim = (n + m) * r;
    let mut rng = rng::seeded_stream(seed, stream::EIGEN);
    let out = eigen::lanczos_extremal(
        dim,
        |x| {
            let d = FactorDirection::from_stacked(n, m, r, x);
            factorized::hess_vec(p, w, &d, mu)
                .expect("dimensions validated above")
                .to_stacked()
        },
        tol,
        max_iter,
        &mut rng,
    );
    Ok(MinEigEstimate {
        value: out.min_value,
        vector: FactorDirection::from_stacked(n, m, r, &out.min_vector),
        converged: out.converged,
        residual: out.residual,
        hess_norm_est: out.min_value.abs().max(out.max_value.abs()),
    })
}

/// Which factor supplied the null vector of an escape direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NullSide {
    NullOfU,
    NullOfV,
}

/// Explicit negative-curvature direction for a rank-deficient critical
/// point: `D_Uᵀ = b e_iᵀ`, `D_Vᵀ = (s·b) e_jᵀ` (or the symmetric form when
/// the null vector comes from `V`), with `s` chosen so the Hessian quadratic
/// form equals −1.
#[derive(Debug, Clone)]
pub struct EscapeDirection {
    pub direction: FactorDirection,
    /// The free scalar of the construction.
    pub scale: f64,
    /// Gradient entry `(i, j)` the direction pushes along.
    pub pivot: (usize, usize),
    /// Unit null vector of the deficient factor.
    pub null_vector: Vector,
    pub side: NullSide,
}

/// Result of the degenerate-case analysis.
#[derive(Debug, Clone)]
pub enum DegenerateOutcome {
    Escape(EscapeDirection),
    /// `∇f(UVᵀ) = 0`: the product already minimizes `f`, so no escape
    /// direction exists.
    GradientZero,
}

/// Escape construction for points with `rank(UVᵀ) < r`.
///
/// Picks the factor with deficient rank, takes a unit null vector `b` from
/// its SVD, pivots on the largest-magnitude gradient entry (ties broken
/// lexicographically), and sets the free scalar to
/// `s = −sign(∇f_ij)·(q + 1)/(2‖b‖²·|∇f_ij|)` with `q = ∇²f[Π,Π] ≥ 0`, which
/// makes the curvature of the returned direction exactly
/// `2s‖b‖²∇f_ij + q = −1`.
pub fn degenerate_escape(p: &SensingProblem, w: &FactorPair) -> Result<DegenerateOutcome> {
    let r = w.rank_parameter();
    let x = w.product();
    if x.nrows() != p.n() || x.ncols() != p.m() {
        return Err(Error::DimensionMismatch("factor pair does not match problem".into()));
    }
    if numerical_rank(&x) >= r {
        return Err(Error::NotDegenerate(format!("rank(UVᵀ) = {r}; the escape construction needs rank < r")));
    }
    let gf = p.f_grad(&x)?;

    // pivot: argmax |∇f_ij|, first hit in lexicographic (i, j) order wins
    let (mut pi, mut pj, mut best) = (0usize, 0usize, 0.0f64);
    for i in 0..p.n() {
        for j in 0..p.m() {
            let a = gf[(i, j)].abs();
            if a > best {
                best = a;
                pi = i;
                pj = j;
            }
        }
    }
    if best <= 1e-100 {
        return Ok(DegenerateOutcome::GradientZero);
    }

    let side = if numerical_rank(w.u()) < r {
        NullSide::NullOfU
    } else if numerical_rank(w.v()) < r {
        NullSide::NullOfV
    } else {
        // borderline numerics: take the factor that is closer to deficient
        let su = w.u().singular_values();
        let sv = w.v().singular_values();
        if su.min() / su.max().max(1e-300) <= sv.min() / sv.max().max(1e-300) {
            NullSide::NullOfU
        } else {
            NullSide::NullOfV
        }
    };

    let deficient = match side {
        NullSide::NullOfU => w.u(),
        NullSide::NullOfV => w.v(),
    };
    // null vector: eigenvector of the r×r Gram matrix for its smallest
    // eigenvalue (the small symmetric problem is the numerically safe route)
    let gram = deficient.tr_mul(deficient);
    let eig = gram.symmetric_eigen();
    let mut kmin = 0;
    for k in 0..r {
        if eig.eigenvalues[k] < eig.eigenvalues[kmin] {
            kmin = k;
        }
    }
    let mut b = eig.eigenvectors.column(kmin).into_owned();
    b /= b.norm();

    let (n, m) = (p.n(), p.m());
    let gf_ij = gf[(pi, pj)];
    let (du, dv, s) = match side {
        NullSide::NullOfU => {
            // Π = e_i (V b)ᵀ
            let vb = w.v() * &b;
            let mut pi_mat = Matrix::zeros(n, m);
            for j in 0..m {
                pi_mat[(pi, j)] = vb[j];
            }
            let q = p.f_hess_quadratic(&pi_mat)?;
            let s = escape_scale(q, b.norm_squared(), gf_ij);
            let mut du = Matrix::zeros(n, r);
            let mut dv = Matrix::zeros(m, r);
            for k in 0..r {
                du[(pi, k)] = b[k];
                dv[(pj, k)] = s * b[k];
            }
            (du, dv, s)
        }
        NullSide::NullOfV => {
            // Π = (U b) e_jᵀ
            let ub = w.u() * &b;
            let mut pi_mat = Matrix::zeros(n, m);
            for i in 0..n {
                pi_mat[(i, pj)] = ub[i];
            }
            let q = p.f_hess_quadratic(&pi_mat)?;
            let s = escape_scale(q, b.norm_squared(), gf_ij);
            let mut du = Matrix::zeros(n, r);
            let mut dv = Matrix::zeros(m, r);
            for k in 0..r {
                du[(pi, k)] = s * b[k];
                dv[(pj, k)] = b[k];
            }
            (du, dv, s)
        }
    };
    Ok(DegenerateOutcome::Escape(EscapeDirection {
        direction: FactorDirection::new(du, dv)?,
        scale: s,
        pivot: (pi, pj),
        null_vector: b,
        side,
    }))
}

/// `s` with `sign(s) = −sign(∇f_ij)` and `|s| = (q+1)/(2‖b‖²|∇f_ij|)`,
/// so `2s‖b‖²∇f_ij + q = −1`.
fn escape_scale(q: f64, b_norm_sq: f64, gf_ij: f64) -> f64 {
    -gf_ij.signum() * (q + 1.0) / (2.0 * b_norm_sq * gf_ij.abs())
}

/// Full landscape report for one candidate point.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeReport {
    pub classification: Classification,
    pub grad_norm: f64,
    /// `‖UVᵀ − X⋆‖_F²`.
    pub opt_error: f64,
    /// `rank(UVᵀ) < r`.
    pub degenerate: bool,
    /// Smallest Hessian eigenvalue estimate (skipped for non-critical points).
    pub min_eig: Option<f64>,
    #[serde(skip)]
    pub min_eig_vector: Option<FactorDirection>,
    pub eig_converged: Option<bool>,
    /// Lower bound on `‖∇²g̃‖₂` from the same Lanczos run.
    pub hess_norm_est: Option<f64>,
    /// Curvature of the constructed escape direction, when one was built.
    pub escape_curvature: Option<f64>,
}

/// Classifies a candidate point:
/// * gradient too large → `NotCritical`;
/// * `opt_error ≤ eps_opt` → `GlobalMin` (the eigenvalue is still reported);
/// * otherwise a strict saddle is certified by the degenerate escape
///   direction and/or a negative minimum eigenvalue, and `Undetermined` is
///   returned when neither certificate fires.
pub fn classify(
    p: &SensingProblem,
    w: &FactorPair,
    mu: f64,
    th: &ClassifyThresholds,
) -> Result<LandscapeReport> {
    let grad_norm = factorized::g_grad(p, w, mu)?.norm();
    let x = w.product();
    let opt_error = (&x - p.x_star()).norm_squared();
    let degenerate = numerical_rank(&x) < w.rank_parameter();

    if grad_norm > th.eps_crit {
        return Ok(LandscapeReport {
            classification: Classification::NotCritical,
            grad_norm,
            opt_error,
            degenerate,
            min_eig: None,
            min_eig_vector: None,
            eig_converged: None,
            hess_norm_est: None,
            escape_curvature: None,
        });
    }

    let eig = min_eig_hessian(p, w, mu, th.eig_tol, th.eig_max_iter, th.eig_seed)?;

    let mut escape_curvature = None;
    let classification = if opt_error <= th.eps_opt {
        Classification::GlobalMin
    } else {
        if degenerate {
            if let DegenerateOutcome::Escape(esc) = degenerate_escape(p, w)? {
                escape_curvature = Some(factorized::hess_bilinear(p, w, &esc.direction, mu)?);
            }
        }
        let certified = escape_curvature.map_or(false, |c| c < -th.tau_neg) || eig.value < -th.tau_neg;
        if certified {
            Classification::StrictSaddle
        } else {
            Classification::Undetermined
        }
    };

    Ok(LandscapeReport {
        classification,
        grad_norm,
        opt_error,
        degenerate,
        min_eig: Some(eig.value),
        min_eig_vector: Some(eig.vector),
        eig_converged: Some(eig.converged),
        hess_norm_est: Some(eig.hess_norm_est),
        escape_curvature,
    })
}

/// Result of mapping a lifted negative-curvature direction back to the
/// original factors.
#[derive(Debug, Clone)]
pub struct TransportCheck {
    /// `∇²g(U,V)[D,D]` for the mapped direction `D = (D̃_U G₁⁻¹, D̃_V G₂⁻¹)`.
    pub transported_curvature: f64,
    /// `∇²g̃(Ũ,Ṽ)[D̃,D̃]` at the balanced lift (the minimum eigenvalue found
    /// there, since `D̃` is the unit eigenvector estimate).
    pub lifted_curvature: f64,
    pub direction: FactorDirection,
}

/// Lifts `W` to its balanced representative, finds the minimum
/// eigen-direction `D̃` of the regularized Hessian there, maps it back
/// through `G₁⁻¹, G₂⁻¹`, and evaluates the unregularized curvature at `W`.
/// The mapped curvature never exceeds the lifted one (up to numerical
/// tolerance): the regularizer contributes a nonnegative term at balanced
/// points and the data terms transport exactly.
pub fn transport_check(
    p: &SensingProblem,
    w: &FactorPair,
    mu: f64,
    eig_tol: f64,
    eig_max_iter: usize,
    seed: u64,
) -> Result<TransportCheck> {
    let lift = factorized::balanced_lift(w)?;
    let lifted_pair = lift.pair();
    let eig = min_eig_hessian(p, &lifted_pair, mu, eig_tol, eig_max_iter, seed)?;
    let d_tilde = eig.vector;

    let du = solve_right(&d_tilde.du, &lift.g1)?;
    let dv = solve_right(&d_tilde.dv, &lift.g2)?;
    let direction = FactorDirection::new(du, dv)?;
    let transported_curvature = factorized::hess_bilinear(p, w, &direction, 0.0)?;
    Ok(TransportCheck {
        transported_curvature,
        lifted_curvature: eig.value,
        direction,
    })
}

/// `A G⁻¹` via an LU solve on `Gᵀ Xᵀ = Aᵀ`.
fn solve_right(a: &Matrix, g: &Matrix) -> Result<Matrix> {
    let lu = g.transpose().lu();
    let xt = lu
        .solve(&a.transpose())
        .ok_or_else(|| Error::SingularMatrix("lift map G is numerically singular".into()))?;
    Ok(xt.transpose())
}

/// Explicit `(n+m)r × (n+m)r` Hessian, assembled column-by-column from
/// [`factorized::hess_vec`] on basis directions. Intended for desk-scale
/// cross-checks of the matrix-free path.
pub fn dense_hessian(p: &SensingProblem, w: &FactorPair, mu: f64) -> Result<Matrix> {
    let (n, m, r) = (p.n(), p.m(), w.rank_parameter());
    let dim = (n + m) * r;
    let mut h = Matrix::zeros(dim, dim);
    for k in 0..dim {
        let mut e = Vector::zeros(dim);
        e[k] = 1.0;
        let d = FactorDirection::from_stacked(n, m, r, &e);
        let col = factorized::hess_vec(p, w, &d, mu)?.to_stacked();
        h.set_column(k, &col);
    }
    Ok(h)
}
