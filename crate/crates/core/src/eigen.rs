//! Lanczos iteration for extremal eigenvalues of a symmetric operator given
//! only through matrix-vector products.
//!
//! Full reorthogonalization is used throughout: the problem dimensions here
//! are a few thousand at most, so keeping the whole basis is affordable and
//! the classic loss-of-orthogonality failure mode is avoided.

use crate::Vector;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Result of an extremal-eigenvalue computation.
#[derive(Debug, Clone)]
pub struct ExtremalEigen {
    /// Best estimate of the smallest eigenvalue.
    pub min_value: f64,
    /// Unit-norm Ritz vector for `min_value`. Its Rayleigh quotient equals
    /// `min_value` by construction.
    pub min_vector: Vector,
    /// Estimate of the largest eigenvalue (from the same Krylov space);
    /// together with `min_value` this bounds the spectral norm from below.
    pub max_value: f64,
    /// Whether the residual `‖H x − θ x‖` dropped below the tolerance.
    pub converged: bool,
    /// Residual norm of the returned minimum pair.
    pub residual: f64,
    /// Operator applications consumed.
    pub operator_applications: usize,
}

struct RitzCandidate {
    value: f64,
    vector: Vector,
    residual: f64,
    max_value: f64,
}

struct PassOutcome {
    candidate: RitzCandidate,
    ops: usize,
    /// The basis reached the full space dimension (the Ritz values are exact).
    full_space: bool,
    /// The recurrence broke down early (invariant subspace found).
    breakdown: bool,
}

/// Smallest (and largest) eigenvalue of the symmetric operator `op` on
/// `ℝ^dim`, within `max_ops` operator applications. Convergence means the
/// minimum Ritz pair satisfies `‖H x − θ x‖ ≤ tol · max(1, |θ|)`.
/// Deterministic given the generator state.
pub fn lanczos_extremal(
    dim: usize,
    mut op: impl FnMut(&Vector) -> Vector,
    tol: f64,
    max_ops: usize,
    rng: &mut impl Rng,
) -> ExtremalEigen {
    assert!(dim > 0, "operator dimension must be positive");
    assert!(tol > 0.0, "tolerance must be positive");
    let mut best: Option<RitzCandidate> = None;
    let mut used = 0usize;
    let mut breakdown_restarts = 0usize;

    while used < max_ops {
        let pass = lanczos_pass(dim, &mut op, tol, max_ops - used, rng);
        used += pass.ops;
        let full_space = pass.full_space;
        let breakdown = pass.breakdown;
        if best.as_ref().map_or(true, |b| pass.candidate.value < b.value) {
            best = Some(pass.candidate);
        }
        let b = best.as_ref().expect("candidate recorded");
        let converged = b.residual <= tol * b.value.abs().max(1.0);
        if converged && full_space {
            break;
        }
        if breakdown && breakdown_restarts < 2 {
            // An invariant subspace may miss the extreme eigenvector; retry
            // from a fresh start vector and keep the better estimate.
            breakdown_restarts += 1;
            continue;
        }
        if converged {
            break;
        }
        if !breakdown {
            // the pass spent its whole step budget without converging
            break;
        }
    }

    let b = best.expect("at least one Lanczos pass ran");
    let converged = b.residual <= tol * b.value.abs().max(1.0);
    ExtremalEigen {
        min_value: b.value,
        min_vector: b.vector,
        max_value: b.max_value,
        converged,
        residual: b.residual,
        operator_applications: used,
    }
}

/// One Lanczos pass from a random start vector.
fn lanczos_pass(
    dim: usize,
    op: &mut impl FnMut(&Vector) -> Vector,
    tol: f64,
    max_steps: usize,
    rng: &mut impl Rng,
) -> PassOutcome {
    let mut q = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    q /= q.norm();

    let steps = max_steps.min(dim);
    let mut basis: Vec<Vector> = Vec::with_capacity(steps);
    let mut alphas: Vec<f64> = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    basis.push(q);

    let mut ops = 0usize;
    let mut tnorm: f64 = 0.0;
    loop {
        let k = alphas.len();
        let qk = basis[k].clone();
        let mut w = op(&qk);
        ops += 1;
        if k > 0 {
            w -= betas[k - 1] * &basis[k - 1];
        }
        let alpha = qk.dot(&w);
        w -= alpha * &qk;
        // two rounds of reorthogonalization against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w -= c * b;
            }
        }
        let beta = w.norm();
        alphas.push(alpha);
        tnorm = tnorm.max(alpha.abs() + beta);

        let k1 = alphas.len();
        let exhausted = k1 >= steps;
        let breakdown = beta <= 16.0 * f64::EPSILON * tnorm.max(1.0);
        if exhausted || breakdown || k1 % 10 == 0 {
            let candidate = ritz_extremes(&alphas, &betas, beta, &basis);
            let converged = candidate.residual <= tol * candidate.value.abs().max(1.0);
            if converged || exhausted || breakdown {
                return PassOutcome {
                    candidate,
                    ops,
                    full_space: k1 == dim,
                    breakdown: breakdown && k1 < dim,
                };
            }
        }
        betas.push(beta);
        basis.push(w / beta);
    }
}

/// Extremal Ritz pairs of the current tridiagonal matrix.
fn ritz_extremes(alphas: &[f64], betas: &[f64], beta_next: f64, basis: &[Vector]) -> RitzCandidate {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut imin = 0;
    let mut imax = 0;
    for i in 0..k {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let y = eig.eigenvectors.column(imin);
    let mut x = Vector::zeros(basis[0].len());
    for (i, b) in basis.iter().take(k).enumerate() {
        x += y[i] * b;
    }
    let nrm = x.norm();
    if nrm > 0.0 {
        x /= nrm;
    }
    RitzCandidate {
        value: eig.eigenvalues[imin],
        vector: x,
        residual: (beta_next * y[k - 1]).abs(),
        max_value: eig.eigenvalues[imax],
    }
}
