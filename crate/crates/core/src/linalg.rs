//! Small dense linear-algebra helpers shared across modules.

use crate::rng;
use crate::Matrix;
use rand::Rng;

/// Relative singular-value threshold used for all numerical rank decisions:
/// `σ` counts toward the rank iff `σ > RANK_REL_TOL · σ_max`.
pub const RANK_REL_TOL: f64 = 1e-8;

/// Numerical rank of `m` under [`RANK_REL_TOL`].
pub fn numerical_rank(m: &Matrix) -> usize {
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_REL_TOL * smax).count()
}

/// Random `n × n` orthogonal matrix (QR of a Gaussian draw, signs fixed so
/// the factorization is unique).
pub fn random_orthogonal(n: usize, rng: &mut impl Rng) -> Matrix {
    let g = rng::gaussian_matrix(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Random `n × n` matrix with condition number exactly `cond` (singular
/// values log-spaced between `1` and `cond`).
pub fn random_with_condition(n: usize, cond: f64, rng: &mut impl Rng) -> Matrix {
    assert!(cond >= 1.0, "condition number must be >= 1");
    let q1 = random_orthogonal(n, rng);
    let q2 = random_orthogonal(n, rng);
    let mut s = Matrix::zeros(n, n);
    for i in 0..n {
        let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        s[(i, i)] = cond.powf(-t); // from 1 down to 1/cond
    }
    q1 * s * q2.transpose()
}

/// Spectral condition number (σ_max / σ_min); `+inf` if singular.
pub fn condition_number(m: &Matrix) -> f64 {
    let sv = m.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rank_of_outer_product() {
        let mut rng = rng::seeded(1);
        let a = rng::gaussian_matrix(&mut rng, 6, 2);
        let b = rng::gaussian_matrix(&mut rng, 5, 2);
        assert_eq!(numerical_rank(&(&a * b.transpose())), 2);
        assert_eq!(numerical_rank(&Matrix::zeros(4, 4)), 0);
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = random_orthogonal(5, &mut rng::seeded(3));
        let qtq = q.transpose() * &q;
        assert_relative_eq!(qtq, Matrix::identity(5, 5), epsilon = 1e-12);
    }

    #[test]
    fn conditioned_matrix_has_requested_condition() {
        let m = random_with_condition(4, 100.0, &mut rng::seeded(9));
        assert_relative_eq!(condition_number(&m), 100.0, max_relative = 1e-10);
    }
}
