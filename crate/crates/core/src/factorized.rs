//! The factored objective `g(U,V) = f(UVᵀ)` and its regularized variant
//! `g̃ = g + (μ/4)·R(U,V)` with `R(U,V) = ‖UᵀU − VᵀV‖_F²`: values, gradients,
//! the Hessian bilinear form and matrix-free Hessian-vector product, plus the
//! balanced-lift and factor-rescaling constructions.

use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::linalg::{self, RANK_REL_TOL};
use crate::problem::SensingProblem;
use crate::{Matrix, Vector};
use nalgebra::Cholesky;

/// The optimization variable `(U ∈ ℝ^{n×r}, V ∈ ℝ^{m×r})`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    u: Matrix,
    v: Matrix,
}

impl FactorPair {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.ncols() != v.ncols() {
            return Err(dim_mismatch(format!(
                "factor column counts differ: U has {}, V has {}",
                u.ncols(),
                v.ncols()
            )));
        }
        Ok(Self { u, v })
    }

    /// 1×1 pair from scalars, for the toy instance.
    pub fn scalar(u: f64, v: f64) -> Self {
        Self {
            u: Matrix::from_element(1, 1, u),
            v: Matrix::from_element(1, 1, v),
        }
    }

    pub fn u(&self) -> &Matrix {
        &self.u
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn rank_parameter(&self) -> usize {
        self.u.ncols()
    }

    /// The represented matrix `U Vᵀ`.
    pub fn product(&self) -> Matrix {
        &self.u * self.v.transpose()
    }

    /// `UᵀU − VᵀV`, the balance gap whose Frobenius norm squared is `R`.
    pub fn balance_gap(&self) -> Matrix {
        self.u.tr_mul(&self.u) - self.v.tr_mul(&self.v)
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.u, self.v)
    }
}

/// A tangent direction `(D_U ∈ ℝ^{n×r}, D_V ∈ ℝ^{m×r})` for Hessian forms.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDirection {
    pub du: Matrix,
    pub dv: Matrix,
}

impl FactorDirection {
    pub fn new(du: Matrix, dv: Matrix) -> Result<Self> {
        if du.ncols() != dv.ncols() {
            return Err(dim_mismatch("direction column counts differ"));
        }
        Ok(Self { du, dv })
    }

    pub fn scalar(du: f64, dv: f64) -> Self {
        Self {
            du: Matrix::from_element(1, 1, du),
            dv: Matrix::from_element(1, 1, dv),
        }
    }

    pub fn zeros_like(w: &FactorPair) -> Self {
        Self {
            du: Matrix::zeros(w.u().nrows(), w.u().ncols()),
            dv: Matrix::zeros(w.v().nrows(), w.v().ncols()),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.du.norm_squared() + self.dv.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.du.dot(&other.du) + self.dv.dot(&other.dv)
    }

    /// Stacks `vec(D_U)` then `vec(D_V)` (column-major) into one vector.
    pub fn to_stacked(&self) -> Vector {
        let mut out = Vector::zeros(self.du.len() + self.dv.len());
        out.as_mut_slice()[..self.du.len()].copy_from_slice(self.du.as_slice());
        out.as_mut_slice()[self.du.len()..].copy_from_slice(self.dv.as_slice());
        out
    }

    /// Inverse of [`Self::to_stacked`] for the given shape.
    pub fn from_stacked(n: usize, m: usize, r: usize, x: &Vector) -> Self {
        debug_assert_eq!(x.len(), (n + m) * r);
        let du = Matrix::from_column_slice(n, r, &x.as_slice()[..n * r]);
        let dv = Matrix::from_column_slice(m, r, &x.as_slice()[n * r..]);
        Self { du, dv }
    }
}

/// Balanced representative of a factor pair: `Ũ Ṽᵀ = U Vᵀ` with
/// `ŨᵀŨ = ṼᵀṼ`, together with the `r×r` maps `G₁, G₂` (with `G₁G₂ᵀ = I`)
/// carrying `(U, V)` onto `(Ũ, Ṽ) = (U G₁, V G₂)`.
#[derive(Debug, Clone)]
pub struct BalancedLift {
    pub u_tilde: Matrix,
    pub v_tilde: Matrix,
    pub g1: Matrix,
    pub g2: Matrix,
}

impl BalancedLift {
    pub fn pair(&self) -> FactorPair {
        FactorPair {
            u: self.u_tilde.clone(),
            v: self.v_tilde.clone(),
        }
    }
}

fn check_pair(p: &SensingProblem, w: &FactorPair) -> Result<()> {
    if w.u().nrows() != p.n() || w.v().nrows() != p.m() {
        return Err(dim_mismatch(format!(
            "factors are {}x{} / {}x{}, problem expects {}x· / {}x·",
            w.u().nrows(),
            w.u().ncols(),
            w.v().nrows(),
            w.v().ncols(),
            p.n(),
            p.m()
        )));
    }
    Ok(())
}

fn check_direction(w: &FactorPair, d: &FactorDirection) -> Result<()> {
    if d.du.shape() != w.u().shape() || d.dv.shape() != w.v().shape() {
        return Err(dim_mismatch("direction shape does not match factor pair"));
    }
    Ok(())
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) {
        return Err(invalid(format!("mu must be nonnegative, got {mu}")));
    }
    Ok(())
}

/// `R(U,V) = ‖UᵀU − VᵀV‖_F²`.
pub fn regularizer_value(w: &FactorPair) -> f64 {
    w.balance_gap().norm_squared()
}

/// `g̃(U,V) = f(UVᵀ) + (μ/4)·R(U,V)`; `μ = 0` is the plain objective.
pub fn g_value(p: &SensingProblem, w: &FactorPair, mu: f64) -> Result<f64> {
    check_pair(p, w)?;
    check_mu(mu)?;
    let f = p.f_value(&w.product())?;
    Ok(f + mu / 4.0 * regularizer_value(w))
}

/// Gradient of `g̃`:
/// `(∇f(UVᵀ)·V + μU(UᵀU−VᵀV), ∇f(UVᵀ)ᵀ·U − μV(UᵀU−VᵀV))`.
pub fn g_grad(p: &SensingProblem, w: &FactorPair, mu: f64) -> Result<FactorDirection> {
    check_pair(p, w)?;
    check_mu(mu)?;
    let gf = p.f_grad(&w.product())?;
    let mut du = &gf * w.v();
    let mut dv = gf.tr_mul(w.u());
    if mu > 0.0 {
        let e = w.balance_gap();
        du += mu * (w.u() * &e);
        dv -= mu * (w.v() * &e);
    }
    Ok(FactorDirection { du, dv })
}

/// The Hessian quadratic form `∇²g̃(U,V)[D, D]`:
///
/// `2⟨∇f, D_U D_Vᵀ⟩ + ∇²f[Π,Π] + (μ/2)‖S‖_F² + μ⟨UᵀU−VᵀV, D_UᵀD_U−D_VᵀD_V⟩`
///
/// with `Π = U D_Vᵀ + D_U Vᵀ` and `S = D_UᵀU + UᵀD_U − D_VᵀV − VᵀD_V`.
/// The last term vanishes at balanced points; away from them it is required
/// for agreement with second differences of `g̃`.
pub fn hess_bilinear(p: &SensingProblem, w: &FactorPair, d: &FactorDirection, mu: f64) -> Result<f64> {
    check_pair(p, w)?;
    check_direction(w, d)?;
    check_mu(mu)?;
    let gf = p.f_grad(&w.product())?;
    let pi = w.u() * d.dv.transpose() + &d.du * w.v().transpose();
    let mut out = 2.0 * gf.dot(&(&d.du * d.dv.transpose())) + p.f_hess_quadratic(&pi)?;
    if mu > 0.0 {
        let s = sym_cross(w, d);
        let e = w.balance_gap();
        let t = d.du.tr_mul(&d.du) - d.dv.tr_mul(&d.dv);
        out += mu / 2.0 * s.norm_squared() + mu * e.dot(&t);
    }
    Ok(out)
}

/// `D_UᵀU + UᵀD_U − D_VᵀV − VᵀD_V` (symmetric).
fn sym_cross(w: &FactorPair, d: &FactorDirection) -> Matrix {
    let mu_ = w.u().tr_mul(&d.du);
    let mv_ = w.v().tr_mul(&d.dv);
    let m = mu_ - mv_;
    &m + m.transpose()
}

/// Matrix-free Hessian-vector product `H[D]`, consistent with
/// [`hess_bilinear`] (`⟨H[D], D⟩` equals the quadratic form) and symmetric
/// (`⟨H[D₁], D₂⟩ = ⟨D₁, H[D₂]⟩`).
pub fn hess_vec(p: &SensingProblem, w: &FactorPair, d: &FactorDirection, mu: f64) -> Result<FactorDirection> {
    check_pair(p, w)?;
    check_direction(w, d)?;
    check_mu(mu)?;
    let gf = p.f_grad(&w.product())?;
    let pi = w.u() * d.dv.transpose() + &d.du * w.v().transpose();
    let hf = p.f_hess_apply(&pi)?;
    let mut hu = &hf * w.v() + &gf * &d.dv;
    let mut hv = hf.tr_mul(w.u()) + gf.tr_mul(&d.du);
    if mu > 0.0 {
        let e = w.balance_gap();
        let s = sym_cross(w, d);
        hu += mu * (&d.du * &e + w.u() * &s);
        hv -= mu * (&d.dv * &e + w.v() * &s);
    }
    Ok(FactorDirection { du: hu, dv: hv })
}

/// Balanced lift of a full-rank-product pair.
///
/// From the thin SVD `UVᵀ = PΣQᵀ` (rank must be exactly `r`), returns
/// `Ũ = PΣ^{1/2}`, `Ṽ = QΣ^{1/2}`, `G₁ = (UᵀU)⁻¹UᵀPΣ^{1/2}` and
/// `G₂ = (VᵀV)⁻¹VᵀQΣ^{1/2}`.
///
/// The SVD is computed through thin QRs of the factors and an `r×r` core
/// (`UVᵀ = Q_u (R_u R_vᵀ) Q_vᵀ`), which keeps the decomposition accurate on
/// products with large trailing null spaces. Singular-vector signs are
/// canonicalized (largest-magnitude entry of each left vector made
/// positive) so the lift is deterministic.
pub fn balanced_lift(w: &FactorPair) -> Result<BalancedLift> {
    let r = w.rank_parameter();
    if w.u().nrows() < r || w.v().nrows() < r {
        return Err(Error::DegenerateInput(format!(
            "factors with {r} columns over fewer rows cannot have a rank-{r} product"
        )));
    }
    let qr_u = w.u().clone().qr();
    let qr_v = w.v().clone().qr();
    let core = qr_u.r() * qr_v.r().transpose();
    let svd = core.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = if smax == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > RANK_REL_TOL * smax).count()
    };
    if rank < r {
        return Err(Error::DegenerateInput(format!(
            "rank(UVᵀ) = {rank} < r = {r}; use the degenerate escape path"
        )));
    }
    let p_core = svd.u.as_ref().expect("svd with u");
    let qt_core = svd.v_t.as_ref().expect("svd with v_t");
    let mut p = qr_u.q() * p_core;
    let mut q = qr_v.q() * qt_core.transpose();

    // sign fix: make the largest-|entry| of each left singular vector positive
    for k in 0..r {
        let col = p.column(k);
        let mut pivot = 0;
        for i in 0..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if p[(pivot, k)] < 0.0 {
            p.column_mut(k).neg_mut();
            q.column_mut(k).neg_mut();
        }
    }
    let mut u_tilde = p;
    let mut v_tilde = q;
    for k in 0..r {
        let s_sqrt = sv[k].sqrt();
        u_tilde.column_mut(k).scale_mut(s_sqrt);
        v_tilde.column_mut(k).scale_mut(s_sqrt);
    }

    let x = w.product();
    let scale = x.norm().max(1e-300);
    if ((&u_tilde * v_tilde.transpose()) - &x).norm() > 1e-9 * scale {
        return Err(Error::Numerical(
            "balanced lift lost the product; the input is too ill-conditioned".into(),
        ));
    }

    let g1 = gram_solve(w.u(), &u_tilde)?;
    let g2 = gram_solve(w.v(), &v_tilde)?;
    Ok(BalancedLift { u_tilde, v_tilde, g1, g2 })
}

/// Solves `(AᵀA) X = Aᵀ B` via Cholesky (A has full column rank here).
fn gram_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let gram = a.tr_mul(a);
    let rhs = a.tr_mul(b);
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::SingularMatrix("Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

/// The scaling ambiguity `(U, V) ↦ (UG, VG⁻ᵀ)`; the product is unchanged.
/// Rejects numerically singular `G`.
pub fn scale_factors(w: &FactorPair, g: &Matrix) -> Result<FactorPair> {
    let r = w.rank_parameter();
    if g.nrows() != r || g.ncols() != r {
        return Err(dim_mismatch(format!("G must be {r}x{r}")));
    }
    let cond = linalg::condition_number(g);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::SingularMatrix(format!(
            "G is numerically singular (condition number {cond:.3e})"
        )));
    }
    let u = w.u() * g;
    // V G⁻ᵀ = (G⁻¹ Vᵀ)ᵀ, via an LU solve rather than an explicit inverse.
    let lu = g.clone().lu();
    let z = lu
        .solve(&w.v().transpose())
        .ok_or_else(|| Error::SingularMatrix("LU solve with G failed".into()))?;
    Ok(FactorPair { u, v: z.transpose() })
}
