//! Geometry of the generalized Stiefel manifold
//! `St_M(p, n) = { Y ∈ ℝ^{n×p} : YᵀY = M }`.
//!
//! Every full-rank `X` lies on `St_{XᵀX}(p, n)`, so a point here is a
//! full-rank matrix together with its cached Gram matrix. Two metrics are
//! provided:
//!
//! * the extended canonical metric
//!   `g_Y(ξ, ζ) = ⟨ξ, (I − ½ Y M⁻¹ Yᵀ) ζ M⁻¹⟩`, whose normal space is
//!   `{ Y M⁻¹ S : S symmetric }`;
//! * the Π-based metric `⟨ξ_T, Π⁻¹(ζ_T)⟩ + ⟨ξ_N, ζ_N⟩` built on the Euclidean
//!   tangent/normal split, whose normal space is `{ Y S : S symmetric }`.
//!
//! Both agree on tangent vectors. `M⁻¹` is only ever applied through a
//! Cholesky factorization.

use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};
use crate::landing::Objective;
use crate::linalg::{
    frobenius, orth_complement, skew, solve_lyapunov_skew, solve_lyapunov_spd, spd_sqrt,
    sym, FullRankMatrix, SkewMatrix, SpdMatrix, SymMatrix,
};

/// Relative tangent-membership tolerance: `‖ξᵀY + Yᵀξ‖_F ≤ TANGENT_RTOL·‖ξ‖_F·‖Y‖_F`.
pub const TANGENT_RTOL: f64 = 1e-8;
/// Relative agreement required between a supplied Gram matrix and `YᵀY`.
pub const GRAM_RTOL: f64 = 1e-12;

/// A point `Y` of `St_{YᵀY}(p, n)`.
#[derive(Debug, Clone)]
pub struct GeneralizedStiefelPoint {
    base: FullRankMatrix,
    gram: SpdMatrix,
    chol: Cholesky<f64, Dyn>,
    complement: OnceLock<DMatrix<f64>>,
    tangent_rtol: f64,
}

impl GeneralizedStiefelPoint {
    pub fn new(base: FullRankMatrix) -> Result<Self> {
        let x = base.matrix();
        let gram = SpdMatrix::new(x.transpose() * x)?;
        Self::assemble(base, gram)
    }

    pub fn from_matrix(x: DMatrix<f64>) -> Result<Self> {
        Self::new(FullRankMatrix::new(x)?)
    }

    /// Uses a precomputed Gram matrix, which must match `YᵀY`.
    pub fn with_gram(base: FullRankMatrix, gram: SpdMatrix) -> Result<Self> {
        let x = base.matrix();
        let actual = x.transpose() * x;
        if gram.dim() != actual.nrows() {
            return Err(Error::dim("Gram matrix size does not match the point"));
        }
        if (&actual - gram.matrix()).norm() > GRAM_RTOL * actual.norm() {
            return Err(Error::Config("supplied Gram matrix differs from YᵀY".into()));
        }
        Self::assemble(base, gram)
    }

    fn assemble(base: FullRankMatrix, gram: SpdMatrix) -> Result<Self> {
        let chol = Cholesky::new(gram.matrix().clone())
            .ok_or_else(|| Error::NotSpd("Cholesky factorization of the Gram matrix failed".into()))?;
        Ok(Self {
            base,
            gram,
            chol,
            complement: OnceLock::new(),
            tangent_rtol: TANGENT_RTOL,
        })
    }

    /// Overrides the tangent-membership tolerance used by [`TangentVector::new`].
    pub fn with_tangent_rtol(mut self, rtol: f64) -> Self {
        self.tangent_rtol = rtol;
        self
    }

    pub fn n(&self) -> usize {
        self.base.nrows()
    }

    pub fn p(&self) -> usize {
        self.base.ncols()
    }

    pub fn base(&self) -> &FullRankMatrix {
        &self.base
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        self.base.matrix()
    }

    pub fn gram(&self) -> &SpdMatrix {
        &self.gram
    }

    /// Cached orthonormal complement `Y⊥`.
    pub fn complement(&self) -> &DMatrix<f64> {
        self.complement.get_or_init(|| orth_complement(&self.base))
    }

    /// `M⁻¹ B`.
    pub fn gram_solve_left(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// `B M⁻¹`.
    pub fn gram_solve_right(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(&b.transpose()).transpose()
    }

    /// `‖ξᵀY + Yᵀξ‖_F`.
    pub fn tangent_residual(&self, xi: &DMatrix<f64>) -> f64 {
        let yt_xi = self.matrix().transpose() * xi;
        (&yt_xi + yt_xi.transpose()).norm()
    }

    fn check_ambient(&self, xi: &DMatrix<f64>) -> Result<()> {
        if xi.shape() != (self.n(), self.p()) {
            return Err(Error::dim(format!(
                "expected a {}x{} matrix, got {}x{}",
                self.n(),
                self.p(),
                xi.nrows(),
                xi.ncols()
            )));
        }
        Ok(())
    }

    fn same_as(&self, other: &GeneralizedStiefelPoint) -> bool {
        std::ptr::eq(self, other) || self.matrix() == other.matrix()
    }
}

/// Element of `T_Y St_M`, i.e. `ξᵀY + Yᵀξ = 0`.
#[derive(Debug, Clone)]
pub struct TangentVector<'a> {
    base: &'a GeneralizedStiefelPoint,
    value: DMatrix<f64>,
}

impl<'a> TangentVector<'a> {
    pub fn new(base: &'a GeneralizedStiefelPoint, value: DMatrix<f64>) -> Result<Self> {
        let scale = value.norm();
        Self::with_scale(base, value, scale)
    }

    /// Tangency is judged relative to `scale` when the vector was computed
    /// from a larger input and may be close to zero.
    pub(crate) fn with_scale(
        base: &'a GeneralizedStiefelPoint,
        value: DMatrix<f64>,
        scale: f64,
    ) -> Result<Self> {
        base.check_ambient(&value)?;
        let residual = base.tangent_residual(&value);
        let tolerance = base.tangent_rtol * value.norm().max(scale) * base.matrix().norm();
        if residual > tolerance {
            return Err(Error::NotTangent {
                residual,
                tolerance,
            });
        }
        Ok(Self { base, value })
    }

    pub fn zero(base: &'a GeneralizedStiefelPoint) -> Self {
        Self {
            base,
            value: DMatrix::zeros(base.n(), base.p()),
        }
    }

    pub fn base(&self) -> &'a GeneralizedStiefelPoint {
        self.base
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }

    pub fn into_value(self) -> DMatrix<f64> {
        self.value
    }
}

/// Which metric a normal vector is normal with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalMetric {
    /// Normal for `g`: `Y M⁻¹ S`.
    CanonicalG,
    /// Normal for the Euclidean (and Π-based) metric: `Y S`.
    Euclidean,
}

/// Element of a normal space, stored with its symmetric coefficient `S`.
#[derive(Debug, Clone)]
pub struct NormalVector<'a> {
    base: &'a GeneralizedStiefelPoint,
    value: DMatrix<f64>,
    coefficient: SymMatrix,
    metric: NormalMetric,
}

impl<'a> NormalVector<'a> {
    /// Builds the normal vector with coefficient `s` for the given metric.
    pub fn from_coefficient(
        base: &'a GeneralizedStiefelPoint,
        s: SymMatrix,
        metric: NormalMetric,
    ) -> Result<Self> {
        if s.dim() != base.p() {
            return Err(Error::dim("normal coefficient must be p×p"));
        }
        let value = match metric {
            NormalMetric::CanonicalG => base.matrix() * base.gram_solve_left(s.matrix()),
            NormalMetric::Euclidean => base.matrix() * s.matrix(),
        };
        Ok(Self {
            base,
            value,
            coefficient: s,
            metric,
        })
    }

    pub fn base(&self) -> &'a GeneralizedStiefelPoint {
        self.base
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }

    pub fn coefficient(&self) -> &SymMatrix {
        &self.coefficient
    }

    pub fn metric(&self) -> NormalMetric {
        self.metric
    }
}

/// `N(X) = ¼ ‖XᵀX − I‖²_F`.
pub fn stiefel_distance_penalty(x: &DMatrix<f64>) -> f64 {
    let mut g = x.transpose() * x;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    0.25 * g.norm_squared()
}

/// `∇N(X) = X (XᵀX − I)`.
pub fn penalty_gradient(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = x.transpose() * x;
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    x * g
}

/// `W Y` for skew `W ∈ ℝ^{n×n}`.
pub fn tangent_from_skew<'a>(
    y: &'a GeneralizedStiefelPoint,
    w: &SkewMatrix,
) -> Result<TangentVector<'a>> {
    if w.dim() != y.n() {
        return Err(Error::dim(format!(
            "skew generator must be {n}x{n}, got {k}x{k}",
            n = y.n(),
            k = w.dim()
        )));
    }
    TangentVector::new(y, w.matrix() * y.matrix())
}

/// `Y (YᵀY)⁻¹ Ω + Y⊥ K`.
pub fn tangent_from_omega_k<'a>(
    y: &'a GeneralizedStiefelPoint,
    omega: &SkewMatrix,
    k: &DMatrix<f64>,
) -> Result<TangentVector<'a>> {
    let (n, p) = (y.n(), y.p());
    if omega.dim() != p || k.shape() != (n - p, p) {
        return Err(Error::dim(format!(
            "expected Ω {p}x{p} and K {}x{p}, got Ω {}x{} and K {}x{}",
            n - p,
            omega.dim(),
            omega.dim(),
            k.nrows(),
            k.ncols()
        )));
    }
    let value = y.matrix() * y.gram_solve_left(omega.matrix()) + y.complement() * k;
    TangentVector::new(y, value)
}

/// Inverse of [`tangent_from_omega_k`]: `Ω = Yᵀξ`, `K = Y⊥ᵀξ`.
pub fn tangent_decompose_omega_k(xi: &TangentVector<'_>) -> (SkewMatrix, DMatrix<f64>) {
    let y = xi.base();
    let omega = skew(&(y.matrix().transpose() * xi.value())).expect("p×p is square");
    let k = y.complement().transpose() * xi.value();
    (omega, k)
}

/// `Φ(X) = X M^{1/2}`, mapping `St(p, n)` onto `St_M(p, n)`.
pub fn map_phi(x: &FullRankMatrix, m: &SpdMatrix) -> Result<FullRankMatrix> {
    if m.dim() != x.ncols() {
        return Err(Error::dim("Φ needs M of size p×p"));
    }
    FullRankMatrix::new(x.matrix() * spd_sqrt(m).matrix())
}

/// `Φ⁻¹(Y) = Y M^{-1/2}`.
pub fn map_phi_inverse(y: &FullRankMatrix, m: &SpdMatrix) -> Result<FullRankMatrix> {
    if m.dim() != y.ncols() {
        return Err(Error::dim("Φ⁻¹ needs M of size p×p"));
    }
    FullRankMatrix::new(y.matrix() * m.inv_sqrt().matrix())
}

/// Canonical metric of `St(p, n)`: `⟨ξ, (I − ½ X Xᵀ) ζ⟩`.
pub fn canonical_metric(x: &DMatrix<f64>, xi: &DMatrix<f64>, zeta: &DMatrix<f64>) -> f64 {
    let inner = zeta - x * (x.transpose() * zeta) * 0.5;
    frobenius(xi, &inner)
}

/// `g_Y(ξ, ζ) = ⟨ξ, (I − ½ Y (YᵀY)⁻¹ Yᵀ) ζ (YᵀY)⁻¹⟩` on all of `ℝ^{n×p}`.
pub fn metric_g(y: &GeneralizedStiefelPoint, xi: &DMatrix<f64>, zeta: &DMatrix<f64>) -> Result<f64> {
    y.check_ambient(xi)?;
    y.check_ambient(zeta)?;
    let yt_zeta = y.matrix().transpose() * zeta;
    let left = zeta - y.matrix() * y.gram_solve_left(&yt_zeta) * 0.5;
    Ok(frobenius(xi, &y.gram_solve_right(&left)))
}

/// Π-based metric `⟨ξ_T, Π⁻¹(ζ_T)⟩ + ⟨ξ_N, ζ_N⟩` with the Euclidean split.
pub fn metric_pi(x: &GeneralizedStiefelPoint, xi: &DMatrix<f64>, zeta: &DMatrix<f64>) -> Result<f64> {
    let (xi_t, xi_n) = euclidean_decompose(x, xi)?;
    let (zeta_t, zeta_n) = euclidean_decompose(x, zeta)?;
    let pinv = pi_inverse(x, &zeta_t)?;
    Ok(frobenius(xi_t.value(), pinv.value()) + frobenius(xi_n.value(), zeta_n.value()))
}

/// Euclidean-orthogonal split `ξ = ξ_T + X S` with `2 sym(Xᵀξ) = (XᵀX) S + S (XᵀX)`.
pub fn euclidean_decompose<'a>(
    x: &'a GeneralizedStiefelPoint,
    xi: &DMatrix<f64>,
) -> Result<(TangentVector<'a>, NormalVector<'a>)> {
    x.check_ambient(xi)?;
    let rhs = sym(&(x.matrix().transpose() * xi * 2.0))?;
    let s = solve_lyapunov_spd(x.gram(), &rhs)?;
    let normal = NormalVector::from_coefficient(x, s, NormalMetric::Euclidean)?;
    let tangent = TangentVector::with_scale(x, xi - normal.value(), xi.norm())?;
    Ok((tangent, normal))
}

/// `g`-orthogonal projection onto `N_Y = { Y M⁻¹ S }`; the coefficient is `S = sym(Yᵀξ)`.
pub fn canonical_normal_project<'a>(
    y: &'a GeneralizedStiefelPoint,
    xi: &DMatrix<f64>,
) -> Result<NormalVector<'a>> {
    y.check_ambient(xi)?;
    let s = sym(&(y.matrix().transpose() * xi))?;
    NormalVector::from_coefficient(y, s, NormalMetric::CanonicalG)
}

fn check_base(x: &GeneralizedStiefelPoint, v: &TangentVector<'_>) -> Result<()> {
    if x.same_as(v.base()) {
        Ok(())
    } else {
        Err(Error::BasePointMismatch)
    }
}

/// `Π_X(ξ) = ξ XᵀX + X Xᵀ ξ`.
pub fn pi_map<'a>(x: &'a GeneralizedStiefelPoint, xi: &TangentVector<'_>) -> Result<TangentVector<'a>> {
    check_base(x, xi)?;
    let value = xi.value() * x.gram().matrix() + x.matrix() * (x.matrix().transpose() * xi.value());
    TangentVector::new(x, value)
}

/// `Π_X⁻¹(ζ) = X (XᵀX)⁻¹ Ω_ζ + X⊥ X⊥ᵀ ζ (XᵀX)⁻¹`, where `Xᵀζ = Ω_ζ XᵀX + XᵀX Ω_ζ`.
pub fn pi_inverse<'a>(
    x: &'a GeneralizedStiefelPoint,
    zeta: &TangentVector<'_>,
) -> Result<TangentVector<'a>> {
    check_base(x, zeta)?;
    let c = skew(&(x.matrix().transpose() * zeta.value()))?;
    let omega = solve_lyapunov_skew(x.gram(), &c)?;
    let perp = x.complement();
    let value = x.matrix() * x.gram_solve_left(omega.matrix())
        + perp * x.gram_solve_right(&(perp.transpose() * zeta.value()));

    #[cfg(debug_assertions)]
    {
        // The closed form differs from Π⁻¹(ζ) by the Euclidean normal vector
        // ½ X (M⁻¹Ω − ΩM⁻¹); its tangent part must match.
        let closed = pi_inverse_closed_form(x, zeta.value());
        let (closed_t, _) = euclidean_decompose(x, &closed)?;
        let scale = value.norm().max(closed.norm());
        debug_assert!(
            (closed_t.value() - &value).norm() <= 1e-9 * scale,
            "Lyapunov and closed-form routes for Π⁻¹ disagree"
        );
    }

    TangentVector::new(x, value)
}

/// `(I − ½ X (XᵀX)⁻¹ Xᵀ) ζ (XᵀX)⁻¹`.
///
/// Pairs with tangent vectors exactly like `Π_X⁻¹(ζ)`, but as a matrix it
/// carries an extra Euclidean-normal component unless `Ω_ζ` commutes with
/// `XᵀX`.
pub fn pi_inverse_closed_form(x: &GeneralizedStiefelPoint, zeta: &DMatrix<f64>) -> DMatrix<f64> {
    let xt_zeta = x.matrix().transpose() * zeta;
    let left = zeta - x.matrix() * x.gram_solve_left(&xt_zeta) * 0.5;
    x.gram_solve_right(&left)
}

fn checked_gradient(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<DMatrix<f64>> {
    let g = obj.gradient(x);
    if g.shape() != x.shape() {
        return Err(Error::dim(format!(
            "objective '{}' returned a {}x{} gradient at a {}x{} point",
            obj.name(),
            g.nrows(),
            g.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("objective gradient"));
    }
    Ok(g)
}

/// Gradient of `f` for the metric `g`: `ψ(X) X` with `ψ(X) = 2 skew(∇f(X) Xᵀ)`.
pub fn riemannian_gradient_canonical<'a>(
    x: &'a GeneralizedStiefelPoint,
    obj: &dyn Objective,
) -> Result<TangentVector<'a>> {
    let g = checked_gradient(x.matrix(), obj)?;
    let value = crate::landing::relative_gradient_from_euclidean(x.matrix(), &g);
    TangentVector::with_scale(x, value, g.norm() * x.matrix().norm())
}

/// Gradient of `f` for the Euclidean metric: tangent part of `∇f(X)`.
pub fn riemannian_gradient_euclidean<'a>(
    x: &'a GeneralizedStiefelPoint,
    obj: &dyn Objective,
) -> Result<TangentVector<'a>> {
    let g = checked_gradient(x.matrix(), obj)?;
    Ok(euclidean_decompose(x, &g)?.0)
}

pub(crate) fn gradient_of(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<DMatrix<f64>> {
    checked_gradient(x, obj)
}
