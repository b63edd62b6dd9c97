//! The landing field `Λ(X) = ψ(X) X + λ ∇N(X)` and the PLAM field
//! `∇f(X) − X sym(∇f(X)ᵀX) + λ ∇N(X)`.
//!
//! Both are defined on all of `ℝ^{n×p}` and return raw ambient matrices:
//! off the Stiefel manifold they are neither tangent nor normal to it.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{gradient_of, penalty_gradient};
use crate::linalg::{frobenius, skew, sym, SkewMatrix};
use crate::random::gaussian_matrix;

/// A differentiable objective `f: ℝ^{n×p} → ℝ`.
///
/// Implementations must be reentrant: the flow and the diagnostics call
/// them from several threads at once.
pub trait Objective: Send + Sync {
    fn name(&self) -> &str;

    fn value(&self, x: &DMatrix<f64>) -> f64;

    /// Euclidean gradient `∇f(X)`, same shape as `X`.
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
}

/// `f ≡ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantObjective(pub f64);

impl Objective for ConstantObjective {
    fn name(&self) -> &str {
        "constant"
    }

    fn value(&self, _x: &DMatrix<f64>) -> f64 {
        self.0
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::zeros(x.nrows(), x.ncols())
    }
}

/// Outcome of [`validate_gradient`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Worst `‖∇f − ∇_fd f‖_F / max(‖∇f‖_F, ‖∇_fd f‖_F, 1)` over the probes.
    pub max_relative_error: f64,
    pub probes: usize,
}

impl GradientCheck {
    pub fn passes(&self, rtol: f64) -> bool {
        self.max_relative_error <= rtol
    }
}

/// Compares `∇f` with central finite differences of `f` (step `h`) at
/// Gaussian probe points of shape `n×p`.
pub fn validate_gradient<R: Rng + ?Sized>(
    obj: &dyn Objective,
    n: usize,
    p: usize,
    probes: usize,
    h: f64,
    rng: &mut R,
) -> GradientCheck {
    let mut worst = 0.0_f64;
    for _ in 0..probes {
        let x = gaussian_matrix(rng, n, p);
        let analytic = obj.gradient(&x);
        let mut fd = DMatrix::zeros(n, p);
        let mut xp = x.clone();
        for j in 0..p {
            for i in 0..n {
                let orig = xp[(i, j)];
                xp[(i, j)] = orig + h;
                let up = obj.value(&xp);
                xp[(i, j)] = orig - h;
                let down = obj.value(&xp);
                xp[(i, j)] = orig;
                fd[(i, j)] = (up - down) / (2.0 * h);
            }
        }
        let scale = analytic.norm().max(fd.norm()).max(1.0);
        worst = worst.max((&analytic - &fd).norm() / scale);
    }
    GradientCheck {
        max_relative_error: worst,
        probes,
    }
}

/// Regularization weight `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandingParams {
    pub lambda: f64,
}

impl LandingParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self { lambda })
        } else {
            Err(Error::Config(format!("lambda must be positive, got {lambda}")))
        }
    }
}

/// Which vector field a flow follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Landing,
    Plam,
}

impl FieldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldKind::Landing => "landing",
            FieldKind::Plam => "plam",
        }
    }

    pub fn evaluate(
        self,
        x: &DMatrix<f64>,
        obj: &dyn Objective,
        params: &LandingParams,
    ) -> Result<DMatrix<f64>> {
        match self {
            FieldKind::Landing => landing_field(x, obj, params),
            FieldKind::Plam => plam_field(x, obj, params),
        }
    }
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FieldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "landing" => Ok(FieldKind::Landing),
            "plam" => Ok(FieldKind::Plam),
            other => Err(Error::Config(format!("unknown field '{other}'"))),
        }
    }
}

/// `ψ(X) = 2 skew(∇f(X) Xᵀ)`, an `n×n` skew matrix.
pub fn relative_gradient_psi(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<SkewMatrix> {
    let g = gradient_of(x, obj)?;
    skew(&((g * x.transpose()) * 2.0))
}

/// `ψ(X) X`. For tall `X` this is `∇f (XᵀX) − X (∇fᵀ X)`, avoiding the
/// `n×n` matrix; for `n ≤ 2p` the explicit, exactly skew `ψ` is no dearer.
pub(crate) fn relative_gradient_from_euclidean(x: &DMatrix<f64>, g: &DMatrix<f64>) -> DMatrix<f64> {
    if x.nrows() <= 2 * x.ncols() {
        let gxt = g * x.transpose();
        (&gxt - gxt.transpose()) * x
    } else {
        g * (x.transpose() * x) - x * (g.transpose() * x)
    }
}

/// `ψ(X) X`.
pub fn relative_gradient(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<DMatrix<f64>> {
    let g = gradient_of(x, obj)?;
    Ok(relative_gradient_from_euclidean(x, &g))
}

/// `Λ(X) = ψ(X) X + λ X (XᵀX − I)`.
pub fn landing_field(x: &DMatrix<f64>, obj: &dyn Objective, params: &LandingParams) -> Result<DMatrix<f64>> {
    Ok(relative_gradient(x, obj)? + penalty_gradient(x) * params.lambda)
}

/// `∇f(X) − X sym(∇f(X)ᵀ X) + λ X (XᵀX − I)`.
pub fn plam_field(x: &DMatrix<f64>, obj: &dyn Objective, params: &LandingParams) -> Result<DMatrix<f64>> {
    let g = gradient_of(x, obj)?;
    let s = sym(&(g.transpose() * x))?;
    Ok(&g - x * s.matrix() + penalty_gradient(x) * params.lambda)
}

/// `(‖ψ(X) X‖_F, ‖∇N(X)‖_F)`; both vanish exactly on the critical set.
pub fn landing_residual(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<(f64, f64)> {
    Ok((relative_gradient(x, obj)?.norm(), penalty_gradient(x).norm()))
}

/// `⟨ψ(X) X, ∇N(X)⟩`, zero for every `X`.
pub fn component_inner_product(x: &DMatrix<f64>, obj: &dyn Objective) -> Result<f64> {
    Ok(frobenius(&relative_gradient(x, obj)?, &penalty_gradient(x)))
}
