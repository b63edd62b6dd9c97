//! Dense kernels used by the geometry: symmetric and skew parts, SPD square
//! roots, orthogonal complements and the two Lyapunov solvers
//! `A S + S A = C` (symmetric unknown) and `Ω A + A Ω = C` (skew unknown).
//!
//! Both Lyapunov solvers diagonalize the SPD coefficient `A = Q Λ Qᵀ` and
//! divide entrywise in the eigenbasis, `S̃ᵢⱼ = C̃ᵢⱼ / (λᵢ + λⱼ)`. For a
//! symmetric coefficient this is the Bartels–Stewart method with a diagonal
//! Schur factor.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative asymmetry `‖A − Aᵀ‖_F / ‖A‖_F` accepted for SPD input.
pub const SYMMETRY_RTOL: f64 = 1e-12;
/// Full rank iff `σ_min > RANK_RTOL · σ_max`.
pub const RANK_RTOL: f64 = 1e-10;
/// SPD iff `λ_min > SPD_EIG_RTOL · λ_max` (and `λ_min > 0`).
pub const SPD_EIG_RTOL: f64 = 1e-13;

/// Tolerances of the linear-algebra layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub symmetry_rtol: f64,
    pub rank_rtol: f64,
    pub spd_eig_rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry_rtol: SYMMETRY_RTOL,
            rank_rtol: RANK_RTOL,
            spd_eig_rtol: SPD_EIG_RTOL,
        }
    }
}

/// Symmetric matrix, `A − Aᵀ = 0` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

/// Skew-symmetric matrix, `A + Aᵀ = 0` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetric part of a square matrix.
    pub fn from_square(a: &DMatrix<f64>) -> Result<Self> {
        sym(a)
    }

    pub fn zeros(k: usize) -> Self {
        Self(DMatrix::zeros(k, k))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl SkewMatrix {
    /// Skew-symmetric part of a square matrix.
    pub fn from_square(a: &DMatrix<f64>) -> Result<Self> {
        skew(a)
    }

    pub fn zeros(k: usize) -> Self {
        Self(DMatrix::zeros(k, k))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for SymMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl AsRef<DMatrix<f64>> for SkewMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Symmetric positive-definite matrix together with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    pub fn with_tolerances(m: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dim(format!(
                "SPD matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("SPD matrix"));
        }
        let scale = m.norm();
        let asym = (&m - m.transpose()).norm();
        if asym > tol.symmetry_rtol * scale {
            return Err(Error::NotSpd(format!(
                "relative asymmetry {:e} exceeds {:e}",
                asym / scale.max(f64::MIN_POSITIVE),
                tol.symmetry_rtol
            )));
        }
        let entries = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(entries.clone());
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if !(lmin > 0.0 && lmin > tol.spd_eig_rtol * lmax) {
            return Err(Error::NotSpd(format!(
                "smallest eigenvalue {lmin:e} (largest {lmax:e})"
            )));
        }
        Ok(Self {
            entries,
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            entries: DMatrix::identity(k, k),
            eigenvalues: vec![1.0; k],
            eigenvectors: DMatrix::identity(k, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Eigenvalues in the order of the columns of [`Self::eigenvectors`].
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    /// `Q f(Λ) Qᵀ` for a scalar function applied to the spectrum.
    fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        let out = scaled * q.transpose();
        (&out + out.transpose()) * 0.5
    }

    /// `M^{-1/2}`.
    pub fn inv_sqrt(&self) -> SpdMatrix {
        let entries = self.spectral_map(|l| 1.0 / l.sqrt());
        SpdMatrix {
            entries,
            eigenvalues: self.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect(),
            eigenvectors: self.eigenvectors.clone(),
        }
    }
}

impl AsRef<DMatrix<f64>> for SpdMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

fn require_square(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::dim(format!(
            "{what} requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

/// `(A + Aᵀ) / 2`.
pub fn sym(a: &DMatrix<f64>) -> Result<SymMatrix> {
    require_square(a, "sym")?;
    let mut s = (a + a.transpose()) * 0.5;
    // exact symmetry regardless of rounding order
    for i in 0..s.nrows() {
        for j in 0..i {
            s[(i, j)] = s[(j, i)];
        }
    }
    Ok(SymMatrix(s))
}

/// `(A − Aᵀ) / 2`.
pub fn skew(a: &DMatrix<f64>) -> Result<SkewMatrix> {
    require_square(a, "skew")?;
    let mut s = (a - a.transpose()) * 0.5;
    for i in 0..s.nrows() {
        s[(i, i)] = 0.0;
        for j in 0..i {
            s[(i, j)] = -s[(j, i)];
        }
    }
    Ok(SkewMatrix(s))
}

/// Symmetric SPD square root `R` with `R R = M`.
pub fn spd_sqrt(m: &SpdMatrix) -> SpdMatrix {
    let entries = m.spectral_map(f64::sqrt);
    SpdMatrix {
        entries,
        eigenvalues: m.eigenvalues.iter().map(|l| l.sqrt()).collect(),
        eigenvectors: m.eigenvectors.clone(),
    }
}

/// `σ_min / σ_max` of a tall matrix; zero for the zero matrix.
pub fn singular_value_ratio(x: &DMatrix<f64>) -> f64 {
    let sv = x.singular_values();
    let max = sv.max();
    if max > 0.0 && max.is_finite() {
        sv.min() / max
    } else {
        0.0
    }
}

/// An `n×p` matrix with `n ≥ p ≥ 1` and full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRankMatrix(DMatrix<f64>);

impl FullRankMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(x, &Tolerances::default())
    }

    pub fn with_tolerances(x: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let (n, p) = x.shape();
        if p == 0 || n < p {
            return Err(Error::dim(format!(
                "full-rank matrix needs n >= p >= 1, got {n}x{p}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("full-rank matrix"));
        }
        let ratio = singular_value_ratio(&x);
        if ratio > tol.rank_rtol {
            Ok(Self(x))
        } else {
            Err(Error::RankDeficient { ratio })
        }
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

impl AsRef<DMatrix<f64>> for FullRankMatrix {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// Orthonormal basis `X⊥` (n×(n−p)) of the orthogonal complement of the
/// column space of `X`: `XᵀX⊥ = 0`, `X⊥ᵀX⊥ = I`.
pub fn orth_complement(x: &FullRankMatrix) -> DMatrix<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    if n == p {
        return DMatrix::zeros(n, 0);
    }
    // QR of [X | I_n]: the first p columns of Q span col(X), the rest its complement.
    let mut aug = DMatrix::zeros(n, p + n);
    aug.view_mut((0, 0), (n, p)).copy_from(x.matrix());
    aug.view_mut((0, p), (n, n)).fill_with_identity();
    let q = aug.qr().q();
    q.columns(p, n - p).into_owned()
}

fn check_lyapunov_dims(a: &SpdMatrix, c: &DMatrix<f64>) -> Result<()> {
    if c.nrows() != a.dim() || c.ncols() != a.dim() {
        return Err(Error::dim(format!(
            "Lyapunov right-hand side is {}x{}, coefficient is {}x{}",
            c.nrows(),
            c.ncols(),
            a.dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// Solves `A X + X A = C` in the eigenbasis of `A`.
fn lyapunov_eigen(a: &SpdMatrix, c: &DMatrix<f64>) -> DMatrix<f64> {
    let q = a.eigenvectors();
    let lam = a.eigenvalues();
    let mut ct = q.transpose() * c * q;
    for j in 0..ct.ncols() {
        for i in 0..ct.nrows() {
            ct[(i, j)] /= lam[i] + lam[j];
        }
    }
    q * ct * q.transpose()
}

/// Unique symmetric `S` with `A S + S A = C`.
pub fn solve_lyapunov_spd(a: &SpdMatrix, c: &SymMatrix) -> Result<SymMatrix> {
    check_lyapunov_dims(a, c.matrix())?;
    sym(&lyapunov_eigen(a, c.matrix()))
}

/// Unique skew `Ω` with `Ω A + A Ω = C`.
pub fn solve_lyapunov_skew(a: &SpdMatrix, c: &SkewMatrix) -> Result<SkewMatrix> {
    check_lyapunov_dims(a, c.matrix())?;
    let omega = lyapunov_eigen(a, c.matrix());
    debug_assert!(
        (&omega + omega.transpose()).norm() <= 1e-10 * c.matrix().norm().max(f64::MIN_POSITIVE),
        "Lyapunov solution with skew right-hand side is not skew"
    );
    skew(&omega)
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}
