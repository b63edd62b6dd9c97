//! Seeded random matrices.
//!
//! All randomness in the toolkit flows from a `u64` seed through
//! xoshiro256++ (`rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64`), so
//! every generated problem, starting point and perturbation is reproducible
//! bit for bit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type ToolkitRng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> ToolkitRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Independent stream for a sub-task (trial, cell, ...) of a seeded run.
pub fn substream(seed: u64, index: u64) -> ToolkitRng {
    let mut base = rng_from_seed(seed);
    for _ in 0..index {
        base.jump();
    }
    base
}

/// Matrix with i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, ncols, |_, _| rng.sample(StandardNormal))
}

/// Point on St(p, n): the Q factor of a Gaussian matrix.
pub fn random_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, p);
    let qr = g.qr();
    let mut q = qr.q();
    // fix the sign ambiguity of the QR factor
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, k, k);
    (&g + g.transpose()) * 0.5
}

pub fn random_skew<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, k, k);
    (&g - g.transpose()) * 0.5
}

/// `GᵀG + I` for a Gaussian `G`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, k, k);
    g.transpose() * &g + DMatrix::identity(k, k)
}

/// `U diag(√χ) Vᵀ` with random orthonormal `U`, `V`: a full-rank `n×p`
/// matrix whose Gram matrix has eigenvalues `chi`.
pub fn matrix_with_gram_spectrum<R: Rng + ?Sized>(rng: &mut R, n: usize, chi: &[f64]) -> DMatrix<f64> {
    let p = chi.len();
    let u = random_orthonormal(rng, n, p);
    let v = random_orthonormal(rng, p, p);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        p,
        chi.iter().map(|c| c.sqrt()),
    ));
    u * d * v.transpose()
}

/// Uniform sample in `[lo, hi)`.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
