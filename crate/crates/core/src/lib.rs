//! Retraction-free optimization on the Stiefel manifold.
//!
//! The landing field `Λ(X) = ψ(X)X + λ∇N(X)` drives `X` toward a critical
//! point of `f` on `St(n, p)` while the Gram matrix `XᵀX` relaxes to the
//! identity, with no retraction or projection step. The crate provides the
//! dense linear algebra, the generalized Stiefel geometry behind the
//! analysis, the landing and PLAM fields, integrators that record
//! trajectories, benchmark problems and convergence certificates.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod landing;
pub mod linalg;
pub mod parallel;
pub mod problems;
pub mod random;

pub use error::{Error, Result};
