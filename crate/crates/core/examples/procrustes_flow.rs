//! Nearest orthonormal matrix: the flow for ½‖X − B‖² ends at the polar factor of B.

use nalgebra::DMatrix;
use stiefel_landing::flow::{integrate, IntegratorConfig, Scheme};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::make_procrustes;
use stiefel_landing::random::{gaussian_matrix, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let mut rng = rng_from_seed(6);
    let (n, p) = (7, 3);
    let b = gaussian_matrix(&mut rng, n, p);
    let prob = make_procrustes(n, p, DMatrix::identity(n, n), b)?;
    let optimum = prob.optimum().unwrap();

    let x0 = FullRankMatrix::new(gaussian_matrix(&mut rng, n, p) * 0.3)?;
    let params = LandingParams::new(2.0)?;
    let cfg = IntegratorConfig::for_lambda(2.0).with_scheme(Scheme::Rkf45).with_t_max(40.0);
    let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg)?;

    let end = traj.last();
    println!("adaptive steps recorded: {}", traj.len());
    println!("f(X_end) = {:.10}, optimum = {:.10}", end.f, optimum.value);
    println!("‖X_end − polar(B)‖ = {:.1e}", (&end.x - optimum.minimizer.as_ref().unwrap()).norm());
    Ok(())
}
