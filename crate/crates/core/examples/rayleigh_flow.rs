//! The landing flow finds the bottom-p eigenspace of a symmetric matrix.

use stiefel_landing::flow::{integrate, IntegratorConfig};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::{make_rayleigh, rotated_spectrum};
use stiefel_landing::random::{gaussian_matrix, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let (n, p) = (10, 3);
    let spectrum: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let a = rotated_spectrum(4, &spectrum);
    let prob = make_rayleigh(n, p, a.clone())?;

    let x0 = FullRankMatrix::new(gaussian_matrix(&mut rng_from_seed(5), n, p) * 0.4)?;
    let params = LandingParams::new(1.0)?;
    let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(100.0).with_record_every(100);
    let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg)?;

    for s in &traj.samples {
        println!("t = {:7.2}  f = {:.10}  N = {:.2e}  ‖Λ‖ = {:.2e}", s.t, s.f, s.penalty, s.residual);
    }
    let x = &traj.last().x;
    let residual = (&a * x - x * (x.transpose() * &a * x)).norm();
    println!("optimum ½(1 + 2 + 3) = {}", prob.optimum().unwrap().value);
    println!("‖AX − X(XᵀAX)‖ = {residual:.1e}");
    Ok(())
}
