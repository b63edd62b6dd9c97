//! The landing field splits into orthogonal tangential and normal parts; PLAM does not.

use stiefel_landing::flow::{integrate, IntegratorConfig};
use stiefel_landing::geometry::penalty_gradient;
use stiefel_landing::landing::{component_inner_product, landing_field, plam_field, FieldKind, LandingParams};
use stiefel_landing::linalg::{sym, FullRankMatrix};
use stiefel_landing::problems::make_procrustes;
use stiefel_landing::random::{gaussian_matrix, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let mut rng = rng_from_seed(3);
    let (n, p) = (8, 3);
    let a = gaussian_matrix(&mut rng, n, n) / (n as f64).sqrt();
    let b = gaussian_matrix(&mut rng, n, p) / (n as f64).sqrt();
    let prob = make_procrustes(n, p, a, b)?;
    let obj = prob.objective();
    let x = gaussian_matrix(&mut rng, n, p) * 0.5;
    let params = LandingParams::new(1.0)?;

    println!("⟨ψ(X)X, ∇N(X)⟩ = {:.1e}", component_inner_product(&x, obj)?);
    let g = obj.gradient(&x);
    let plam_tangential = &g - &x * sym(&(g.transpose() * &x))?.matrix();
    println!("PLAM ⟨tangential, ∇N⟩ = {:.3}", plam_tangential.dot(&penalty_gradient(&x)));
    println!(
        "‖Λ‖ = {:.4}, ‖PLAM field‖ = {:.4}",
        landing_field(&x, obj, &params)?.norm(),
        plam_field(&x, obj, &params)?.norm()
    );

    let x0 = FullRankMatrix::new(x)?;
    let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(30.0);
    for field in [FieldKind::Landing, FieldKind::Plam] {
        match integrate(&x0, field, obj, &params, &cfg) {
            Ok(traj) => {
                let end = traj.last();
                println!(
                    "{:7}: t = {:6.2}, f = {:.8}, N = {:.1e}",
                    field.as_str(),
                    end.t,
                    end.f,
                    end.penalty
                );
            }
            Err(e) => println!("{:7}: {e}", field.as_str()),
        }
    }
    Ok(())
}
