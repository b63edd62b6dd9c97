//! Eigenvalues of XᵀX along the landing flow against their closed form.

use stiefel_landing::diagnostics::{gram_closed_form, gram_eigenvector_drift, EIGEN_CLUSTER_TOL};
use stiefel_landing::flow::{gram_trajectory, integrate, IntegratorConfig};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::make_rayleigh;
use stiefel_landing::random::{matrix_with_gram_spectrum, random_symmetric, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let mut rng = rng_from_seed(7);
    let chi0 = [0.2, 0.9, 3.0];
    let prob = make_rayleigh(8, 3, random_symmetric(&mut rng, 8) * 0.3)?;
    let x0 = FullRankMatrix::new(matrix_with_gram_spectrum(&mut rng, 8, &chi0))?;
    let lambda = 0.5;
    let params = LandingParams::new(lambda)?;
    let cfg = IntegratorConfig::for_lambda(lambda).with_t_max(6.0).with_record_every(100);
    let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg)?;

    for (t, eigs) in gram_trajectory(&traj) {
        let line: Vec<String> = eigs
            .iter()
            .zip(chi0)
            .map(|(e, c)| format!("{e:.8} ({:+.1e})", e - gram_closed_form(c, lambda, t)))
            .collect();
        println!("t = {t:5.2}  {}", line.join("  "));
    }
    let drift = gram_eigenvector_drift(&traj, EIGEN_CLUSTER_TOL).unwrap_or(0.0);
    println!("largest eigenvector rotation: {drift:.1e} rad");
    Ok(())
}
