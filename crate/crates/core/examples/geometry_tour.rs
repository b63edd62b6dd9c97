//! Tangent spaces, metrics and the Π map on the generalized Stiefel manifold St_M.

use stiefel_landing::geometry::{
    canonical_normal_project, euclidean_decompose, map_phi, map_phi_inverse, metric_g, metric_pi, pi_inverse,
    pi_map, stiefel_distance_penalty, tangent_decompose_omega_k, tangent_from_omega_k, GeneralizedStiefelPoint,
};
use stiefel_landing::linalg::{FullRankMatrix, SkewMatrix, SpdMatrix};
use stiefel_landing::random::{gaussian_matrix, random_orthonormal, random_skew, random_spd, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let mut rng = rng_from_seed(2);
    let (n, p) = (6, 2);

    // Φ_M carries St(p, n) onto St_M = { Y : YᵀY = M }.
    let m = SpdMatrix::new(random_spd(&mut rng, p))?;
    let q = FullRankMatrix::new(random_orthonormal(&mut rng, n, p))?;
    let yq = map_phi(&q, &m)?;
    let y = GeneralizedStiefelPoint::new(yq.clone())?;
    println!("‖YᵀY − M‖ = {:.1e}", (y.gram().matrix() - m.matrix()).norm());
    let back = map_phi_inverse(&yq, &m)?;
    println!("Φ⁻¹(Φ(Q)) recovers Q: N = {:.1e}", stiefel_distance_penalty(back.matrix()));

    let omega = SkewMatrix::from_square(&random_skew(&mut rng, p))?;
    let k = gaussian_matrix(&mut rng, n - p, p);
    let xi = tangent_from_omega_k(&y, &omega, &k)?;
    let (omega_back, k_back) = tangent_decompose_omega_k(&xi);
    println!(
        "(Ω, K) round trip: {:.1e}, {:.1e}",
        (omega_back.matrix() - omega.matrix()).norm(),
        (k_back - &k).norm()
    );

    let ambient = gaussian_matrix(&mut rng, n, p);
    let normal = canonical_normal_project(&y, &ambient)?;
    let tangent = &ambient - normal.value();
    println!("g(tangent part, normal part) = {:.1e}", metric_g(&y, &tangent, normal.value())?);

    let (t, nv) = euclidean_decompose(&y, &ambient)?;
    println!("⟨tangent, normal⟩_F = {:.1e}", t.value().dot(nv.value()));

    let zeta = pi_map(&y, &xi)?;
    let xi_back = pi_inverse(&y, &zeta)?;
    println!("Π⁻¹(Π(ξ)) = ξ: {:.1e}", (xi_back.value() - xi.value()).norm());
    println!(
        "g(ξ, ξ) = {:.6}, metric through Π = {:.6}",
        metric_g(&y, xi.value(), xi.value())?,
        metric_pi(&y, xi.value(), xi.value())?
    );
    Ok(())
}

