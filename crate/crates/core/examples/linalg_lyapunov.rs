//! Symmetric/skew parts, SPD square roots, Lyapunov solves and orthogonal complements.

use nalgebra::DMatrix;
use stiefel_landing::linalg::{
    orth_complement, skew, solve_lyapunov_skew, solve_lyapunov_spd, spd_sqrt, sym, FullRankMatrix, SpdMatrix,
};
use stiefel_landing::random::{gaussian_matrix, random_spd, rng_from_seed};

fn main() -> stiefel_landing::Result<()> {
    let mut rng = rng_from_seed(1);
    let a = gaussian_matrix(&mut rng, 4, 4);
    let (s, w) = (sym(&a)?, skew(&a)?);
    println!("‖A − sym(A) − skew(A)‖ = {:.1e}", (&a - s.matrix() - w.matrix()).norm());

    let m = SpdMatrix::new(random_spd(&mut rng, 4))?;
    let r = spd_sqrt(&m);
    println!("‖R R − M‖ = {:.1e}", (r.matrix() * r.matrix() - m.matrix()).norm());

    let x = solve_lyapunov_spd(&m, &s)?;
    let res = m.matrix() * x.matrix() + x.matrix() * m.matrix() - s.matrix();
    println!("sym Lyapunov residual = {:.1e}", res.norm());
    let omega = solve_lyapunov_skew(&m, &w)?;
    let res = omega.matrix() * m.matrix() + m.matrix() * omega.matrix() - w.matrix();
    println!("skew Lyapunov residual = {:.1e}", res.norm());

    let y = FullRankMatrix::new(gaussian_matrix(&mut rng, 6, 2))?;
    let perp = orth_complement(&y);
    println!(
        "complement {}x{}: ‖Yᵀ Y⊥‖ = {:.1e}, ‖Y⊥ᵀY⊥ − I‖ = {:.1e}",
        perp.nrows(),
        perp.ncols(),
        (y.matrix().transpose() * &perp).norm(),
        (perp.transpose() * &perp - DMatrix::identity(4, 4)).norm()
    );
    Ok(())
}
