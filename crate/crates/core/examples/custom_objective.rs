//! Plugging in an objective of your own: the Brockett cost tr(XᵀAXD).

use nalgebra::{DMatrix, DVector};
use stiefel_landing::flow::{integrate, IntegratorConfig};
use stiefel_landing::landing::{validate_gradient, FieldKind, LandingParams, Objective};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::rotated_spectrum;
use stiefel_landing::random::{gaussian_matrix, rng_from_seed};

struct Brockett {
    a: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl Objective for Brockett {
    fn name(&self) -> &str {
        "brockett"
    }

    fn value(&self, x: &DMatrix<f64>) -> f64 {
        (x.transpose() * &self.a * x * &self.d).trace()
    }

    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a * x * &self.d * 2.0
    }
}

fn main() -> stiefel_landing::Result<()> {
    let (n, p) = (6, 3);
    let obj = Brockett {
        a: rotated_spectrum(11, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        d: DMatrix::from_diagonal(&DVector::from_column_slice(&[3.0, 2.0, 1.0])),
    };
    let mut rng = rng_from_seed(12);
    let check = validate_gradient(&obj, n, p, 20, 1e-6, &mut rng);
    println!("finite-difference check: max relative error {:.1e}", check.max_relative_error);

    let x0 = FullRankMatrix::new(gaussian_matrix(&mut rng, n, p) * 0.4)?;
    let params = LandingParams::new(1.0)?;
    let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(100.0);
    let traj = integrate(&x0, FieldKind::Landing, &obj, &params, &cfg)?;
    let x = &traj.last().x;
    // The minimizer pairs the largest weights with the smallest eigenvalues.
    println!("f = {:.8} (optimum 3·1 + 2·2 + 1·3 = 10)", traj.last().f);
    println!("XᵀAX =\n{:.6}", x.transpose() * &obj.a * x);
    Ok(())
}
