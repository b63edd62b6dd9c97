//! Perturb a minimizer and check every restarted flow returns to it.

use nalgebra::DMatrix;
use stiefel_landing::diagnostics::{probe_stability, Comparison, ProbeOptions};
use stiefel_landing::flow::IntegratorConfig;
use stiefel_landing::landing::LandingParams;
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::{make_linear, make_rayleigh, rotated_spectrum, LINEAR21_A};

fn main() -> stiefel_landing::Result<()> {
    let params = LandingParams::new(1.0)?;
    let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(60.0);

    let a = DMatrix::from_column_slice(2, 1, &LINEAR21_A);
    let linear = make_linear(2, 1, a.clone())?;
    let x_star = FullRankMatrix::new(-a)?;
    let opts = ProbeOptions { radius: 0.1, trials: 20, seed: 8, comparison: Comparison::Point };
    println!("{}", probe_stability(&x_star, linear.objective(), &params, &cfg, &opts)?.to_json());

    let rayleigh = make_rayleigh(6, 2, rotated_spectrum(9, &[1.0, 2.0, 4.0, 5.0, 6.0, 7.0]))?;
    let x_star = FullRankMatrix::new(rayleigh.optimum().unwrap().minimizer.clone().unwrap())?;
    let opts = ProbeOptions { radius: 0.05, trials: 10, seed: 10, comparison: Comparison::Subspace };
    println!("{}", probe_stability(&x_star, rayleigh.objective(), &params, &cfg, &opts)?.to_json());
    Ok(())
}
