//! Landing flows on St(1, 2) for a linear cost; writes one CSV per (λ, start).
//!
//! `cargo run --example figure1 -- out_dir`

use std::path::PathBuf;

use nalgebra::DMatrix;
use stiefel_landing::flow::{integrate, write_trajectory_file, IntegratorConfig, TrajectoryFormat};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::{make_linear, LINEAR21_A};

fn main() -> stiefel_landing::Result<()> {
    let out_dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figure1".into()));
    std::fs::create_dir_all(&out_dir)?;
    let prob = make_linear(2, 1, DMatrix::from_column_slice(2, 1, &LINEAR21_A))?;

    for lambda in [0.25, 1.0, 4.0] {
        let params = LandingParams::new(lambda)?;
        let cfg = IntegratorConfig::for_lambda(lambda).with_t_max(20.0 * (1.0 / lambda).max(1.0));
        for (label, start) in [("inside", [0.3, -0.4]), ("outside", [1.6, -1.2])] {
            let x0 = FullRankMatrix::new(DMatrix::from_column_slice(2, 1, &start))?;
            let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg)?;
            let path = out_dir.join(format!("lambda{lambda}_{label}.csv"));
            write_trajectory_file(&traj, &path, TrajectoryFormat::Csv)?;
            let landed = traj.first_time_penalty_below(1e-4).unwrap_or(f64::NAN);
            let end = &traj.last().x;
            println!(
                "λ = {lambda:<4} {label:7} N ≤ 1e-4 at t = {landed:6.3}, end = ({:+.6}, {:+.6}) -> {}",
                end[0],
                end[1],
                path.display()
            );
        }
    }
    Ok(())
}
