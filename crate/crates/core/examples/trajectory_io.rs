//! Trajectories on disk: CSV and JSON, both exact round trips.

use stiefel_landing::flow::{
    integrate, read_trajectory_file, write_trajectory_file, IntegratorConfig, TrajectoryFormat,
};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::problems::ProblemSpec;

fn main() -> stiefel_landing::Result<()> {
    let spec = ProblemSpec::builtin("procrustes").unwrap();
    let prob = spec.build()?;
    let params = LandingParams::new(1.0)?;
    let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(1.0).with_record_every(10);
    let traj = integrate(&spec.initial_point()?, FieldKind::Landing, prob.objective(), &params, &cfg)?;

    let dir = std::env::temp_dir().join("stiefel_landing_io_example");
    std::fs::create_dir_all(&dir)?;
    for format in [TrajectoryFormat::Csv, TrajectoryFormat::Json] {
        let path = dir.join(format!("trajectory.{}", format.extension()));
        write_trajectory_file(&traj, &path, format)?;
        let back = read_trajectory_file(&path, FieldKind::Landing, 1.0)?;
        println!(
            "{}: {} samples, identical = {}",
            path.display(),
            back.len(),
            back.samples == traj.samples
        );
    }
    let header = std::fs::read_to_string(dir.join("trajectory.csv"))?;
    println!("CSV header: {}", header.lines().next().unwrap_or_default());
    Ok(())
}
