//! Gram and critical-point certificates as JSON reports.

use stiefel_landing::diagnostics::{
    certify_critical_convergence, certify_gram_convergence, CriticalTolerances, DEFAULT_TOL_GRAM,
};
use stiefel_landing::flow::{integrate, IntegratorConfig};
use stiefel_landing::landing::{FieldKind, LandingParams};
use stiefel_landing::problems::ProblemSpec;

fn main() -> stiefel_landing::Result<()> {
    let spec = ProblemSpec::builtin("rayleigh").unwrap();
    let prob = spec.build()?;
    let x0 = spec.initial_point()?;
    let params = LandingParams::new(1.0)?;

    for t_max in [2.0, 200.0] {
        let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(t_max);
        let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg)?;
        println!("t_max = {t_max}");
        println!("  {}", certify_gram_convergence(&traj, DEFAULT_TOL_GRAM).to_json());
        let critical = certify_critical_convergence(&traj, prob.objective(), CriticalTolerances::default())?;
        println!("  {}", critical.to_json());
    }
    Ok(())
}
