use nalgebra::DMatrix;
use stiefel_landing::cli::FIGURE1_STARTS;
use stiefel_landing::diagnostics::{
    certify_critical_convergence, certify_gram_convergence, gram_closed_form, probe_stability, Comparison,
    CriticalTolerances, ProbeOptions, Status, DEFAULT_TOL_GRAM,
};
use stiefel_landing::flow::{integrate, IntegratorConfig, Termination, Trajectory};
use stiefel_landing::landing::{FieldKind, LandingParams, Objective};
use stiefel_landing::linalg::FullRankMatrix;
use stiefel_landing::problems::{make_constant, make_linear, make_rayleigh, rotated_spectrum, LINEAR21_A};
use stiefel_landing::random::{matrix_with_gram_spectrum, random_orthonormal, random_symmetric, rng_from_seed, uniform};
use stiefel_landing::Error;

fn run(x0: &DMatrix<f64>, field: FieldKind, obj: &dyn Objective, lambda: f64, t_max: f64) -> Trajectory {
    let params = LandingParams::new(lambda).unwrap();
    let cfg = IntegratorConfig::for_lambda(lambda).with_t_max(t_max);
    integrate(&FullRankMatrix::new(x0.clone()).unwrap(), field, obj, &params, &cfg).unwrap()
}

fn linear21_a() -> DMatrix<f64> {
    DMatrix::from_column_slice(2, 1, &LINEAR21_A)
}

/// Classical RK4 on `χ̇ = −2λχ(χ − 1)`.
fn scalar_rk4(chi0: f64, lambda: f64, t: f64, steps: usize) -> f64 {
    let rhs = |c: f64| -2.0 * lambda * c * (c - 1.0);
    let h = t / steps as f64;
    let mut c = chi0;
    for _ in 0..steps {
        let k1 = rhs(c);
        let k2 = rhs(c + 0.5 * h * k1);
        let k3 = rhs(c + 0.5 * h * k2);
        let k4 = rhs(c + h * k3);
        c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    c
}

#[test]
fn closed_form_solves_the_scalar_ode() {
    let mut rng = rng_from_seed(61);
    for _ in 0..100 {
        let chi0 = uniform(&mut rng, 0.05, 10.0);
        let lambda = uniform(&mut rng, 0.1, 5.0);
        let t = uniform(&mut rng, 0.0, 5.0);
        // d/dt of c₀ / (c₀ + (1 − c₀) e^{−2λt}).
        let e = (-2.0 * lambda * t).exp();
        let denom = chi0 + (1.0 - chi0) * e;
        let derivative = chi0 * 2.0 * lambda * (1.0 - chi0) * e / (denom * denom);
        let chi = gram_closed_form(chi0, lambda, t);
        let residual = derivative + 2.0 * lambda * chi * (chi - 1.0);
        assert!(residual.abs() <= 1e-10, "chi0={chi0} lambda={lambda} t={t}: {residual:e}");
    }
}

#[test]
fn closed_form_matches_scalar_integration() {
    let oracle = scalar_rk4(2.0, 1.0, 1.0, 10_000);
    assert!((gram_closed_form(2.0, 1.0, 1.0) - oracle).abs() <= 1e-8);
    for t in [0.0, 0.5, 3.0, 50.0] {
        assert_eq!(gram_closed_form(1.0, 0.7, t), 1.0);
    }
    assert_eq!(gram_closed_form(3.5, 0.7, 0.0), 3.5);
}

#[test]
fn gram_certificate_passes_on_the_figure_setup() {
    let obj = make_linear(2, 1, linear21_a()).unwrap();
    for lambda in [0.25, 1.0, 4.0] {
        for (label, v) in FIGURE1_STARTS {
            let x0 = DMatrix::from_column_slice(2, 1, &v);
            let traj = run(&x0, FieldKind::Landing, obj.objective(), lambda, 20.0 * (1.0 / lambda).max(1.0));
            let report = certify_gram_convergence(&traj, DEFAULT_TOL_GRAM);
            assert_eq!(report.status, Status::Pass, "lambda={lambda} {label}: {report:?}");
            assert!(report.pass);
            assert!(report.metrics["final_max_abs_eigenvalue_minus_one"] < 1e-4);
        }
    }
}

#[test]
fn gram_certificate_from_both_sides() {
    let mut rng = rng_from_seed(62);
    let prob = make_rayleigh(6, 2, random_symmetric(&mut rng, 6) * 0.3).unwrap();
    let x0 = matrix_with_gram_spectrum(&mut rng, 6, &[0.25, 4.0]);
    let traj = run(&x0, FieldKind::Landing, prob.objective(), 1.0, 8.0);
    let report = certify_gram_convergence(&traj, DEFAULT_TOL_GRAM);
    assert!(report.pass, "{report:?}");
    assert_eq!(report.metrics["max_step_away_from_one"], 0.0);
}

#[test]
fn gram_certificate_on_the_manifold_has_no_deviation() {
    let mut rng = rng_from_seed(63);
    let q = random_orthonormal(&mut rng, 5, 2);
    let prob = make_constant(5, 2, 1.0).unwrap();
    let traj = run(&q, FieldKind::Landing, prob.objective(), 1.0, 1.0);
    let report = certify_gram_convergence(&traj, DEFAULT_TOL_GRAM);
    assert!(report.pass);
    assert!(report.metrics["max_relative_deviation"] <= 1e-15);
}

#[test]
fn gram_certificate_degrades_at_fourth_order() {
    let mut rng = rng_from_seed(64);
    let prob = make_rayleigh(5, 2, random_symmetric(&mut rng, 5) * 0.2).unwrap();
    let x0 = FullRankMatrix::new(matrix_with_gram_spectrum(&mut rng, 5, &[0.4, 2.5])).unwrap();
    let params = LandingParams::new(1.0).unwrap();
    let deviation = |dt: f64| {
        let cfg = IntegratorConfig::for_lambda(1.0).with_dt(dt).with_t_max(2.0).with_residual_tol(0.0);
        let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg).unwrap();
        certify_gram_convergence(&traj, DEFAULT_TOL_GRAM).metrics["max_relative_deviation"]
    };
    let ratio = deviation(0.01) / deviation(0.005);
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn gram_certificate_rejects_a_wrong_rate() {
    let obj = make_linear(2, 1, linear21_a()).unwrap();
    let x0 = DMatrix::from_column_slice(2, 1, &[1.6, -1.2]);
    let mut traj = run(&x0, FieldKind::Landing, obj.objective(), 1.0, 5.0);
    traj.lambda = 0.5;
    let report = certify_gram_convergence(&traj, DEFAULT_TOL_GRAM);
    assert_eq!(report.status, Status::Fail);
    assert!(report.is_failure());
}

#[test]
fn gram_certificate_does_not_apply_to_plam() {
    let obj = make_linear(2, 1, linear21_a()).unwrap();
    let x0 = DMatrix::from_column_slice(2, 1, &[1.6, -1.2]);
    let traj = run(&x0, FieldKind::Plam, obj.objective(), 1.0, 2.0);
    let report = certify_gram_convergence(&traj, DEFAULT_TOL_GRAM);
    assert_eq!(report.status, Status::NotApplicable);
    assert!(!report.pass && !report.is_failure());
    assert!(report.note.is_some());
}

#[test]
fn critical_certificate_positive_cases() {
    let mut rng = rng_from_seed(65);
    let tol = CriticalTolerances::default();

    let constant = make_constant(6, 3, 2.0).unwrap();
    let q = random_orthonormal(&mut rng, 6, 3);
    let traj = run(&q, FieldKind::Landing, constant.objective(), 1.0, 10.0);
    assert_eq!(traj.len(), 1);
    assert_eq!(traj.terminated_by, Some(Termination::ResidualTol));
    assert!(certify_critical_convergence(&traj, constant.objective(), tol).unwrap().pass);

    let linear = make_linear(2, 1, linear21_a()).unwrap();
    let traj = run(&DMatrix::from_column_slice(2, 1, &[0.3, -0.4]), FieldKind::Landing, linear.objective(), 1.0, 40.0);
    let report = certify_critical_convergence(&traj, linear.objective(), tol).unwrap();
    assert!(report.pass, "{report:?}");
    assert!((&traj.last().x + linear21_a()).norm() <= 1e-6);

    let a = random_symmetric(&mut rng, 8);
    let rayleigh = make_rayleigh(8, 2, a.clone()).unwrap();
    let x0 = matrix_with_gram_spectrum(&mut rng, 8, &[0.5, 1.5]);
    let traj = run(&x0, FieldKind::Landing, rayleigh.objective(), 1.0, 400.0);
    let report = certify_critical_convergence(&traj, rayleigh.objective(), tol).unwrap();
    assert!(report.pass, "{report:?}");
    let x = &traj.last().x;
    assert!((&a * x - x * (x.transpose() * &a * x)).norm() <= 1e-5);
}

#[test]
fn critical_certificate_fails_on_truncated_runs() {
    let mut rng = rng_from_seed(66);
    let tol = CriticalTolerances::default();
    let linear = make_linear(2, 1, linear21_a()).unwrap();
    let traj = run(&DMatrix::from_column_slice(2, 1, &[1.6, -1.2]), FieldKind::Landing, linear.objective(), 1.0, 0.5);
    assert!(certify_critical_convergence(&traj, linear.objective(), tol).unwrap().is_failure());

    let rayleigh = make_rayleigh(8, 2, random_symmetric(&mut rng, 8)).unwrap();
    let x0 = matrix_with_gram_spectrum(&mut rng, 8, &[0.5, 1.5]);
    let traj = run(&x0, FieldKind::Landing, rayleigh.objective(), 1.0, 1.0);
    let report = certify_critical_convergence(&traj, rayleigh.objective(), tol).unwrap();
    assert_eq!(report.status, Status::Fail);
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["pass"], false);
    assert_eq!(json["tolerances"]["tol_feas"], 1e-8);
}

fn probe_config(t_max: f64) -> IntegratorConfig {
    IntegratorConfig::for_lambda(1.0).with_t_max(t_max)
}

#[test]
fn zero_radius_probe_recovers_trivially() {
    let linear = make_linear(2, 1, linear21_a()).unwrap();
    let x_star = FullRankMatrix::new(-linear21_a()).unwrap();
    let params = LandingParams::new(1.0).unwrap();
    let opts = ProbeOptions { radius: 0.0, trials: 3, seed: 1, comparison: Comparison::Point };
    let report = probe_stability(&x_star, linear.objective(), &params, &probe_config(1.0), &opts).unwrap();
    assert!(report.pass);
    assert_eq!(report.metrics["recovered_fraction"], 1.0);
    assert!(report.metrics["max_distance"] <= 1e-15);
}

#[test]
fn linear_optimizer_is_asymptotically_stable() {
    let linear = make_linear(2, 1, linear21_a()).unwrap();
    let x_star = FullRankMatrix::new(-linear21_a()).unwrap();
    let params = LandingParams::new(1.0).unwrap();
    let opts = ProbeOptions { radius: 0.1, trials: 20, seed: 67, comparison: Comparison::Point };
    let report = probe_stability(&x_star, linear.objective(), &params, &probe_config(40.0), &opts).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.metrics["trials"], 20.0);
    assert!(report.metrics["max_distance"] <= 1e-6);
}

#[test]
fn rayleigh_probe_recovers_the_bottom_subspace() {
    let spectrum: Vec<f64> = (1..=7).map(|i| i as f64).collect();
    let a = rotated_spectrum(68, &spectrum);
    let prob = make_rayleigh(7, 3, a).unwrap();
    let x_star = FullRankMatrix::new(prob.optimum().unwrap().minimizer.clone().unwrap()).unwrap();
    let params = LandingParams::new(1.0).unwrap();
    let opts = ProbeOptions { radius: 0.05, trials: 12, seed: 69, comparison: Comparison::Subspace };
    let report = probe_stability(&x_star, prob.objective(), &params, &probe_config(60.0), &opts).unwrap();
    assert!(report.pass, "{report:?}");
    assert!(report.metrics["max_principal_angle"] <= 1e-4);
    assert!(report.note.is_some());
}

#[test]
fn probe_preconditions_are_enforced() {
    let linear = make_linear(2, 1, linear21_a()).unwrap();
    let params = LandingParams::new(1.0).unwrap();
    let cfg = probe_config(1.0);
    let opts = ProbeOptions { radius: 0.1, trials: 2, seed: 0, comparison: Comparison::Point };

    let infeasible = FullRankMatrix::new(-linear21_a() * 1.1).unwrap();
    let not_critical = FullRankMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
    let x_star = FullRankMatrix::new(-linear21_a()).unwrap();
    for x in [&infeasible, &not_critical] {
        assert!(matches!(probe_stability(x, linear.objective(), &params, &cfg, &opts), Err(Error::Config(_))));
    }
    for bad in [
        ProbeOptions { radius: -0.1, ..opts },
        ProbeOptions { trials: 0, ..opts },
        ProbeOptions { radius: f64::NAN, ..opts },
    ] {
        assert!(probe_stability(&x_star, linear.objective(), &params, &cfg, &bad).is_err());
    }
    let bad_cfg = cfg.with_dt(-1.0);
    assert!(probe_stability(&x_star, linear.objective(), &params, &bad_cfg, &opts).is_err());
}
