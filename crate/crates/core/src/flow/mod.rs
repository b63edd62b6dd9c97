//! Integration of `Ẋ = −Λ(X)` (or the PLAM analogue) with trajectory
//! recording and stopping rules.
//!
//! Along the exact landing flow `d/dt N(X) = −λ‖∇N(X)‖² ≤ 0`. The
//! integrator turns this into a per-step check: the penalty may grow by at
//! most `slack_factor` times the local truncation estimate (the gap between
//! the advanced state and an embedded lower-order state) plus a rounding
//! floor. Anything more aborts with [`Error::NonmonotonePenalty`].

mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::stiefel_distance_penalty;
use crate::landing::{FieldKind, LandingParams, Objective};
use crate::linalg::{singular_value_ratio, FullRankMatrix, RANK_RTOL};

pub use io::{read_csv, read_json, read_trajectory_file, write_csv, write_json, write_trajectory_file, TrajectoryFormat};

/// Default stopping residual on `‖Λ‖_F`.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// Default fixed step relative to the penalty time scale: `dt = DEFAULT_DT_LAMBDA / λ`.
pub const DEFAULT_DT_LAMBDA: f64 = 0.01;
/// Multiplier on the local truncation estimate allowed as penalty increase.
pub const DEFAULT_SLACK_FACTOR: f64 = 10.0;
/// Relative rounding floor added to the monotonicity slack.
const PENALTY_ROUNDING_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitEuler,
    Rk4,
    Rkf45,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "euler",
            Scheme::Rk4 => "rk4",
            Scheme::Rkf45 => "rkf45",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" | "explicit_euler" => Ok(Scheme::ExplicitEuler),
            "rk4" => Ok(Scheme::Rk4),
            "rkf45" | "rkf45_adaptive" => Ok(Scheme::Rkf45),
            other => Err(Error::Config(format!("unknown integrator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    /// Fixed step (euler, rk4) or initial step (rkf45).
    pub dt: f64,
    pub t_max: f64,
    /// Adaptive error control: `‖y₅ − y₄‖_F ≤ abs_tol + rel_tol·‖X‖_F`.
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Record every k-th accepted step (first and last states are always recorded).
    pub record_every: usize,
    /// Stop once `‖Λ(X)‖_F` drops to this value.
    pub residual_tol: f64,
    pub check_monotonicity: bool,
    pub slack_factor: f64,
    pub rank_rtol: f64,
}

impl IntegratorConfig {
    /// rk4 with `dt = 0.01/λ` and `t_max = 20/λ`.
    pub fn for_lambda(lambda: f64) -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt: DEFAULT_DT_LAMBDA / lambda,
            t_max: 20.0 / lambda,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            record_every: 1,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            check_monotonicity: true,
            slack_factor: DEFAULT_SLACK_FACTOR,
            rank_rtol: RANK_RTOL,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_record_every(mut self, k: usize) -> Self {
        self.record_every = k;
        self
    }

    pub fn with_residual_tol(mut self, tol: f64) -> Self {
        self.residual_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.dt) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !positive(self.t_max) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.scheme == Scheme::Rkf45 && !(positive(self.abs_tol) && positive(self.rel_tol)) {
            return Err(Error::Config("adaptive tolerances must be positive".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        let negative = |v: f64| v.is_nan() || v < 0.0;
        if negative(self.residual_tol) || negative(self.slack_factor) {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TMax,
    ResidualTol,
    RankFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::TMax => "t_max",
            Termination::ResidualTol => "residual_tol",
            Termination::RankFailure => "rank_failure",
        }
    }
}

/// One recorded state with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: DMatrix<f64>,
    /// `f(X)`
    pub f: f64,
    /// `N(X)`
    pub penalty: f64,
    /// `‖Λ(X)‖_F` for the field that generated the trajectory.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub field: FieldKind,
    pub lambda: f64,
    pub samples: Vec<Sample>,
    /// `None` when loaded from a format that does not record it (CSV).
    pub terminated_by: Option<Termination>,
}

impl Trajectory {
    pub fn first(&self) -> &Sample {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn shape(&self) -> (usize, usize) {
        self.samples[0].x.shape()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_penalty(&self) -> f64 {
        self.samples.iter().map(|s| s.penalty).fold(0.0, f64::max)
    }

    /// First recorded time with `N(X) ≤ level`.
    pub fn first_time_penalty_below(&self, level: f64) -> Option<f64> {
        self.samples.iter().find(|s| s.penalty <= level).map(|s| s.t)
    }
}

/// Sorted (ascending) eigenvalues of `XᵀX` at every sample.
pub fn gram_trajectory(traj: &Trajectory) -> Vec<(f64, Vec<f64>)> {
    traj.samples
        .iter()
        .map(|s| (s.t, sorted_gram_eigenvalues(&s.x)))
        .collect()
}

pub(crate) fn sorted_gram_eigenvalues(x: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(x.transpose() * x);
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

struct Stepper<'a> {
    field: FieldKind,
    obj: &'a dyn Objective,
    params: &'a LandingParams,
}

impl Stepper<'_> {
    /// `Ẋ = −Λ(X)`.
    fn rate(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(-self.field.evaluate(x, self.obj, self.params)?)
    }

    fn sample(&self, t: f64, x: &DMatrix<f64>, rate: &DMatrix<f64>) -> Sample {
        Sample {
            t,
            x: x.clone(),
            f: self.obj.value(x),
            penalty: stiefel_distance_penalty(x),
            residual: rate.norm(),
        }
    }
}

/// Proposed step: advanced state, rate there, and an embedded lower-order state.
struct Proposal {
    x: DMatrix<f64>,
    rate: DMatrix<f64>,
    embedded: DMatrix<f64>,
}

fn euler_step(s: &Stepper<'_>, x: &DMatrix<f64>, k1: &DMatrix<f64>, h: f64) -> Result<Proposal> {
    let x_new = x + k1 * h;
    let k_new = s.rate(&x_new)?;
    // Heun, reusing the rate at the new state
    let embedded = x + (k1 + &k_new) * (0.5 * h);
    Ok(Proposal {
        x: x_new,
        rate: k_new,
        embedded,
    })
}

fn rk4_step(s: &Stepper<'_>, x: &DMatrix<f64>, k1: &DMatrix<f64>, h: f64) -> Result<Proposal> {
    let k2 = s.rate(&(x + k1 * (0.5 * h)))?;
    let k3 = s.rate(&(x + &k2 * (0.5 * h)))?;
    let k4 = s.rate(&(x + &k3 * h))?;
    let x_new = x + (k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0);
    let k5 = s.rate(&x_new)?;
    // third-order companion with weights (1/6, 1/3, 1/3, 0, 1/6), k5 = rate at x_new
    let embedded = x + (k1 + &k2 * 2.0 + &k3 * 2.0 + &k5) * (h / 6.0);
    Ok(Proposal {
        x: x_new,
        rate: k5,
        embedded,
    })
}

const FEHLBERG_A: [[f64; 5]; 5] = [
    [1.0 / 4.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const FEHLBERG_B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0];
const FEHLBERG_B5: [f64; 6] = [
    16.0 / 135.0,
    0.0,
    6656.0 / 12825.0,
    28561.0 / 56430.0,
    -9.0 / 50.0,
    2.0 / 55.0,
];

/// Fehlberg pair; returns (fifth-order, fourth-order) states.
fn rkf45_states(
    s: &Stepper<'_>,
    x: &DMatrix<f64>,
    k1: &DMatrix<f64>,
    h: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut ks: Vec<DMatrix<f64>> = Vec::with_capacity(6);
    ks.push(k1.clone());
    for row in FEHLBERG_A.iter() {
        let mut stage = x.clone();
        for (k, &a) in ks.iter().zip(row.iter()) {
            if a != 0.0 {
                stage += k * (a * h);
            }
        }
        ks.push(s.rate(&stage)?);
    }
    let combine = |b: &[f64; 6]| {
        let mut out = x.clone();
        for (k, &w) in ks.iter().zip(b.iter()) {
            if w != 0.0 {
                out += k * (w * h);
            }
        }
        out
    };
    Ok((combine(&FEHLBERG_B5), combine(&FEHLBERG_B4)))
}

/// Integrates `Ẋ = −field(X)` from `x0`.
///
/// Stops at `t_max` or once the field residual falls to `residual_tol`.
/// Rank loss and (for the landing field) penalty growth beyond the
/// integrator slack abort with an error carrying the partial trajectory.
pub fn integrate(
    x0: &FullRankMatrix,
    field: FieldKind,
    obj: &dyn Objective,
    params: &LandingParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let stepper = Stepper { field, obj, params };
    let mut traj = Trajectory {
        field,
        lambda: params.lambda,
        samples: Vec::new(),
        terminated_by: None,
    };

    let mut x = x0.matrix().clone();
    let mut k = stepper.rate(&x)?;
    let mut t = 0.0;
    let mut penalty = stiefel_distance_penalty(&x);
    traj.samples.push(stepper.sample(t, &x, &k));
    if k.norm() <= cfg.residual_tol {
        traj.terminated_by = Some(Termination::ResidualTol);
        return Ok(traj);
    }

    let check_penalty = cfg.check_monotonicity && field == FieldKind::Landing;
    let mut steps: u64 = 0;
    let mut h = cfg.dt;

    loop {
        let remaining = cfg.t_max - t;
        if remaining <= 1e-12 * cfg.t_max {
            if traj.last().t != t {
                traj.samples.push(stepper.sample(t, &x, &k));
            }
            traj.terminated_by = Some(Termination::TMax);
            return Ok(traj);
        }

        let (proposal, t_new) = match cfg.scheme {
            Scheme::ExplicitEuler | Scheme::Rk4 => {
                let last = cfg.dt >= remaining * (1.0 - 1e-12);
                let step = if last { remaining } else { cfg.dt };
                let p = if cfg.scheme == Scheme::Rk4 {
                    rk4_step(&stepper, &x, &k, step)?
                } else {
                    euler_step(&stepper, &x, &k, step)?
                };
                let t_new = if last { cfg.t_max } else { (steps + 1) as f64 * cfg.dt };
                (p, t_new)
            }
            Scheme::Rkf45 => loop {
                let step = h.min(remaining);
                let (y5, y4) = rkf45_states(&stepper, &x, &k, step)?;
                let err = (&y5 - &y4).norm();
                let tol = cfg.abs_tol + cfg.rel_tol * x.norm();
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
                };
                if err.is_finite() && err <= tol {
                    let rate = stepper.rate(&y4)?;
                    h = step * factor;
                    let t_new = if step >= remaining { cfg.t_max } else { t + step };
                    break (
                        Proposal {
                            x: y4,
                            rate,
                            embedded: y5,
                        },
                        t_new,
                    );
                }
                h = if err.is_finite() { step * factor } else { step * 0.2 };
                if h <= 1e-14 * (1.0 + t) {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
            },
        };
        steps += 1;

        let finite = proposal.x.iter().all(|v| v.is_finite());
        if !finite {
            traj.terminated_by = Some(Termination::RankFailure);
            return Err(Error::RankFailure {
                t: t_new,
                ratio: f64::NAN,
                partial: Box::new(traj),
            });
        }

        let new_penalty = stiefel_distance_penalty(&proposal.x);
        if check_penalty {
            let estimate = (new_penalty - stiefel_distance_penalty(&proposal.embedded)).abs();
            let slack = cfg.slack_factor * estimate + PENALTY_ROUNDING_RTOL * (1.0 + penalty);
            let increase = new_penalty - penalty;
            if increase > slack {
                traj.samples.push(stepper.sample(t_new, &proposal.x, &proposal.rate));
                return Err(Error::NonmonotonePenalty {
                    t: t_new,
                    increase,
                    slack,
                    partial: Box::new(traj),
                });
            }
        }

        x = proposal.x;
        k = proposal.rate;
        t = t_new;
        penalty = new_penalty;

        let converged = k.norm() <= cfg.residual_tol;
        let at_end = t >= cfg.t_max;
        if steps.is_multiple_of(cfg.record_every as u64) || converged || at_end {
            let ratio = singular_value_ratio(&x);
            traj.samples.push(stepper.sample(t, &x, &k));
            if ratio <= cfg.rank_rtol {
                traj.terminated_by = Some(Termination::RankFailure);
                return Err(Error::RankFailure {
                    t,
                    ratio,
                    partial: Box::new(traj),
                });
            }
        }
        if converged {
            traj.terminated_by = Some(Termination::ResidualTol);
            return Ok(traj);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landing::ConstantObjective;
    use crate::problems::make_linear;
    use crate::random::{random_orthonormal, rng_from_seed};

    #[test]
    fn constant_objective_on_manifold_stays_put() {
        let q = random_orthonormal(&mut rng_from_seed(1), 5, 2);
        let x0 = FullRankMatrix::new(q.clone()).unwrap();
        let params = LandingParams::new(1.0).unwrap();
        let cfg = IntegratorConfig::for_lambda(1.0).with_t_max(1.0);
        let traj = integrate(&x0, FieldKind::Landing, &ConstantObjective(2.0), &params, &cfg).unwrap();
        for s in &traj.samples {
            assert!((&s.x - &q).norm() <= 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let cfg = IntegratorConfig::for_lambda(1.0);
        assert!(cfg.validate().is_ok());
        assert!(cfg.with_dt(0.0).validate().is_err());
        assert!(cfg.with_t_max(-1.0).validate().is_err());
        assert!(cfg.with_record_every(0).validate().is_err());
    }

    #[test]
    fn record_stride_keeps_first_and_last() {
        let prob = make_linear(2, 1, DMatrix::from_column_slice(2, 1, &[0.6, 0.8])).unwrap();
        let x0 = FullRankMatrix::new(DMatrix::from_column_slice(2, 1, &[1.5, -0.3])).unwrap();
        let params = LandingParams::new(1.0).unwrap();
        let cfg = IntegratorConfig::for_lambda(1.0)
            .with_t_max(1.0)
            .with_record_every(7);
        let traj = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg).unwrap();
        assert_eq!(traj.first().t, 0.0);
        assert_eq!(traj.last().t, 1.0);
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(traj.terminated_by, Some(Termination::TMax));
    }

    #[test]
    fn huge_step_is_reported_not_hidden() {
        let prob = make_linear(2, 1, DMatrix::from_column_slice(2, 1, &[0.6, 0.8])).unwrap();
        let x0 = FullRankMatrix::new(DMatrix::from_column_slice(2, 1, &[3.0, 0.0])).unwrap();
        let params = LandingParams::new(1.0).unwrap();
        let cfg = IntegratorConfig::for_lambda(1.0)
            .with_scheme(Scheme::ExplicitEuler)
            .with_dt(0.5)
            .with_t_max(10.0);
        let err = integrate(&x0, FieldKind::Landing, prob.objective(), &params, &cfg).unwrap_err();
        assert!(
            matches!(err, Error::NonmonotonePenalty { .. } | Error::RankFailure { .. }),
            "{err}"
        );
        assert!(err.partial_trajectory().is_some());
    }
}
