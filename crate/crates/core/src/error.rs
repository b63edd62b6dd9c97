use thiserror::Error;

use crate::flow::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("matrix is not of full column rank (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("not a tangent vector: membership residual {residual:e} exceeds {tolerance:e}")]
    NotTangent { residual: f64, tolerance: f64 },

    #[error("vector is attached to a different base point")]
    BasePointMismatch,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The state lost full column rank; usually the step size is too large.
    #[error("rank failure at t = {t}: sigma_min / sigma_max = {ratio:e}")]
    RankFailure {
        t: f64,
        ratio: f64,
        partial: Box<Trajectory>,
    },

    /// The distance penalty increased by more than the integrator slack.
    #[error("penalty increased by {increase:e} at t = {t} (allowed slack {slack:e})")]
    NonmonotonePenalty {
        t: f64,
        increase: f64,
        slack: f64,
        partial: Box<Trajectory>,
    },

    /// The adaptive integrator could not meet its tolerance.
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Partial trajectory carried by integration failures.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            Error::RankFailure { partial, .. } | Error::NonmonotonePenalty { partial, .. } => {
                Some(partial)
            }
            _ => None,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}
