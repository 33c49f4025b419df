use thiserror::Error;

use crate::model::MetricViolation;

/// Errors raised by the simulation library.
///
/// Variants fall into three groups: structural problems with inputs
/// (bad dimensions, invalid metrics, malformed files), infeasibility of a
/// requested trajectory or benchmark, and contract violations where a caller
/// broke a documented precondition of an online algorithm.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("metric violates {} axiom(s); first: {}", .0.len(), .0[0])]
    InvalidMetric(Vec<MetricViolation>),

    #[error("trajectory visits an infeasible state at step {t}")]
    InfeasibleTrajectory { t: usize },

    #[error("predictor {predictor} sits on an infeasible state at step {t}")]
    InfeasiblePredictor { predictor: usize, t: usize },

    #[error("every followed state is infeasible at step {t}")]
    InfeasibleBenchmark { t: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("instance too large: {what} needs {needed} > {limit}")]
    SizeGuard {
        what: &'static str,
        needed: u128,
        limit: u128,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_contract_violation(&self) -> bool {
        matches!(self, Error::Contract(_))
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
