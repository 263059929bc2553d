use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain of chart '{chart}'")]
    Domain { chart: String, point: Vec<f64> },

    #[error("trajectory left the domain of chart '{chart}' at t = {time}")]
    DomainExit { chart: String, time: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("integration needs {needed} steps but the budget is {budget}")]
    StepBudget { needed: usize, budget: usize },

    #[error("flow differential is numerically singular (condition number {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("time {t} lies outside the control horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("target is not reachable: least-squares residual {residual:e} exceeds {tol:e}")]
    Unreachable { residual: f64, tol: f64 },

    #[error("base trajectory is fixed by the drift: target base is {distance:e} away from the drift endpoint")]
    BaseFixed { distance: f64 },

    #[error("control with {control_segments} segments does not align with a grid of {grid_segments} segments")]
    Alignment {
        control_segments: usize,
        grid_segments: usize,
    },

    #[error("parse error in '{context}': {source}")]
    Parse {
        context: String,
        #[source]
        source: ParseError,
    },

    #[error("field '{field}' produced a non-finite value at {point:?}")]
    NonFinite { field: String, point: Vec<f64> },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad user input as opposed to numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::Parse { .. }
                | Error::Invalid(_)
                | Error::OutsideHorizon { .. }
                | Error::Domain { .. }
                | Error::Alignment { .. }
        )
    }
}
