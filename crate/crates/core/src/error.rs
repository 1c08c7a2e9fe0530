use thiserror::Error;

use crate::charts::ChartId;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("chart {chart} is not registered in this atlas")]
    UnknownChart { chart: ChartId },

    #[error("point is outside the overlap of charts {from} and {to}")]
    OutOfDomain { from: ChartId, to: ChartId },

    #[error("no transition registered between charts {from} and {to}")]
    NoTransition { from: ChartId, to: ChartId },

    #[error("configuration invalid: {0}")]
    Config(String),

    #[error("map is not involution-equivariant; witness point ({x}, {y}) maps with mismatch {mismatch:.3e}")]
    Equivariance { x: f64, y: f64, mismatch: f64 },

    #[error("orbit left all registered charts at t = {time}: chart {chart}, coords {coords:?}")]
    Escape {
        time: f64,
        chart: ChartId,
        coords: Vec<f64>,
    },

    #[error("tangent growth overflowed; shrink the renormalization interval")]
    NumericalOverflow,

    #[error("excision rejected: {0}")]
    Excision(String),

    #[error("gluing rejected: {0}")]
    Gluing(String),

    #[error("no return to the section within t = {t_max}")]
    NoReturn { t_max: f64 },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
