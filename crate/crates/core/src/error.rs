use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("mask is empty")]
    EmptyMask,

    #[error("mask has no interior cell")]
    NoInteriorCell,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("non-positive conformal factor {value} at cell {cell}")]
    NonPositive { cell: usize, value: f64 },

    #[error("point ({x}, {y}) lies outside the mask")]
    OutsideMask { x: f64, y: f64 },

    #[error("cell {cell} is not inside slice {slice}")]
    NotInside { cell: usize, slice: usize },

    #[error("spacetime is not expanding (slice {0} is not contained in a later slice)")]
    NotExpanding(usize),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("line search failed to reduce the residual (residual {residual:e})")]
    LineSearchFailed { residual: f64 },

    #[error("time {t} outside the stored range [{lo}, {hi}]")]
    TimeOutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("measure is atomic: a cell carries fraction {fraction} of the total mass (limit {limit})")]
    Atomic { fraction: f64, limit: f64 },

    #[error("evaluation window is empty")]
    EmptyWindow,

    #[error("region is empty")]
    EmptyRegion,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
