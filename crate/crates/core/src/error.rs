use thiserror::Error;

/// Errors raised across the simulator and verification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("multiplier table queried at r = {r:e}, outside table range [{lo:e}, {hi:e}]")]
    TableRange { r: f64, lo: f64, hi: f64 },

    #[error("multiplier table is not non-decreasing at node {index} (m = {prev} then {next})")]
    NonMonotoneTable { index: usize, prev: f64, next: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("envelope blow-up beyond tabulated range (argument {argument:e} exceeds table maximum {table_max:e})")]
    EnvelopeBlowUp { argument: f64, table_max: f64 },

    #[error("envelope family cannot dominate data within C in [{lo:e}, {hi:e}]")]
    CannotDominate { lo: f64, hi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("oscillatory tail not converged after {intervals} zero-intervals (last partial sums {partial_sums:?})")]
    AccelerationFailed { intervals: usize, partial_sums: Vec<f64> },

    #[error("numerical blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },

    #[error("patch regularity lost at t = {t}: band |grad phi| = {value:e} below floor {floor:e}")]
    RegularityLost { t: f64, value: f64, floor: f64 },

    #[error("patch geometry: {0}")]
    Geometry(String),

    #[error("{0}")]
    Config(String),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
