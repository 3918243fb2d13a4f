use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {value} at flat index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid shape {rows}x{cols}: {reason}")]
    InvalidShape {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("CFL condition violated: max|u|*dt/dx = {cfl} > 1")]
    CflViolation { cfl: f64 },

    #[error("standard deviation is zero; data is constant")]
    ZeroVariance,

    #[error("normal matrix is singular; retry with reg > 0")]
    SingularNormalMatrix,

    #[error("chunk {chunk} failed: {source}")]
    ChunkFailed {
        chunk: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed chunk runs: missing {missing:?}, duplicated {duplicated:?}")]
    MalformedRuns {
        missing: Vec<usize>,
        duplicated: Vec<usize>,
    },

    #[error("time index {0} is missing from the reference trajectory")]
    IndexMismatch(usize),

    #[error("timer resolution insufficient ({elapsed_ns} ns per run); increase reps or problem size")]
    TimerResolution { elapsed_ns: u128 },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: u64, found: u64 },

    #[error("checksum mismatch: header says {expected:#010x}, payload hashes to {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
