use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),

    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("renormalization shift must be non-negative, got {0}")]
    NegativeShift(f64),

    #[error("block index {index} outside [-1, {max}]")]
    BlockOutOfRange { index: i32, max: i32 },

    #[error("non-finite value at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("snapshot misalignment: expected {expected}, found {found}")]
    Misaligned { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
