use thiserror::Error;

/// Errors produced anywhere in the optimization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh must have at least one element in each direction, got {nelx}x{nely}")]
    InvalidMeshSize { nelx: usize, nely: usize },

    #[error("index ({row}, {col}) out of bounds for {nrows}x{ncols} matrix")]
    IndexOutOfBounds {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("density {0} outside [0, 1]")]
    DensityOutOfRange(f64),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("state tag mismatch: pressure/displacement fields from iteration {state} used with design tag {design}")]
    StaleState { state: u64, design: u64 },

    #[error("iteration {iter} failed: {source}")]
    Iteration {
        iter: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
