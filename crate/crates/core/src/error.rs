use std::path::PathBuf;

/// Errors surfaced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid velocity grid: {0}")]
    InvalidGrid(String),

    #[error("invalid collision kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: expected {expected} values, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("cannot allocate weight table: {bytes} bytes required ({entries} entries)")]
    Allocation { bytes: u128, entries: u128 },

    #[error("weight cache {path}: corrupt header: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },

    #[error("weight cache {path}: truncated payload: expected {expected} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("weight cache {path}: parameter mismatch for {field}: expected {expected}, file has {found}")]
    ParameterMismatch {
        path: PathBuf,
        field: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("CFL violation: dt = {dt} exceeds the stable bound {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("wall boundary produced negative re-emission coefficient {0}")]
    NegativeWallFlux(f64),

    #[error("decomposition: {0}")]
    Decomposition(String),

    #[error("communication failure on rank {rank} ({phase}): {reason}")]
    Communication {
        rank: usize,
        phase: String,
        reason: String,
    },

    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("config: missing required keys: {0}")]
    MissingKeys(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Coarse error classes, stable across versions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config = 2,
    Io = 3,
    WeightCache = 4,
    Numerical = 5,
    Communication = 6,
    InvalidInput = 7,
}

impl ErrorCategory {
    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Io => "io",
            ErrorCategory::WeightCache => "weight-cache",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Communication => "communication",
            ErrorCategory::InvalidInput => "invalid-input",
        }
    }

    /// Process exit code for this class.
    pub fn code(self) -> i32 {
        self as i32
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config { .. } | Error::MissingKeys(_) => ErrorCategory::Config,
            Error::Io { .. } => ErrorCategory::Io,
            Error::CorruptHeader { .. } | Error::Truncated { .. } | Error::ParameterMismatch { .. } => {
                ErrorCategory::WeightCache
            }
            Error::NonFinite(_) | Error::Cfl { .. } | Error::NegativeWallFlux(_) => ErrorCategory::Numerical,
            Error::Decomposition(_) | Error::Communication { .. } => ErrorCategory::Communication,
            Error::InvalidGrid(_)
            | Error::InvalidKernel(_)
            | Error::InvalidArgument(_)
            | Error::ShapeMismatch { .. }
            | Error::Allocation { .. } => ErrorCategory::InvalidInput,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
