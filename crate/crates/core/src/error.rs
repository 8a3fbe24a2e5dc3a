use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sequence base {0}: must be a prime >= 2")]
    InvalidBase(u64),

    #[error("Halton bases must be distinct, got ({0}, {0})")]
    DuplicateBases(u64),

    #[error("Halton start index must be >= 1, got {0}")]
    InvalidStartIndex(u64),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: key `{key}` at byte {offset}: {message}")]
    Manifest {
        path: PathBuf,
        key: String,
        offset: usize,
        message: String,
    },

    #[error("{path}: data size mismatch, expected {expected} bytes, found {actual}")]
    SizeMismatch {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("slice index {index} out of range for a volume of {slices} slices")]
    SliceOutOfRange { index: usize, slices: usize },

    #[error("phantom does not fit the grid: {0}")]
    PhantomDoesNotFit(String),

    #[error("slice area {value} at position {index} is negative")]
    NegativeArea { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
