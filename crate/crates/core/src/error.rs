use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate record at line {line}: ({week}, {city}, {artist}) already present")]
    DuplicateKey {
        line: u64,
        week: NaiveDate,
        city: String,
        artist: String,
    },

    #[error("invalid value at line {line}: {message}")]
    Value { line: u64, message: String },

    #[error("artist {0:?} is not in the artist index")]
    MissingArtist(String),

    #[error("unknown city {0:?}")]
    UnknownCity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate split at {boundary}: {train} train rows, {test} test rows")]
    DegenerateSplit {
        boundary: NaiveDate,
        train: usize,
        test: usize,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("NNLS did not converge within {0} iterations")]
    Convergence(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("baseline RMSE is zero; percent of baseline is undefined")]
    UndefinedBaseline,

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
