use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension/degree mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("letter {letter} out of range for alphabet size {dim}")]
    LetterOutOfRange { letter: usize, dim: usize },

    #[error("word of length {len} exceeds truncation degree {degree}")]
    WordTooLong { len: usize, degree: usize },

    #[error("requested degree {requested} exceeds available degree {available}")]
    DegreeTooLow { requested: usize, available: usize },

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: need at least {needed} points, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("ill-conditioned system (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("signatures {0} and {1} are indistinguishable up to degree {2}")]
    Indistinguishable(usize, usize, usize),

    #[error("too many mixture components: {0} (limit {1})")]
    TooManyComponents(usize, usize),

    #[error("rank-deficient design: column {column} is numerically dependent on earlier columns")]
    RankDeficient { column: String },

    #[error("Cholesky factorization failed after maximal jitter")]
    NotPositiveDefinite,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical routine (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned(_)
                | Error::Indistinguishable(..)
                | Error::RankDeficient { .. }
                | Error::NotPositiveDefinite
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
