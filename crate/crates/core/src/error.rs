use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("basis is rank deficient: numerical rank {rank} < {expected} columns")]
    RankDeficient { rank: usize, expected: usize },

    #[error("singular system for row {row} of map {batch}")]
    SingularSystem { batch: usize, row: usize },

    #[error("regularization weight must be non-negative and finite, got {0}")]
    InvalidLambda(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("spectral resolution k = {k} exceeds the limit {max} for the vectorized solve")]
    TooLarge { k: usize, max: usize },

    #[error("batched solve needs {required} bytes, cap is {cap} bytes")]
    MemoryCap { required: u64, cap: u64 },

    #[error("metric undefined: all confusion counts are zero")]
    EmptyCounts,

    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("k = {k}, seed = {seed}: {source}")]
    Instance {
        k: usize,
        seed: u64,
        source: Box<Error>,
    },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(op: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch {
        op,
        detail: detail.into(),
    }
}
