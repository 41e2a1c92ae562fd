use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("level {value} out of range 0..=15 at wordline {row}, bitline {col}")]
    LevelOutOfRange { row: usize, col: usize, value: u32 },

    #[error("permutation is not a bijection on 0..{len}")]
    NotABijection { len: usize },

    #[error("page length mismatch: {0} vs {1} vs {2}")]
    LengthMismatch(usize, usize, usize),

    #[error("too few wordlines: {0} (at least 3 required)")]
    TooFewWordlines(usize),

    #[error("too many wordlines for exhaustive search: {n} > {limit}")]
    TooManyWordlines { n: usize, limit: usize },

    #[error("too few blocks to split: {0} (at least 10 required)")]
    TooFewBlocks(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite gradient; try gradient clipping or a smaller learning rate")]
    NonFiniteGradient,

    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("BadMagic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("UnsupportedVersion: {0}")]
    UnsupportedVersion(u8),

    #[error("TruncatedFile: need {needed} bytes, have {available}")]
    TruncatedFile { needed: usize, available: usize },

    #[error("TrailingData: {0} unexpected bytes after payload")]
    TrailingData(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}
