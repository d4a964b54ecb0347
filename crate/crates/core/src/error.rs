use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet size must be at least 2, got {0}")]
    AlphabetTooSmall(usize),

    #[error("alphabet size {m} exceeds the limit of {limit} for {what}")]
    AlphabetTooLarge { m: usize, limit: usize, what: &'static str },

    #[error("digit {digit} is outside the alphabet [0, {m})")]
    DigitOutOfRange { digit: usize, m: usize },

    #[error("probability {0} is not in [0, 1]")]
    BadProbability(f64),

    #[error("atom probabilities sum to {sum}, normalization error exceeds {tol:e}")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("enumeration of {entries} entries exceeds the cap of {cap}")]
    CapExceeded { entries: u128, cap: u128 },

    #[error("depth {depth} exceeds the exhaustive search cap of {cap}")]
    DepthCap { depth: usize, cap: usize },

    #[error("matrix family is empty")]
    EmptyFamily,

    #[error("negative matrix entry {0}")]
    NegativeEntry(f64),

    #[error("operation requires M = 2, got M = {0}")]
    NotDyadic(usize),

    #[error("family is reducible (m_1 = 0)")]
    Reducible,

    #[error("level mismatch: {0} vs {1}")]
    LevelMismatch(usize, usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("malformed distribution file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
