use thiserror::Error;

/// Errors raised by the simulator and the analytical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid modulation order {order} for {kind}")]
    InvalidOrder { kind: &'static str, order: usize },

    #[error("expected {expected} bits, got {got}")]
    BitLength { expected: usize, got: usize },

    #[error("invalid antenna counts: Mt = {mt}, Mu = {mu}")]
    InvalidAntennas { mt: usize, mu: usize },

    #[error("antenna combination {0:?} is not in the valid subset")]
    UnknownCombination(Vec<usize>),

    #[error("power allocation needs at least 2 blocks per frame, got {0}")]
    TooFewBlocks(usize),

    #[error("average power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("pairwise error probability is undefined for identical symbols")]
    IdenticalSymbols,

    #[error("scheme {0} is not supported by this operation")]
    UnsupportedScheme(String),

    #[error("semifactorial undefined for {0}")]
    NegativeSemifactorial(i64),

    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("SNR list is empty")]
    EmptySnrList,

    #[error("invalid SNR range `{0}`, expected start:step:stop")]
    SnrRange(String),

    #[error("unknown table id {0}")]
    UnknownTable(u32),

    #[error("min_errors must be at least 1")]
    MinErrors,

    #[error("malformed output file: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
