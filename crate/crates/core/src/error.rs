use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An enumeration or construction would exceed a configured size cap.
    #[error("capacity exceeded: {what} = {value} is above the cap of {cap}")]
    Capacity {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("threshold not met: {got} share(s) stacked, at least {needed} required")]
    ThresholdNotMet { needed: usize, got: usize },

    /// Stacks of this size cannot be decided because the white and black
    /// weight ranges overlap.
    #[error("no decision threshold for {count} stacked shares: white weight reaches {white_max}, black weight drops to {black_min}")]
    AmbiguousThreshold {
        count: usize,
        white_max: usize,
        black_min: usize,
    },

    #[error("infeasible constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("degenerate function family: {0}")]
    DegenerateFamily(String),

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("share header mismatch: {0}")]
    HeaderMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(offset: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            offset,
            message: msg.into(),
        }
    }
}
