use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("t = {t} lies within the maturity cutoff of horizon {horizon}")]
    MaturitySingularity { t: f64, horizon: f64 },
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("greeks undefined: {0}")]
    GreeksUndefined(String),
    #[error("zero conditioning mass below tree node {node}")]
    DegenerateDistribution { node: usize },
    #[error("unsupported payout: {0}")]
    UnsupportedPayout(String),
    #[error("unsupported size: {0}")]
    UnsupportedSize(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
