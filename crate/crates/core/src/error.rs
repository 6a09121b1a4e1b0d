use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// `G^H G` is too ill-conditioned to invert reliably.
    #[error("channel matrix is numerically singular (condition number {condition:.3e})")]
    SingularChannel { condition: f64 },

    #[error("channel kept coming out singular after {0} redraws")]
    ResampleLimit(u32),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("empty sample set")]
    EmptySamples,
}
