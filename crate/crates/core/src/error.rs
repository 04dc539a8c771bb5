use thiserror::Error;

/// Errors raised anywhere in the preference-learning engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is outside [{min}, {max}]")]
    OutOfRange { name: &'static str, value: f64, min: f64, max: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gram matrix is not positive definite even with jitter {jitter:e}")]
    IllConditioned { jitter: f64 },

    #[error("MAP estimate did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NotConverged { iterations: usize, gradient_norm: f64 },

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("nothing to recommend: posterior has no data")]
    EmptyPosterior,

    #[error("rank variance is zero; correlation is undefined")]
    ZeroVariance,

    #[error("rejection sampling exhausted after {attempts} attempts")]
    SamplingExhausted { attempts: usize },

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("session log schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("session log is truncated: {0}")]
    Truncated(String),

    #[error("malformed session log: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
