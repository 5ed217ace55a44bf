use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported offspring law: {0}")]
    UnsupportedLaw(String),

    #[error("grid does not cover the increment spread: {0}")]
    Coverage(String),

    #[error("renewal estimate not positive at x = {x}")]
    EstimateQuality { x: f64 },

    #[error("no acceptance within a budget of {budget} proposals (rate < {rate_upper_bound:.3e} at 95%)")]
    BudgetExhausted { budget: u64, rate_upper_bound: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("insufficient sample: {achieved} survivors, {required} required")]
    InsufficientSample { achieved: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
