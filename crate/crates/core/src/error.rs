use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    QuadratureNotConverged { estimate: f64, tolerance: f64 },

    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("rank deficient: requested order {requested}, achievable order {achievable}")]
    RankDeficient { requested: usize, achievable: usize },

    #[error("hierarchy too large: {count} auxiliary density operators exceed the budget of {budget}")]
    Capacity { count: u128, budget: usize },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("time step {dt} too coarse: must not exceed {max_dt} ({guidance})")]
    GridTooCoarse {
        dt: f64,
        max_dt: f64,
        guidance: &'static str,
    },

    #[error("second-order mean-force expansion broke down: {0}")]
    PerturbativeBreakdown(String),

    #[error("{solver} solver failed: {source}")]
    Solver {
        solver: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
