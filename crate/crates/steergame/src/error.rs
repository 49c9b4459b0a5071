use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a numeric precondition (non-finite value, value out
    /// of its admissible range, non-positive threshold or capacity).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally inconsistent arguments, e.g. an allocation vector whose
    /// length differs from the slice list it indexes.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Invalid episode or scenario configuration, rejected before any
    /// simulation work starts.
    #[error("configuration error: {0}")]
    Config(String),

    /// The inner best-response search exhausted its iteration budget. Carries
    /// the best iterate found so callers can inspect or reuse it.
    #[error("solver did not converge: {message}")]
    Solver {
        message: String,
        best: crate::types::AllocationVector,
    },

    /// A metric has no defined value on the given input (e.g. effective RTT
    /// of an episode that carried no traffic).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}
