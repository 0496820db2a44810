//! Error type shared across the crate.

/// Errors produced by game construction, solvers, and verifiers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument is outside its documented domain (bad index, negative
    /// loss, distribution off the simplex, ...).
    #[error("input domain: {0}")]
    InputDomain(String),

    /// A game or distribution could not be built from the given payload.
    #[error("construction: {0}")]
    Construction(String),

    /// An operation was called against inconsistent internal state, e.g. a
    /// windowed-loss request for rounds that were never stored.
    #[error("internal state: {0}")]
    InternalState(String),

    /// Paper-scale parameters are not representable; the message names the
    /// override that would make the run feasible.
    #[error("paper-scale infeasible: {0}")]
    PaperScaleInfeasible(String),

    /// A serialized artifact is malformed or violates an invariant.
    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
