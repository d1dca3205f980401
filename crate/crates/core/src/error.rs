//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building receivers or computing rates.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument is out of range or inconsistent.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix or vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The channel matrix has rank zero (or a random draw kept producing
    /// effectively rank-deficient matrices), so no information can pass.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// An explicit computational budget was exceeded.  Callers treat this as
    /// a distinct, recoverable condition (the CLI maps it to its own exit
    /// code) because the request was well-formed, merely too large.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// A randomized construction failed to reach its goal within the retry
    /// budget (e.g. a general-position arrangement hitting the maximal
    /// region count).
    #[error("construction failed: {0}")]
    ConstructionFailure(String),

    /// A requested optimization target cannot be met (e.g. a rate budget
    /// below the cheapest available symbol cost).
    #[error("infeasible target: {0}")]
    InfeasibleTarget(String),

    /// Serialization or deserialization of a document failed.
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}
