//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by simulation and verification operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgoError {
    /// A time argument does not sit on the system's time mesh. Times are
    /// rejected rather than rounded so that group/cocycle identities are
    /// never silently corrupted.
    #[error("time {t} is not commensurate with mesh {mesh}")]
    NonCommensurateTime { t: f64, mesh: f64 },

    /// A single shift asked for more than the rolling path buffer holds.
    #[error("shift by {t} exceeds horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },

    /// Two measures (or a measure and an observable) disagree on the
    /// underlying partition or state count.
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),

    /// Exhaustive subset enumeration was requested beyond the allowed size.
    #[error("state space too large: {n} states, limit {max}")]
    StateSpaceTooLarge { n: usize, max: usize },

    /// A linear solve or eigenstructure check came out inconsistent with
    /// the communicating-class structure.
    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    /// A measure or candidate set fails the invariance precondition.
    #[error("not invariant: {0}")]
    NotInvariant(String),

    /// A set cannot be expressed in the measure's partition.
    #[error("set not representable: {0}")]
    SetNotRepresentable(String),

    /// A continuous-time shift does not permute the s-grid of a family.
    #[error("grid incommensurate: {0}")]
    GridIncommensurate(String),

    /// Catch-all precondition violation.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, ErgoError>;
