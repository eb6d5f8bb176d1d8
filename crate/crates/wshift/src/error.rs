//! Unified error type for the crate.

use num::bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An index past the end of a tabulated weight with no extension rule.
    #[error("index {0} is outside the stored weight table")]
    OutOfTable(BigInt),

    /// A requested quantity exists mathematically but does not fit the
    /// numeric domain (integer width, f64 range, memory).
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),

    /// Mismatched dimensions, empty payloads, malformed intervals.
    #[error("shape error: {0}")]
    ShapeError(String),

    /// Caller violated a documented precondition.
    #[error("precondition violated: {0}")]
    PreconditionError(String),

    /// An invariant the library maintains internally was broken.
    #[error("internal error: {0}")]
    InternalError(String),

    /// Not enough admissible data to satisfy the request (for example, not
    /// enough realizable parameters below the schedule depth).
    #[error("insufficient data: {0}")]
    Insufficient(String),

    /// A certified bound cannot be produced for the given inputs.
    #[error("cannot certify: {0}")]
    CannotCertify(String),

    /// Schedule construction cannot extend past the named level.
    #[error("schedule construction stuck at level {level}: {reason}")]
    ScheduleStuck { level: u64, reason: String },

    /// An operation needs more schedule levels than were built.
    #[error("schedule too shallow: {0}")]
    NeedDeeperSchedule(String),

    /// A vector or certificate needs coordinates past the configured horizon.
    #[error("horizon too small: {0}")]
    HorizonTooSmall(String),

    /// Membership query against a partition class the element is not in.
    #[error("not in partition class: {0}")]
    NotInPart(String),

    /// A bounded search exhausted its budget without finding a witness.
    #[error("search failed: {0}")]
    SearchFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
