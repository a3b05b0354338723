use std::io;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An item's length does not match the session's item length.
    #[error("item length mismatch: expected {expected} bytes, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    /// Attempted to remove an item that is not in the encoder's set.
    #[error("item not present in set")]
    ItemAbsent,

    /// A streaming encoder cannot mutate its set after emission started.
    #[error("set mutation after emission requires a cached encoder")]
    StreamingMutation,

    /// A mapping profile failed validation.
    #[error("invalid mapping profile: {0}")]
    InvalidProfile(String),

    /// Invalid parameters (table sizes, trial counts, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Result requested before the decoder finished.
    #[error("decoding is not complete")]
    NotComplete,

    /// A peeled cell's checksum matched but its re-derived mapping does not
    /// cover the index it was peeled from: a checksum collision corrupted
    /// the session.
    #[error("integrity failure: checksum collision detected while peeling")]
    IntegrityFailure,

    /// Malformed wire data.
    #[error("malformed stream: {0}")]
    Malformed(String),

    /// The stream header does not match this session's configuration.
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),

    /// The byte source closed before decoding completed.
    #[error("stream ended before reconciliation completed")]
    Incomplete,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
