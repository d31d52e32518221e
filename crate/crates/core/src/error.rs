//! Error type shared by every module in the crate.

use std::path::PathBuf;

/// Errors produced by data loading, clustering, spectral estimation and the
/// evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: rating {rating} outside 1..=5")]
    OutOfRangeRating {
        path: PathBuf,
        line: usize,
        rating: i64,
    },

    #[error("operation left the rating matrix with zero users")]
    EmptyMatrix,

    #[error("fold count {k} invalid for {n_users} users (need 2 <= k <= n_users)")]
    InvalidFoldCount { k: usize, n_users: usize },

    #[error("vector dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sigma must be positive, got {0}")]
    InvalidSigma(f64),

    #[error("input sequence is empty")]
    EmptyInput,

    #[error("sequence lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "coherence needs at least 2 segments (got {segments}) for input length {input_len} \
         with segment length {segment_len}; a single segment makes the estimate identically 1"
    )]
    TooFewSegments {
        segments: usize,
        input_len: usize,
        segment_len: usize,
    },

    #[error("k = {k} invalid: need 1 <= k <= {distinct} distinct points")]
    InvalidK { k: usize, distinct: usize },

    #[error("silhouette needs at least 2 non-empty clusters, got {0}")]
    TooFewClusters(usize),

    #[error("cluster {0} has no members")]
    EmptyCluster(usize),

    #[error("item {0} is not present in the cluster index")]
    TargetNotInIndex(usize),

    #[error("no ratings were hidden for the fold; metrics are undefined")]
    NoHiddenRatings,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by unreadable or malformed input data, as
    /// opposed to misuse of an API or a broken internal invariant.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::MalformedLine { .. }
                | Error::OutOfRangeRating { .. }
                | Error::EmptyMatrix
        )
    }
}
