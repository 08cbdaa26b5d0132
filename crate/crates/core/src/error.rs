use thiserror::Error;

/// Errors raised by the explanation engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid player space: {0}")]
    InvalidSpace(String),

    #[error("invalid mask: expected width {expected}, got {actual}")]
    InvalidMask { expected: usize, actual: usize },

    #[error("malformed mask bitstring: {0}")]
    MalformedBitstring(String),

    #[error("player space mismatch: {left} vs {right}")]
    SpaceMismatch { left: String, right: String },

    #[error("{players} players exceed the enumeration limit of {limit}")]
    EnumerationGuard { players: usize, limit: usize },

    #[error("p must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {what} has {actual} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("ill-posed fit: design rank {rank} is short of basis size {basis_size} (deficiency {deficiency})")]
    IllPosedFit {
        rank: usize,
        basis_size: usize,
        deficiency: usize,
    },

    #[error("missing constraint row: batch lacks the {0} mask")]
    MissingConstraintRow(&'static str),

    #[error("first-order conversion requires a weighted Banzhaf explanation")]
    UnsupportedConversion,

    #[error("correlation undefined: {0} has zero rank variance")]
    UndefinedCorrelation(&'static str),

    #[error("normalization degenerate: full-set and empty-set values are both {0}")]
    NormalizationDegenerate(f64),

    #[error("pointing game recognition undefined: no cross-modal interaction mass")]
    UndefinedPgr,

    #[error("invalid pointing spec: {0}")]
    InvalidPointingSpec(String),

    #[error("oracle transport failed on batch {batch}: {message}")]
    Transport { batch: usize, message: String },

    #[error("oracle timed out on batch {batch} after {millis} ms")]
    Timeout { batch: usize, millis: u64 },

    #[error("oracle handshake mismatch: {0}")]
    HandshakeMismatch(String),

    #[error("oracle protocol error: {0}")]
    Protocol(String),

    #[error("non-finite game value at table index {0}")]
    NonFinite(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) => "invalid_space",
            Error::InvalidMask { .. } => "invalid_mask",
            Error::MalformedBitstring(_) => "malformed_bitstring",
            Error::SpaceMismatch { .. } => "space_mismatch",
            Error::EnumerationGuard { .. } => "enumeration_guard",
            Error::InvalidProbability(_) => "invalid_probability",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::IllPosedFit { .. } => "ill_posed_fit",
            Error::MissingConstraintRow(_) => "missing_constraint_row",
            Error::UnsupportedConversion => "unsupported_conversion",
            Error::UndefinedCorrelation(_) => "undefined_correlation",
            Error::NormalizationDegenerate(_) => "normalization_degenerate",
            Error::UndefinedPgr => "undefined_pgr",
            Error::InvalidPointingSpec(_) => "invalid_pointing_spec",
            Error::Transport { .. } => "transport",
            Error::Timeout { .. } => "timeout",
            Error::HandshakeMismatch(_) => "handshake_mismatch",
            Error::Protocol(_) => "protocol",
            Error::NonFinite(_) => "non_finite",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// True for failures of the oracle transport layer.
    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            Error::Transport { .. }
                | Error::Timeout { .. }
                | Error::HandshakeMismatch(_)
                | Error::Protocol(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects `p` outside the open unit interval.
pub fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}
