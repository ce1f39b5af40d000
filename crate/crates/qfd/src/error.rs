//! Error type shared across the crate.

use crate::lattice::LatticeKind;

/// Errors produced by lattice indexing, group construction, statistics,
/// training, evaluation and file handling.
#[derive(Debug, thiserror::Error)]
pub enum QfdError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("{what} {value} out of range 1..={bound}")]
    IndexOutOfRange {
        what: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("group closure exceeded safety bound of {bound} elements")]
    ClosureBound { bound: usize },

    #[error("operation is not a symmetry of the {0:?} lattice")]
    NotALatticeSymmetry(LatticeKind),

    #[error("group selector {selector:?} is not in the {kind:?} subgroup catalogue")]
    UnknownSubgroup {
        selector: String,
        kind: LatticeKind,
    },

    #[error("unknown element label {0:?}")]
    UnknownLabel(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degeneracy fingerprints differ in {context}")]
    FingerprintMismatch { context: &'static str },

    #[error("{context}: need at least {needed} chips, have {actual}")]
    InsufficientCount {
        context: &'static str,
        needed: u64,
        actual: u64,
    },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid parameter {what}: {reason}")]
    InvalidParameter {
        what: &'static str,
        reason: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("objective denominator is not positive; direction lies in the covariance null space")]
    DegenerateObjective,

    #[error("{0} score list is empty")]
    EmptyScores(&'static str),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("file truncated while reading {0}")]
    Truncated(&'static str),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, QfdError>;
