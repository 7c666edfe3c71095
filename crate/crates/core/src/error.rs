use thiserror::Error;

use crate::csit::AccessDenied;
use crate::schemes::SymbolId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("slot {slot} out of range for a process with {n_slots} slots")]
    SlotOutOfRange { slot: usize, n_slots: usize },

    #[error("pattern {pattern} does not dominate {required}, the minimal pattern of {scheme}")]
    PatternMismatch {
        scheme: String,
        pattern: String,
        required: String,
    },

    #[error(transparent)]
    AccessDenied(#[from] AccessDenied),

    #[error("symbols not identifiable from the received signals: {0:?}")]
    NotIdentifiable(Vec<SymbolId>),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("region is unbounded")]
    UnboundedRegion,

    #[error("invalid power sweep: {0}")]
    InvalidSweep(String),

    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("invalid scheme: {0}")]
    InvalidScheme(String),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::InvalidDimension(msg.into())
    }
}
