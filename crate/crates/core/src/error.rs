use std::ops::Range;

/// Errors raised by the volume engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("bound not applicable: {0}")]
    NotApplicable(String),

    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    #[error(
        "insufficient table depth: need powers ({need_g}, {need_h}), table holds ({have_g}, {have_h})"
    )]
    InsufficientDepth {
        need_g: usize,
        need_h: usize,
        have_g: usize,
        have_h: usize,
    },

    #[error("blocks {left:?} and {right:?} are not adjacent")]
    NonAdjacent {
        left: Range<usize>,
        right: Range<usize>,
    },

    #[error("empty feasible region: {0}")]
    EmptyRegion(String),

    #[error("inconclusive comparison at iteration {iteration}: {detail}")]
    Inconclusive { iteration: usize, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
