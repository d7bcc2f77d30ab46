use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no events")]
    NoEvents,
    #[error("duplicate turn index {0}")]
    DuplicateTurn(u64),
    #[error("unknown observer model `{0}`")]
    UnknownModel(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("rank-deficient target matrix: rank {rank} of 3 ({rows} rows)")]
    RankDeficient { rank: usize, rows: usize },
    #[error("non-finite training loss at iteration {0}")]
    NonFiniteLoss(usize),
    #[error("insufficient color diversity")]
    InsufficientDiversity,
    #[error("empty image")]
    EmptyImage,
    #[error("pixel buffer holds {actual} pixels, expected {expected}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("target exceeds palette: {target} colors requested, palette has {palette}")]
    TargetExceedsPalette { target: usize, palette: usize },
    #[error("corrupt sidecar: {0}")]
    CorruptSidecar(&'static str),
    #[error("degenerate normalization: all values equal {0}")]
    DegenerateNormalization(f64),
}
