use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty dataset")]
    EmptyDataset,
    #[error("malformed batch: {0} bytes is not a multiple of 3073")]
    MalformedBatch(usize),
    #[error("label out of range: {label} (record {record})")]
    LabelOutOfRange { record: usize, label: u32 },
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("length mismatch: header declares {expected} values, payload holds {actual} bytes")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dimension product overflows")]
    DimOverflow,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown kind: {0}")]
    UnknownKind(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("key mismatch: {0}")]
    KeyMismatch(String),
    #[error("degenerate baseline for {0}")]
    DegenerateBaseline(String),
    #[error("missing accuracy for sigma {0}")]
    MissingSigma(f64),
    #[error("no corruption kinds left after exclusion")]
    EmptyAfterExclusion,
    #[error("non-real inverse: imaginary residue {0:e}")]
    NonRealInverse(f64),
    #[error("frequency ({i}, {j}) outside the {h}x{w} grid")]
    FrequencyOutOfGrid { i: i64, j: i64, h: usize, w: usize },
    #[error("probe unsupported by model: {0}")]
    UnsupportedProbe(String),
    #[error("clean activations have zero norm")]
    ZeroActivation,
}

pub type Result<T> = std::result::Result<T, Error>;
