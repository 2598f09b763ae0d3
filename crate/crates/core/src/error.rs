use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {lhs:?} vs {rhs:?}")]
    ShapeMismatch { lhs: Vec<usize>, rhs: Vec<usize> },

    #[error("matmul inner dimension mismatch: {lhs:?} x {rhs:?}")]
    InnerDimMismatch { lhs: Vec<usize>, rhs: Vec<usize> },

    #[error("invalid shape {shape:?} for {len} values")]
    InvalidShape { shape: Vec<usize>, len: usize },

    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },

    #[error("expected rank {expected}, got shape {shape:?}")]
    RankMismatch { expected: usize, shape: Vec<usize> },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("backward called on an empty tape")]
    EmptyTape,

    #[error("channel mismatch: layer expects {expected}, input has {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("degenerate output: input {input:?} with kernel {kernel:?}, stride {stride:?}, padding {padding:?}")]
    DegenerateOutput {
        input: [usize; 2],
        kernel: [usize; 2],
        stride: [usize; 2],
        padding: [usize; 2],
    },

    #[error("1d convolution kernel size must be odd, got {0}")]
    EvenKernel(usize),

    #[error("pooling window {window:?} larger than padded input {input:?}")]
    WindowTooLarge { window: [usize; 2], input: [usize; 2] },

    #[error("batch norm in train mode needs more than one value per channel, got batch {0}")]
    BatchTooSmall(usize),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("parameter {0} has no gradient")]
    MissingGradient(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown layer {name:?}; available: {available}")]
    UnknownLayer { name: String, available: String },

    #[error("extent mismatch: {0:?} vs {1:?}")]
    ExtentMismatch([usize; 2], [usize; 2]),

    #[error("missing Phoenix header sentinel")]
    MissingSentinel,

    #[error("missing required header key {0}")]
    MissingKey(String),

    #[error("malformed header value for {key}: {value:?}")]
    BadHeaderValue { key: String, value: String },

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("payload contains non-finite values")]
    NonFinitePayload,

    #[error("malformed image: {0}")]
    BadImage(String),

    #[error("class {0:?} has no images")]
    EmptyClass(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged for {variant} trial {trial} (loss = {loss})")]
    Diverged { variant: String, trial: usize, loss: f64 },

    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
