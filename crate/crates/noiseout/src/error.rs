use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch, left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    ShapeMismatch {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    #[error("{axis} index {index} out of range for length {len}")]
    IndexOutOfRange {
        axis: &'static str,
        index: usize,
        len: usize,
    },

    #[error("matrix data length {len} does not match {rows}x{cols}")]
    DataLength { rows: usize, cols: usize, len: usize },

    #[error("operation requires at least {required} rows, got {got}")]
    TooFewRows { required: usize, got: usize },

    #[error("network must have at least one hidden layer")]
    NoHiddenLayer,

    #[error("noise kind is none; there are no noise targets to generate")]
    NoNoiseTargets,

    #[error("forward trace does not match network shapes ({detail})")]
    StaleTrace { detail: String },

    #[error("regressor column has zero variance while the target column does not")]
    DegenerateRegressor,

    #[error("hidden layer {layer} has width {width}; cannot remove a neuron below width {min}")]
    LayerTooNarrow {
        layer: usize,
        width: usize,
        min: usize,
    },

    #[error("sample size {requested} exceeds available rows {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{path}: expected magic {expected}, found {found}")]
    IdxMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("images file has {images} rows but labels file has {labels}")]
    RowCountMismatch { images: usize, labels: usize },

    #[error("invalid label {value} at row {row}; labels must be 0..=9")]
    InvalidLabel { row: usize, value: u8 },

    #[error("not a model file: expected magic {expected:?}, found {found:?}")]
    ModelMagic { expected: String, found: String },

    #[error("malformed model header: {0}")]
    ModelHeader(String),

    #[error("payload size mismatch: expected {expected} bytes, found {found}")]
    PayloadSize { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
