use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),
    #[error("corrupt file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("recording has no frames")]
    EmptyRecording,
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error("fiber map: pixel ({row}, {col}) claimed by fibers {first} and {second}")]
    FiberOverlap {
        row: u32,
        col: u32,
        first: usize,
        second: usize,
    },
    #[error("fiber map: pixel ({row}, {col}) of fiber {fiber} outside {width}x{height} frame")]
    PixelOutOfBounds {
        fiber: usize,
        row: u32,
        col: u32,
        width: usize,
        height: usize,
    },
    #[error("fiber map: duplicate fiber id {0}")]
    DuplicateFiber(usize),
    #[error("fiber map: fiber {0} has no pixels")]
    EmptyFiber(usize),
    #[error("config error: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("training diverged: {0}")]
    Training(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    /// Short machine-readable category, used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Format(_) => "format",
            Error::Corrupt { .. } => "corrupt",
            Error::EmptyRecording => "empty-recording",
            Error::InvalidRecording(_) => "invalid-recording",
            Error::FiberOverlap { .. } => "fiber-overlap",
            Error::PixelOutOfBounds { .. } => "fiber-bounds",
            Error::DuplicateFiber(_) => "fiber-duplicate",
            Error::EmptyFiber(_) => "fiber-empty",
            Error::Config(_) => "config",
            Error::Shape(_) => "shape",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Training(_) => "training",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
