use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image dimensions must be nonzero, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },

    #[error("buffer holds {len} values but {width}x{height} needs {}", width * height)]
    BufferLength { width: usize, height: usize, len: usize },

    #[error("dimension mismatch: {}x{} vs {}x{}", left.0, left.1, right.0, right.1)]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("{path}: {reason}")]
    UnsupportedImage { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Decode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: cannot encode: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("no file pairs matched between {0} and {1}")]
    NoPairs(PathBuf, PathBuf),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure was caused by the caller's input rather than by
    /// the toolkit itself.
    pub fn is_invalid_input(&self) -> bool {
        !matches!(self, Error::Csv(_) | Error::Json(_))
    }

    pub(crate) fn mismatch(left: (usize, usize), right: (usize, usize)) -> Self {
        Error::DimensionMismatch { left, right }
    }
}
