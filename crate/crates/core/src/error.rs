use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("input too small: {0}")]
    InputTooSmall(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("degenerate training set: {0}")]
    DegenerateTrainingSet(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing asset: {}", .0.display())]
    MissingAsset(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
}
