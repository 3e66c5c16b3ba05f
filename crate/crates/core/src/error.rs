//! Crate-wide error type.

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// A manifest document violates the JSON schema. Carries the JSON path
    /// (or record index) of the first violation.
    #[error("malformed manifest at {path}: {reason}")]
    MalformedManifest { path: String, reason: String },

    /// An annotation class string is not a valid annotation class.
    #[error("unknown annotation class {0:?}")]
    UnknownClass(String),

    /// A bounding box is inverted, degenerate, non-finite, negative, or
    /// outside the bounds of its image.
    #[error("invalid box at {context}: {reason}")]
    BoxOutOfBounds { context: String, reason: String },

    /// A rotation angle exceeds the configured maximum.
    #[error("rotation angle {angle} exceeds configured maximum {max}")]
    InvalidAngle { angle: f64, max: f64 },

    /// Invalid parameters for a photometric operation.
    #[error("invalid augmentation parameters: {0}")]
    InvalidParams(String),

    /// A row of a local OCR engine dump could not be parsed.
    #[error("malformed OCR row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    /// A cloud OCR response could not be parsed.
    #[error("malformed OCR response: {0}")]
    MalformedResponse(String),

    /// A cloud OCR response carries no analysis section at all.
    #[error("OCR response contains no analysis result")]
    EmptyAnalysis,

    /// A document produced no tokens where at least one was required.
    #[error("document {0:?} has no tokens")]
    EmptyDocument(String),

    /// An inference backend failed or is unavailable.
    #[error("backend failure: {0}")]
    BackendFailure(String),

    /// Predicted and gold label sequences differ in length.
    #[error("label sequences differ in length: predicted {predicted}, gold {gold}")]
    LengthMismatch { predicted: usize, gold: usize },

    /// Average precision is undefined over zero gold boxes.
    #[error("average precision undefined: no gold boxes")]
    ZeroGold,

    /// A class index is outside the logit vector.
    #[error("class index {index} out of range for {len} classes")]
    IndexOutOfRange { index: usize, len: usize },

    /// A center-ness query point lies on or outside its gold box.
    #[error("location ({x}, {y}) is not strictly inside the gold box")]
    LocationOutsideBox { x: f64, y: f64 },

    /// Pipeline configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
