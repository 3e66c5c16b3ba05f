//! Pluggable inference backends and detection post-processing.
//!
//! Two backend interfaces cover the two pipeline tracks: a layout backend
//! scores every token of a sequence window over the eight field classes, a
//! detector backend proposes stamp/signature boxes. The bundled mock
//! backends are rule-driven — they read fixture ground truth — so the whole
//! pipeline runs deterministically without model files.
//!
//! # Model files
//!
//! The `onnx:<path>` backend descriptor names a model in the ONNX exchange
//! format with this tensor contract:
//!
//! * layout model — inputs `input_ids` (int64, `[1, L]`), `bbox` (int64,
//!   `[1, L, 4]`, 0-1000 grid), `pixel_values` (float32, `[1, 3, H, W]`);
//!   output `logits` (float32, `[1, L, 8]`) over the class index order of
//!   [`FieldClass::ALL`].
//! * detector — input `images` (float32, `[1, 3, H, W]`, samples in
//!   `[0, 1]`); outputs `boxes` (float32, `[N, 4]` corner form), `scores`
//!   (float32, `[N]`), `classes` (int64, `[N]`, 0 = stamp, 1 = signature).
//!
//! No ONNX runtime is bundled: resolving an `onnx:` descriptor reports a
//! backend failure pointing at this contract. Execution plugs in by
//! implementing [`LayoutBackend`] / [`DetectorBackend`] over the runtime of
//! your choice.

mod mock;
mod postprocess;

pub use mock::{MockDetectorBackend, MockLayoutBackend};
pub use postprocess::{filter_detections, nms, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::labeling::SequenceExample;
use crate::losses::softmax;
use crate::manifest::FieldClass;
use crate::raster::DocumentImage;

/// The two object-detection classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObjectClass {
    Stamp,
    Signature,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 2] = [ObjectClass::Stamp, ObjectClass::Signature];

    pub fn field_class(self) -> FieldClass {
        match self {
            ObjectClass::Stamp => FieldClass::Stamp,
            ObjectClass::Signature => FieldClass::Signature,
        }
    }

    pub fn from_field_class(class: FieldClass) -> Option<ObjectClass> {
        match class {
            FieldClass::Stamp => Some(ObjectClass::Stamp),
            FieldClass::Signature => Some(ObjectClass::Signature),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectClass::Stamp => "Stamp",
            ObjectClass::Signature => "Signature",
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A stamp-or-signature box proposal with its confidence score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class: ObjectClass,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
}

/// Per-token class scorer over sequence windows.
///
/// Score vectors must be finite and have one entry per class (eight,
/// background included). Implementations must be safe for concurrent
/// `predict` calls.
pub trait LayoutBackend: Send + Sync {
    fn predict(
        &self,
        example: &SequenceExample,
        image: &DocumentImage,
    ) -> Result<Vec<[f64; FieldClass::ALL.len()]>>;
}

/// Stamp/signature box proposer.
///
/// Emitted scores lie in `[0, 1]` and boxes are clipped to the image.
/// `doc_id` identifies the document for backends that replay recorded or
/// fixture data.
pub trait DetectorBackend: Send + Sync {
    fn predict(&self, doc_id: &str, image: &DocumentImage) -> Result<Vec<Detection>>;
}

/// One classified token: argmax label and its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenPrediction {
    pub label: FieldClass,
    pub confidence: f64,
}

/// Runs the layout backend on one window and normalizes each score vector
/// to a probability simplex (softmax). The label is the argmax; exact ties
/// break toward the lowest class index.
pub fn classify_tokens(
    backend: &dyn LayoutBackend,
    example: &SequenceExample,
    image: &DocumentImage,
) -> Result<Vec<TokenPrediction>> {
    let scores = backend
        .predict(example, image)
        .map_err(|e| Error::BackendFailure(format!("layout backend on {:?}: {e}", example.document_id)))?;
    if scores.len() != example.tokens.len() {
        return Err(Error::BackendFailure(format!(
            "layout backend returned {} score vectors for {} tokens",
            scores.len(),
            example.tokens.len()
        )));
    }
    scores
        .iter()
        .map(|vector| {
            if vector.iter().any(|s| !s.is_finite()) {
                return Err(Error::BackendFailure("non-finite score vector".to_string()));
            }
            let probs = softmax(vector);
            let (argmax, &confidence) = probs
                .iter()
                .enumerate()
                .max_by(|(i, a), (j, b)| a.total_cmp(b).then(j.cmp(i)))
                .expect("score vectors are non-empty");
            Ok(TokenPrediction {
                label: FieldClass::from_index(argmax).unwrap(),
                confidence,
            })
        })
        .collect()
}

/// Backend selector accepted by the CLI: `mock` or `onnx:<path>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "path")]
pub enum BackendSpec {
    Mock,
    Onnx(std::path::PathBuf),
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "mock" {
            Ok(BackendSpec::Mock)
        } else if let Some(path) = s.strip_prefix("onnx:") {
            if path.is_empty() {
                return Err(Error::Config("onnx backend descriptor needs a path".to_string()));
            }
            Ok(BackendSpec::Onnx(path.into()))
        } else {
            Err(Error::Config(format!(
                "unknown backend descriptor {s:?}; expected \"mock\" or \"onnx:<path>\""
            )))
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Mock => f.write_str("mock"),
            BackendSpec::Onnx(path) => write!(f, "onnx:{}", path.display()),
        }
    }
}

impl BackendSpec {
    /// Error for exchange-format descriptors: execution is not bundled.
    pub(crate) fn onnx_unavailable(path: &std::path::Path) -> Error {
        Error::BackendFailure(format!(
            "cannot execute {:?}: no ONNX runtime is bundled with this build; \
             implement LayoutBackend/DetectorBackend over your runtime using the \
             tensor contract documented in the infer module, or use --backend mock",
            path
        ))
    }
}
