//! OCR engine adapters and the text metrics used to compare them.
//!
//! No OCR engine is implemented in-repo. The adapters consume recorded
//! engine output — Tesseract's TSV dump for the local path, the cloud Read
//! API's JSON for the remote path — so the pipeline and its tests run
//! without network or native OCR dependencies. A live cloud client is
//! available behind the `live-ocr` feature, gated at runtime by the
//! `OCR_ENDPOINT` / `OCR_KEY` environment variables.

mod azure;
mod reading_order;
mod similarity;
mod tesseract;

pub use azure::parse_cloud_read_response;
#[cfg(feature = "live-ocr")]
pub use azure::AzureLiveEngine;
pub use reading_order::sort_reading_order;
pub use similarity::{levenshtein, text_similarity, word_accuracy, RecognizedWord};
pub use tesseract::parse_local_engine_output;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::manifest::DocumentRecord;

/// A recognized word with its pixel box and confidence in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcrToken {
    pub text: String,
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub confidence: f64,
}

/// Where an engine runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineKind {
    Local,
    Remote,
}

/// Uniform interface over OCR sources.
///
/// Engines take the whole record rather than just the image: recorded
/// engines look responses up by document id, and the mock engine reads the
/// record's own annotations.
pub trait OcrEngine: Send + Sync {
    fn kind(&self) -> EngineKind;
    fn analyze(&self, record: &DocumentRecord) -> Result<Vec<OcrToken>>;
}

/// Clips tokens to the image rectangle, dropping any token left without
/// positive area. Adapters apply this so no token ever escapes the image.
pub fn clip_tokens(tokens: Vec<OcrToken>, width: u32, height: u32) -> Vec<OcrToken> {
    tokens
        .into_iter()
        .filter_map(|t| {
            t.bbox.clip(width, height).map(|bbox| OcrToken { bbox, ..t })
        })
        .collect()
}

/// File format of a recorded OCR response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordedFormat {
    /// Tesseract TSV dump, one file per document: `<id>.tsv`.
    TesseractTsv,
    /// Cloud Read API result JSON, one file per document: `<id>.json`.
    AzureRead,
}

/// Replays recorded engine responses from a directory.
pub struct RecordedEngine {
    dir: PathBuf,
    format: RecordedFormat,
}

impl RecordedEngine {
    pub fn new(dir: impl Into<PathBuf>, format: RecordedFormat) -> Self {
        RecordedEngine { dir: dir.into(), format }
    }

    fn response_path(&self, doc_id: &str) -> PathBuf {
        let ext = match self.format {
            RecordedFormat::TesseractTsv => "tsv",
            RecordedFormat::AzureRead => "json",
        };
        self.dir.join(format!("{doc_id}.{ext}"))
    }
}

impl OcrEngine for RecordedEngine {
    fn kind(&self) -> EngineKind {
        match self.format {
            RecordedFormat::TesseractTsv => EngineKind::Local,
            RecordedFormat::AzureRead => EngineKind::Remote,
        }
    }

    fn analyze(&self, record: &DocumentRecord) -> Result<Vec<OcrToken>> {
        let path = self.response_path(&record.id);
        let bytes = std::fs::read(&path).map_err(|e| {
            Error::MalformedResponse(format!("recorded response {:?}: {e}", path))
        })?;
        let tokens = match self.format {
            RecordedFormat::TesseractTsv => parse_local_engine_output(&bytes)?,
            RecordedFormat::AzureRead => parse_cloud_read_response(&bytes)?,
        };
        Ok(clip_tokens(tokens, record.image.width(), record.image.height()))
    }
}

/// Deterministic OCR source for model-free runs: emits one token per word of
/// each annotation's ground-truth transcription, laid out inside the
/// annotation box.
pub struct MockOcrEngine;

impl OcrEngine for MockOcrEngine {
    fn kind(&self) -> EngineKind {
        EngineKind::Local
    }

    fn analyze(&self, record: &DocumentRecord) -> Result<Vec<OcrToken>> {
        let mut tokens = Vec::new();
        for ann in &record.annotations {
            let Some(text) = &ann.text else { continue };
            let words: Vec<&str> = text.split_whitespace().collect();
            if words.is_empty() {
                continue;
            }
            // Divide the annotation box horizontally, proportional to word
            // length, with a one-unit gap between words.
            let total_chars: usize = words.iter().map(|w| w.chars().count()).sum();
            let units = total_chars as f64 + (words.len() - 1) as f64;
            let unit_w = ann.bbox.width() / units;
            let mut cursor = ann.bbox.x_min;
            for word in words {
                let w = unit_w * word.chars().count() as f64;
                tokens.push(OcrToken {
                    text: word.to_string(),
                    bbox: BBox {
                        x_min: cursor,
                        y_min: ann.bbox.y_min,
                        x_max: cursor + w,
                        y_max: ann.bbox.y_max,
                    },
                    confidence: 0.99,
                });
                cursor += w + unit_w;
            }
        }
        Ok(clip_tokens(tokens, record.image.width(), record.image.height()))
    }
}
