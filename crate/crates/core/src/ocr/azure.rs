//! Parser for the cloud Read API (v3.2) result JSON, plus the optional live
//! client.
//!
//! Word geometry arrives as an 8-number `boundingBox` polygon; the adapter
//! collapses it to its axis-aligned envelope.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::ocr::OcrToken;

#[derive(Deserialize)]
struct ReadResponse {
    #[serde(rename = "analyzeResult")]
    analyze_result: Option<AnalyzeResult>,
}

#[derive(Deserialize)]
struct AnalyzeResult {
    #[serde(rename = "readResults", default)]
    read_results: Vec<ReadResult>,
}

#[derive(Deserialize)]
struct ReadResult {
    #[serde(default)]
    lines: Vec<Line>,
}

#[derive(Deserialize)]
struct Line {
    #[serde(default)]
    words: Vec<Word>,
}

#[derive(Deserialize)]
struct Word {
    #[serde(rename = "boundingBox")]
    bounding_box: Vec<f64>,
    text: String,
    confidence: f64,
}

/// Parses a Read result into word tokens.
///
/// A response with an empty or absent `readResults` yields an empty token
/// list; a response with no `analyzeResult` at all is [`Error::EmptyAnalysis`].
pub fn parse_cloud_read_response(bytes: &[u8]) -> Result<Vec<OcrToken>> {
    let response: ReadResponse = serde_json::from_slice(bytes)
        .map_err(|e| Error::MalformedResponse(e.to_string()))?;
    let analysis = response.analyze_result.ok_or(Error::EmptyAnalysis)?;

    let mut tokens = Vec::new();
    for page in &analysis.read_results {
        for line in &page.lines {
            for word in &line.words {
                tokens.push(word_to_token(word)?);
            }
        }
    }
    Ok(tokens)
}

fn word_to_token(word: &Word) -> Result<OcrToken> {
    if word.bounding_box.len() != 8 {
        return Err(Error::MalformedResponse(format!(
            "word {:?} has a {}-number boundingBox, expected 8",
            word.text,
            word.bounding_box.len()
        )));
    }
    if !(0.0..=1.0).contains(&word.confidence) {
        return Err(Error::MalformedResponse(format!(
            "word {:?} has confidence {} outside [0, 1]",
            word.text, word.confidence
        )));
    }
    let xs = [word.bounding_box[0], word.bounding_box[2], word.bounding_box[4], word.bounding_box[6]];
    let ys = [word.bounding_box[1], word.bounding_box[3], word.bounding_box[5], word.bounding_box[7]];
    let bbox = BBox::new(
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        ys.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
    .map_err(|_| {
        Error::MalformedResponse(format!(
            "word {:?} has a degenerate polygon {:?}",
            word.text, word.bounding_box
        ))
    })?;
    Ok(OcrToken { text: word.text.clone(), bbox, confidence: word.confidence })
}

/// Live cloud Read client, gated by `OCR_ENDPOINT` and `OCR_KEY`.
///
/// Submits the image, then polls the operation URL until the analysis
/// succeeds. In-flight requests are capped (default 4) to respect service
/// rate limits when documents are processed in parallel.
#[cfg(feature = "live-ocr")]
pub use live::AzureLiveEngine;

#[cfg(feature = "live-ocr")]
mod live {
    use std::sync::{Condvar, Mutex};
    use std::time::Duration;

    use super::parse_cloud_read_response;
    use crate::error::{Error, Result};
    use crate::manifest::DocumentRecord;
    use crate::ocr::{clip_tokens, EngineKind, OcrEngine, OcrToken};

    pub struct AzureLiveEngine {
        endpoint: String,
        key: String,
        slots: Mutex<usize>,
        available: Condvar,
        poll_interval: Duration,
    }

    impl AzureLiveEngine {
        /// Builds the client from `OCR_ENDPOINT` / `OCR_KEY`. Returns a
        /// configuration error when either variable is missing.
        pub fn from_env(max_in_flight: usize) -> Result<Self> {
            let endpoint = std::env::var("OCR_ENDPOINT")
                .map_err(|_| Error::Config("OCR_ENDPOINT is not set".to_string()))?;
            let key = std::env::var("OCR_KEY")
                .map_err(|_| Error::Config("OCR_KEY is not set".to_string()))?;
            Ok(AzureLiveEngine {
                endpoint: endpoint.trim_end_matches('/').to_string(),
                key,
                slots: Mutex::new(max_in_flight.max(1)),
                available: Condvar::new(),
                poll_interval: Duration::from_millis(500),
            })
        }

        fn acquire(&self) {
            let mut slots = self.slots.lock().unwrap();
            while *slots == 0 {
                slots = self.available.wait(slots).unwrap();
            }
            *slots -= 1;
        }

        fn release(&self) {
            *self.slots.lock().unwrap() += 1;
            self.available.notify_one();
        }

        fn analyze_bytes(&self, png: &[u8]) -> Result<Vec<OcrToken>> {
            let submit_url = format!("{}/vision/v3.2/read/analyze", self.endpoint);
            let response = ureq::post(&submit_url)
                .header("Ocp-Apim-Subscription-Key", &self.key)
                .header("Content-Type", "application/octet-stream")
                .send(png)
                .map_err(|e| Error::MalformedResponse(format!("submit failed: {e}")))?;
            let operation_url = response
                .headers()
                .get("Operation-Location")
                .and_then(|v| v.to_str().ok())
                .ok_or_else(|| {
                    Error::MalformedResponse("submit response lacks Operation-Location".to_string())
                })?
                .to_string();

            // Read analyses finish in a few polls for single pages; 120
            // iterations bounds the wait at one minute.
            for _ in 0..120 {
                std::thread::sleep(self.poll_interval);
                let mut poll = ureq::get(&operation_url)
                    .header("Ocp-Apim-Subscription-Key", &self.key)
                    .call()
                    .map_err(|e| Error::MalformedResponse(format!("poll failed: {e}")))?;
                let body = poll
                    .body_mut()
                    .read_to_string()
                    .map_err(|e| Error::MalformedResponse(format!("poll body: {e}")))?;
                let status: serde_json::Value = serde_json::from_str(&body)
                    .map_err(|e| Error::MalformedResponse(e.to_string()))?;
                match status.get("status").and_then(|s| s.as_str()) {
                    Some("succeeded") => return parse_cloud_read_response(body.as_bytes()),
                    Some("failed") => {
                        return Err(Error::MalformedResponse("analysis failed".to_string()))
                    }
                    _ => continue,
                }
            }
            Err(Error::MalformedResponse("analysis did not finish in time".to_string()))
        }
    }

    impl OcrEngine for AzureLiveEngine {
        fn kind(&self) -> EngineKind {
            EngineKind::Remote
        }

        fn analyze(&self, record: &DocumentRecord) -> Result<Vec<OcrToken>> {
            let png = record.image.encode_png()?;
            self.acquire();
            let result = self.analyze_bytes(&png);
            self.release();
            result.map(|tokens| clip_tokens(tokens, record.image.width(), record.image.height()))
        }
    }
}
