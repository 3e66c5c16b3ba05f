//! Token labeling: aligning OCR tokens with ground-truth annotation boxes to
//! produce per-token field labels, and the class-count statistics report.
//!
//! Overlap is measured relative to the token's own area rather than IoU:
//! annotation regions are much larger than single word boxes, so IoU of a
//! correctly contained token would be near zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{Annotation, ClassCounts, FieldClass};
use crate::ocr::OcrToken;

/// A token with its assigned field label.
///
/// `label` is [`FieldClass::Other`] exactly when `source_annotation` is
/// absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledToken {
    pub token: OcrToken,
    pub label: FieldClass,
    pub source_annotation: Option<usize>,
}

/// Default containment threshold for token-annotation alignment.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

/// Assigns each token the class of the annotation holding the largest share
/// of the token's area, provided that share reaches `overlap_threshold`;
/// otherwise the background label.
///
/// Ties break toward the larger share, then the smaller annotation, then the
/// lower annotation index. Total and deterministic.
pub fn assign_labels(
    tokens: &[OcrToken],
    annotations: &[Annotation],
    overlap_threshold: f64,
) -> Vec<LabeledToken> {
    tokens
        .iter()
        .map(|token| {
            let token_area = token.bbox.area();
            let mut best: Option<(f64, f64, usize)> = None; // (ratio, ann_area, index)
            for (idx, ann) in annotations.iter().enumerate() {
                let ratio = token.bbox.intersection_area(&ann.bbox) / token_area;
                if ratio < overlap_threshold {
                    continue;
                }
                let candidate = (ratio, ann.bbox.area(), idx);
                best = Some(match best {
                    None => candidate,
                    Some(current) => {
                        let (cr, ca, ci) = current;
                        if ratio > cr || (ratio == cr && (candidate.1 < ca || (candidate.1 == ca && idx < ci))) {
                            candidate
                        } else {
                            current
                        }
                    }
                });
            }
            match best {
                Some((_, _, idx)) => LabeledToken {
                    token: token.clone(),
                    label: annotations[idx].field_class,
                    source_annotation: Some(idx),
                },
                None => LabeledToken {
                    token: token.clone(),
                    label: FieldClass::Other,
                    source_annotation: None,
                },
            }
        })
        .collect()
}

/// Exact per-class token-label counts over labeled documents, background
/// label included.
pub fn count_label_instances<'a>(
    documents: impl IntoIterator<Item = &'a [LabeledToken]>,
) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for doc in documents {
        for labeled in doc {
            counts.add(labeled.label, 1);
        }
    }
    counts
}

/// Column order of the class-instance statistics table: the background
/// label first, then the keyword fields.
pub const COUNT_TABLE_COLUMNS: [FieldClass; 6] = [
    FieldClass::Other,
    FieldClass::Title,
    FieldClass::Date,
    FieldClass::Client,
    FieldClass::Total,
    FieldClass::TotalValue,
];

/// Renders class-instance counts as an aligned text table, one labeled row.
pub fn format_class_counts(row_label: &str, counts: &ClassCounts) -> String {
    let headers: Vec<String> = std::iter::once("Class".to_string())
        .chain(COUNT_TABLE_COLUMNS.iter().map(|c| match c {
            FieldClass::TotalValue => "Total Value".to_string(),
            other => other.as_str().to_string(),
        }))
        .collect();
    let values: Vec<String> = std::iter::once(row_label.to_string())
        .chain(COUNT_TABLE_COLUMNS.iter().map(|&c| counts.get(c).to_string()))
        .collect();
    let widths: Vec<usize> = headers
        .iter()
        .zip(values.iter())
        .map(|(h, v)| h.chars().count().max(v.chars().count()))
        .collect();
    let render_row = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(widths.iter())
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    format!("{}\n{}\n", render_row(&headers), render_row(&values))
}

/// Normalized grid resolution for sequence-model box encoding.
pub const NORMALIZED_GRID: u32 = 1000;

/// One model-ready window of a document: tokens in reading order with boxes
/// on the integer 0-1000 grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceExample {
    pub document_id: String,
    pub window_index: usize,
    pub tokens: Vec<String>,
    /// `[x_min, y_min, x_max, y_max]` scaled by `1000 / dim` and floored.
    pub boxes: Vec<[u32; 4]>,
    pub labels: Vec<FieldClass>,
}

/// Normalizes one pixel coordinate to the grid.
fn grid(coord: f64, dim: u32) -> u32 {
    ((coord * NORMALIZED_GRID as f64 / dim as f64).floor() as i64)
        .clamp(0, NORMALIZED_GRID as i64) as u32
}

/// Splits a labeled document into windows of at most `max_sequence_length`
/// tokens. Consecutive windows share `stride` tokens; with stride 0 the
/// windows concatenate back to the original sequence.
pub fn build_sequence_examples(
    document_id: &str,
    labeled: &[LabeledToken],
    image_width: u32,
    image_height: u32,
    max_sequence_length: usize,
    stride: usize,
) -> Result<Vec<SequenceExample>> {
    if labeled.is_empty() {
        return Err(Error::EmptyDocument(document_id.to_string()));
    }
    assert!(max_sequence_length > 0, "max_sequence_length must be positive");
    assert!(stride < max_sequence_length, "stride must be smaller than the window");

    let mut examples = Vec::new();
    let mut start = 0usize;
    let mut window_index = 0usize;
    while start < labeled.len() {
        let end = (start + max_sequence_length).min(labeled.len());
        let window = &labeled[start..end];
        examples.push(SequenceExample {
            document_id: document_id.to_string(),
            window_index,
            tokens: window.iter().map(|l| l.token.text.clone()).collect(),
            boxes: window
                .iter()
                .map(|l| {
                    [
                        grid(l.token.bbox.x_min, image_width),
                        grid(l.token.bbox.y_min, image_height),
                        grid(l.token.bbox.x_max, image_width),
                        grid(l.token.bbox.y_max, image_height),
                    ]
                })
                .collect(),
            labels: window.iter().map(|l| l.label).collect(),
        });
        if end == labeled.len() {
            break;
        }
        start = end - stride;
        window_index += 1;
    }
    Ok(examples)
}

/// Serializes examples as JSON lines, one window per line.
pub fn write_jsonl<W: std::io::Write>(examples: &[SequenceExample], mut out: W) -> Result<()> {
    for example in examples {
        serde_json::to_writer(&mut out, example)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads JSON-lines sequence examples.
pub fn read_jsonl(bytes: &[u8]) -> Result<Vec<SequenceExample>> {
    bytes
        .split(|&b| b == b'\n')
        .filter(|line| !line.is_empty())
        .map(|line| serde_json::from_slice(line).map_err(Error::from))
        .collect()
}
