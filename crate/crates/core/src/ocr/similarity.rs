//! Edit distance and the word-level accuracy/similarity metrics used to
//! compare OCR engines.

use crate::geometry::{bbox_iou, BBox};
use crate::ocr::OcrToken;

/// Minimal number of unit-cost insertions, deletions, and substitutions
/// turning `a` into `b`, over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }

    // rolling single-row DP
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut diagonal = row[0];
        row[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let substitution = diagonal + usize::from(ca != cb);
            diagonal = row[j + 1];
            row[j + 1] = substitution.min(row[j] + 1).min(diagonal + 1);
        }
    }
    row[b.len()]
}

/// A word with an optional box, the unit the OCR comparison metrics align.
#[derive(Debug, Clone, PartialEq)]
pub struct RecognizedWord {
    pub text: String,
    pub bbox: Option<BBox>,
}

impl RecognizedWord {
    pub fn plain(text: impl Into<String>) -> Self {
        RecognizedWord { text: text.into(), bbox: None }
    }
}

impl From<&OcrToken> for RecognizedWord {
    fn from(t: &OcrToken) -> Self {
        RecognizedWord { text: t.text.clone(), bbox: Some(t.bbox) }
    }
}

impl From<&str> for RecognizedWord {
    fn from(s: &str) -> Self {
        RecognizedWord::plain(s)
    }
}

const ALIGN_IOU: f64 = 0.5;

/// Greedy word alignment: by box IoU (threshold 0.5) when every word on both
/// sides carries a box, otherwise by position. Unmatched words pair with the
/// empty string.
fn align<'a>(
    predicted: &'a [RecognizedWord],
    reference: &'a [RecognizedWord],
) -> Vec<(&'a str, &'a str)> {
    let boxes_available = !predicted.is_empty()
        && !reference.is_empty()
        && predicted.iter().chain(reference.iter()).all(|w| w.bbox.is_some());

    let mut pairs = Vec::new();
    if boxes_available {
        // highest-IoU pair first; ties by lower (pred, ref) index
        let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
        for (pi, p) in predicted.iter().enumerate() {
            for (ri, r) in reference.iter().enumerate() {
                let iou = bbox_iou(&p.bbox.unwrap(), &r.bbox.unwrap());
                if iou >= ALIGN_IOU {
                    candidates.push((iou, pi, ri));
                }
            }
        }
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut pred_used = vec![false; predicted.len()];
        let mut ref_used = vec![false; reference.len()];
        for (_, pi, ri) in candidates {
            if !pred_used[pi] && !ref_used[ri] {
                pred_used[pi] = true;
                ref_used[ri] = true;
                pairs.push((predicted[pi].text.as_str(), reference[ri].text.as_str()));
            }
        }
        for (pi, used) in pred_used.iter().enumerate() {
            if !used {
                pairs.push((predicted[pi].text.as_str(), ""));
            }
        }
        for (ri, used) in ref_used.iter().enumerate() {
            if !used {
                pairs.push(("", reference[ri].text.as_str()));
            }
        }
    } else {
        let longest = predicted.len().max(reference.len());
        for i in 0..longest {
            pairs.push((
                predicted.get(i).map_or("", |w| w.text.as_str()),
                reference.get(i).map_or("", |w| w.text.as_str()),
            ));
        }
    }
    pairs
}

/// Mean normalized edit similarity over aligned word pairs:
/// `1 - dist / max(len_a, len_b)` per pair, 1.0 for two empty strings.
/// Returns 1.0 for two empty lists.
pub fn text_similarity(predicted: &[RecognizedWord], reference: &[RecognizedWord]) -> f64 {
    let pairs = align(predicted, reference);
    if pairs.is_empty() {
        return 1.0;
    }
    let total: f64 = pairs
        .iter()
        .map(|(a, b)| {
            let longest = a.chars().count().max(b.chars().count());
            if longest == 0 {
                1.0
            } else {
                1.0 - levenshtein(a, b) as f64 / longest as f64
            }
        })
        .sum();
    total / pairs.len() as f64
}

fn normalize(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

/// Fraction of reference words whose aligned prediction matches exactly
/// after case folding and trimming edge punctuation. Returns 1.0 for an
/// empty reference.
pub fn word_accuracy(predicted: &[RecognizedWord], reference: &[RecognizedWord]) -> f64 {
    if reference.is_empty() {
        return 1.0;
    }
    let pairs = align(predicted, reference);
    let exact = pairs
        .iter()
        .filter(|(p, r)| !r.is_empty() && normalize(p) == normalize(r))
        .count();
    exact as f64 / reference.len() as f64
}
