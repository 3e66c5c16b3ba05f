//! The multi-criteria validity decision.
//!
//! A machine-written invoice is `Valid` only when every enabled criterion
//! holds: each required keyword field has at least one confident token, and
//! stamp and signature each have at least one confident detection. The
//! checks are presence-only — a client token must exist, its content is not
//! matched against any master record. Handwritten documents short-circuit to
//! `Unsupported` without evaluating criteria, so downstream systems can
//! route them to manual review.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::infer::{Detection, ObjectClass};
use crate::manifest::FieldClass;
use crate::ocr::OcrToken;

/// A token with its predicted label and confidence, the validator's keyword
/// evidence unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedToken {
    pub token: OcrToken,
    pub label: FieldClass,
    pub confidence: f64,
}

fn default_required_fields() -> BTreeSet<FieldClass> {
    FieldClass::KEYWORD_FIELDS.iter().copied().collect()
}

fn default_true() -> bool {
    true
}

fn default_threshold() -> f64 {
    0.5
}

/// What must be present for a verdict of `Valid`.
///
/// The default is the maximal reading: all five keyword fields plus stamp
/// plus signature. Every report embeds the criteria it was evaluated under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationCriteria {
    #[serde(default = "default_required_fields")]
    pub required_fields: BTreeSet<FieldClass>,
    #[serde(default = "default_true")]
    pub require_stamp: bool,
    #[serde(default = "default_true")]
    pub require_signature: bool,
    #[serde(default = "default_threshold")]
    pub min_detection_score: f64,
    #[serde(default = "default_threshold")]
    pub min_field_confidence: f64,
}

impl Default for ValidationCriteria {
    fn default() -> Self {
        ValidationCriteria {
            required_fields: default_required_fields(),
            require_stamp: true,
            require_signature: true,
            min_detection_score: default_threshold(),
            min_field_confidence: default_threshold(),
        }
    }
}

impl ValidationCriteria {
    pub fn validate(&self) -> crate::Result<()> {
        for t in [self.min_detection_score, self.min_field_confidence] {
            if !(0.0..=1.0).contains(&t) {
                return Err(crate::Error::Config(format!("threshold {t} outside [0, 1]")));
            }
        }
        if self.required_fields.contains(&FieldClass::Other) {
            return Err(crate::Error::Config(
                "the background label cannot be a required field".to_string(),
            ));
        }
        Ok(())
    }
}

/// Final verdict for one document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Valid,
    Invalid,
    Unsupported,
}

/// The item that satisfied (or came closest to satisfying) a criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    Token { text: String, r#box: [f64; 4], confidence: f64 },
    Detection { class: ObjectClass, r#box: [f64; 4], score: f64 },
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    /// `field:<Class>`, `stamp`, or `signature`.
    pub name: String,
    pub satisfied: bool,
    /// Best matching item, present even for failed criteria when any
    /// candidate of the class exists.
    pub evidence: Option<Evidence>,
}

/// Per-document validation outcome with full evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub document_id: String,
    pub verdict: Verdict,
    /// Empty for `Unsupported` documents: criteria are not evaluated.
    pub criteria: Vec<CriterionResult>,
    pub criteria_config: ValidationCriteria,
    pub config_fingerprint: String,
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn best_token(tokens: &[ClassifiedToken], class: FieldClass) -> Option<&ClassifiedToken> {
    tokens
        .iter()
        .filter(|t| t.label == class)
        .max_by(|a, b| {
            a.confidence
                .total_cmp(&b.confidence)
                .then_with(|| b.token.bbox.lex_cmp(&a.token.bbox))
                .then_with(|| b.token.text.cmp(&a.token.text))
        })
}

fn best_detection(detections: &[Detection], class: ObjectClass) -> Option<&Detection> {
    detections
        .iter()
        .filter(|d| d.class == class)
        .max_by(|a, b| a.score.total_cmp(&b.score).then_with(|| b.bbox.lex_cmp(&a.bbox)))
}

/// Evaluates the criteria over classified tokens and post-NMS detections.
/// Total: never fails.
pub fn validate(
    document_id: &str,
    tokens: &[ClassifiedToken],
    detections: &[Detection],
    handwritten: bool,
    criteria: &ValidationCriteria,
    config_fingerprint: &str,
) -> ValidationReport {
    if handwritten {
        return ValidationReport {
            schema_version: REPORT_SCHEMA_VERSION,
            document_id: document_id.to_string(),
            verdict: Verdict::Unsupported,
            criteria: Vec::new(),
            criteria_config: criteria.clone(),
            config_fingerprint: config_fingerprint.to_string(),
        };
    }

    let mut results = Vec::new();

    // field criteria in class-index order so reports are stable
    for &class in FieldClass::ALL.iter() {
        if !criteria.required_fields.contains(&class) {
            continue;
        }
        let best = best_token(tokens, class);
        results.push(CriterionResult {
            name: format!("field:{}", class.as_str()),
            satisfied: best.is_some_and(|t| t.confidence >= criteria.min_field_confidence),
            evidence: best.map(|t| Evidence::Token {
                text: t.token.text.clone(),
                r#box: t.token.bbox.to_array(),
                confidence: t.confidence,
            }),
        });
    }

    for (enabled, class, name) in [
        (criteria.require_stamp, ObjectClass::Stamp, "stamp"),
        (criteria.require_signature, ObjectClass::Signature, "signature"),
    ] {
        if !enabled {
            continue;
        }
        let best = best_detection(detections, class);
        results.push(CriterionResult {
            name: name.to_string(),
            satisfied: best.is_some_and(|d| d.score >= criteria.min_detection_score),
            evidence: best.map(|d| Evidence::Detection {
                class: d.class,
                r#box: d.bbox.to_array(),
                score: d.score,
            }),
        });
    }

    let verdict = if results.iter().all(|r| r.satisfied) {
        Verdict::Valid
    } else {
        Verdict::Invalid
    };
    ValidationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        document_id: document_id.to_string(),
        verdict,
        criteria: results,
        criteria_config: criteria.clone(),
        config_fingerprint: config_fingerprint.to_string(),
    }
}

/// One stable line per criterion; failed criteria come first so the first
/// line of an `Invalid` report names a failure.
pub fn explain(report: &ValidationReport) -> Vec<String> {
    match report.verdict {
        Verdict::Unsupported => {
            vec![format!("{}: Unsupported (handwritten; criteria not evaluated)", report.document_id)]
        }
        verdict => {
            let mut lines = vec![format!("{}: {:?}", report.document_id, verdict)];
            let (failed, satisfied): (Vec<_>, Vec<_>) =
                report.criteria.iter().partition(|c| !c.satisfied);
            for criterion in failed.iter().chain(satisfied.iter()) {
                let status = if criterion.satisfied { "satisfied" } else { "FAILED" };
                let detail = match &criterion.evidence {
                    Some(Evidence::Token { text, confidence, .. }) => {
                        format!(" ({text:?}, confidence {confidence:.2})")
                    }
                    Some(Evidence::Detection { score, .. }) => format!(" (score {score:.2})"),
                    None => String::new(),
                };
                lines.push(format!("  {}: {}{}", criterion.name, status, detail));
            }
            lines
        }
    }
}
