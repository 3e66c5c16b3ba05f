//! Token-classification metrics.
//!
//! Micro-averaged over the non-background classes: a position counts as a
//! true positive when prediction and gold agree on a field class, a false
//! positive when a field class is predicted but the gold differs, and a
//! false negative when a gold field class is missed. Background-background
//! agreements contribute nothing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::FieldClass;

/// Precision/recall/F1 with the gold support count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn metrics(tp: u64, fp: u64, fn_: u64) -> ClassMetrics {
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    ClassMetrics { precision, recall, f1: f1_score(precision, recall), support: tp + fn_ }
}

/// Per-class and micro-averaged token metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEvalReport {
    /// The seven field classes in index order.
    pub per_class: Vec<(FieldClass, ClassMetrics)>,
    pub micro: ClassMetrics,
    /// Averaging rule, stamped so reports are self-describing.
    pub averaging: String,
}

/// Computes the report over aligned, equal-length label sequences.
pub fn precision_recall_f1(
    predicted: &[FieldClass],
    gold: &[FieldClass],
) -> Result<TokenEvalReport> {
    if predicted.len() != gold.len() {
        return Err(Error::LengthMismatch { predicted: predicted.len(), gold: gold.len() });
    }

    let mut tp = [0u64; 8];
    let mut fp = [0u64; 8];
    let mut fn_ = [0u64; 8];
    for (&p, &g) in predicted.iter().zip(gold.iter()) {
        if p == g {
            if p != FieldClass::Other {
                tp[p.index()] += 1;
            }
        } else {
            if p != FieldClass::Other {
                fp[p.index()] += 1;
            }
            if g != FieldClass::Other {
                fn_[g.index()] += 1;
            }
        }
    }

    let per_class: Vec<(FieldClass, ClassMetrics)> = FieldClass::ANNOTATION
        .iter()
        .map(|&c| (c, metrics(tp[c.index()], fp[c.index()], fn_[c.index()])))
        .collect();
    let micro = metrics(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum());

    Ok(TokenEvalReport {
        per_class,
        micro,
        averaging: "micro over non-O classes".to_string(),
    })
}

impl TokenEvalReport {
    /// Aligned text table, F1 / Recall / Precision column order.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12}  {:>8}  {:>8}  {:>9}  {:>7}\n",
            "Class", "F1-Score", "Recall", "Precision", "Support"
        ));
        for (class, m) in &self.per_class {
            out.push_str(&format!(
                "{:<12}  {:>8.2}  {:>8.2}  {:>9.2}  {:>7}\n",
                class.as_str(),
                m.f1,
                m.recall,
                m.precision,
                m.support
            ));
        }
        out.push_str(&format!(
            "{:<12}  {:>8.2}  {:>8.2}  {:>9.2}  {:>7}\n",
            "micro", self.micro.f1, self.micro.recall, self.micro.precision, self.micro.support
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let gold = vec![FieldClass::Title, FieldClass::Other, FieldClass::Date];
        let report = precision_recall_f1(&gold, &gold).unwrap();
        assert_eq!(report.micro.precision, 1.0);
        assert_eq!(report.micro.recall, 1.0);
        assert_eq!(report.micro.f1, 1.0);
        assert_eq!(report.micro.support, 2); // background not counted
    }

    #[test]
    fn background_agreement_does_not_inflate() {
        let gold = vec![FieldClass::Other; 10];
        let report = precision_recall_f1(&gold, &gold).unwrap();
        assert_eq!(report.micro.support, 0);
        assert_eq!(report.micro.f1, 0.0);
    }

    #[test]
    fn cross_class_error_is_both_fp_and_fn() {
        let predicted = vec![FieldClass::Title];
        let gold = vec![FieldClass::Date];
        let report = precision_recall_f1(&predicted, &gold).unwrap();
        assert_eq!(report.micro.precision, 0.0);
        assert_eq!(report.micro.recall, 0.0);
        let title = report.per_class[FieldClass::Title.index()].1;
        let date = report.per_class[FieldClass::Date.index()].1;
        assert_eq!(title.precision, 0.0);
        assert_eq!(date.recall, 0.0);
    }

    #[test]
    fn mixed_counts() {
        use FieldClass::{Date, Other, Title};
        let predicted = vec![Title, Title, Other, Date, Other];
        let gold = vec![Title, Other, Other, Date, Date];
        // TP = 2 (Title, Date); FP = 1 (Title over Other); FN = 1 (missed Date)
        let report = precision_recall_f1(&predicted, &gold).unwrap();
        assert!((report.micro.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.micro.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.micro.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            precision_recall_f1(&[FieldClass::Title], &[]),
            Err(Error::LengthMismatch { predicted: 1, gold: 0 })
        ));
    }

    #[test]
    fn f1_is_harmonic_mean() {
        assert!((f1_score(0.68, 0.48) - 0.5627586206896552).abs() < 1e-12);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert_eq!(f1_score(1.0, 1.0), 1.0);
    }
}
