//! Evaluation arithmetic: token-classification precision/recall/F1 and
//! COCO-style average precision for the detector track.

mod detection;
mod token;

pub use detection::{
    average_precision, match_detections, mean_ap, DetectionEvalReport, MatchFlags, Scene,
    COCO_IOU_THRESHOLDS,
};
pub use token::{f1_score, precision_recall_f1, ClassMetrics, TokenEvalReport};
