//! Detection post-processing: score filtering and per-class greedy NMS.

use crate::geometry::bbox_iou;
use crate::infer::Detection;

/// Default score threshold applied before NMS. Surfaced in config and
/// stamped into every report.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;

/// Default NMS IoU threshold.
pub const DEFAULT_NMS_IOU: f64 = 0.5;

/// Keeps detections with `score >= threshold`, preserving order.
pub fn filter_detections(detections: Vec<Detection>, score_threshold: f64) -> Vec<Detection> {
    detections.into_iter().filter(|d| d.score >= score_threshold).collect()
}

/// Per-class greedy non-maximum suppression.
///
/// Detections are visited by descending score (ties by box lexicographic
/// order); one is kept iff its IoU with every already-kept detection of the
/// same class stays below `iou_threshold`. Idempotent.
pub fn nms(detections: Vec<Detection>, iou_threshold: f64) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then_with(|| detections[a].bbox.lex_cmp(&detections[b].bbox))
    });

    let mut kept: Vec<Detection> = Vec::new();
    for idx in order {
        let candidate = &detections[idx];
        let suppressed = kept.iter().any(|k| {
            k.class == candidate.class && bbox_iou(&k.bbox, &candidate.bbox) >= iou_threshold
        });
        if !suppressed {
            kept.push(candidate.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::infer::ObjectClass;

    fn det(class: ObjectClass, coords: [f64; 4], score: f64) -> Detection {
        Detection {
            class,
            bbox: BBox::new(coords[0], coords[1], coords[2], coords[3]).unwrap(),
            score,
        }
    }

    #[test]
    fn filter_keeps_order_and_thresholds() {
        let dets = vec![
            det(ObjectClass::Stamp, [0.0, 0.0, 1.0, 1.0], 0.9),
            det(ObjectClass::Stamp, [2.0, 2.0, 3.0, 3.0], 0.4),
        ];
        assert_eq!(filter_detections(dets.clone(), 0.0).len(), 2);
        let kept = filter_detections(dets.clone(), 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
        let ones = filter_detections(dets, 1.0);
        assert!(ones.is_empty());
    }

    #[test]
    fn single_detection_survives() {
        let dets = vec![det(ObjectClass::Stamp, [0.0, 0.0, 5.0, 5.0], 0.7)];
        assert_eq!(nms(dets.clone(), 0.5), dets);
    }

    #[test]
    fn duplicate_boxes_keep_the_higher_score() {
        let dets = vec![
            det(ObjectClass::Stamp, [0.0, 0.0, 5.0, 5.0], 0.8),
            det(ObjectClass::Stamp, [0.0, 0.0, 5.0, 5.0], 0.9),
        ];
        let kept = nms(dets, 0.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn low_overlap_boxes_both_survive() {
        // IoU 1/7 < 0.5
        let dets = vec![
            det(ObjectClass::Stamp, [0.0, 0.0, 2.0, 2.0], 0.9),
            det(ObjectClass::Stamp, [1.0, 1.0, 3.0, 3.0], 0.8),
        ];
        assert_eq!(nms(dets, 0.5).len(), 2);
    }

    #[test]
    fn suppression_is_per_class() {
        let dets = vec![
            det(ObjectClass::Stamp, [0.0, 0.0, 5.0, 5.0], 0.9),
            det(ObjectClass::Signature, [0.0, 0.0, 5.0, 5.0], 0.8),
        ];
        assert_eq!(nms(dets, 0.5).len(), 2);
    }

    #[test]
    fn nms_is_idempotent_and_separated() {
        let mut dets = Vec::new();
        // grid of overlapping boxes
        for i in 0..6 {
            let x = i as f64 * 1.5;
            dets.push(det(ObjectClass::Stamp, [x, 0.0, x + 4.0, 4.0], 0.5 + 0.05 * i as f64));
        }
        let once = nms(dets, 0.5);
        let twice = nms(once.clone(), 0.5);
        assert_eq!(once, twice);
        for (i, a) in once.iter().enumerate() {
            for b in once.iter().skip(i + 1) {
                if a.class == b.class {
                    assert!(bbox_iou(&a.bbox, &b.bbox) < 0.5);
                }
            }
        }
    }
}
