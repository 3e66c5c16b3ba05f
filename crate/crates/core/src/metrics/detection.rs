//! Detection evaluation: greedy matching, 101-point interpolated average
//! precision, and the mAP summaries over the ten COCO IoU thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bbox_iou, BBox};
use crate::infer::{Detection, ObjectClass};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub const COCO_IOU_THRESHOLDS: [f64; 10] =
    [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

const RECALL_POINTS: usize = 101;

/// One image's detections and gold boxes for one class.
#[derive(Debug, Clone)]
pub struct MatchFlags {
    /// `(score, true_positive)` per detection, sorted by descending score.
    pub flags: Vec<(f64, bool)>,
    /// Gold boxes left unmatched.
    pub false_negatives: usize,
}

/// Greedy per-image, per-class matching.
///
/// Detections are visited by descending score (ties by box order); each one
/// claims the highest-IoU still-unmatched gold with IoU at or above the
/// threshold. Claimed golds cannot be matched twice, so a duplicate
/// detection of the same object becomes a false positive.
pub fn match_detections(
    detections: &[Detection],
    gold: &[BBox],
    iou_threshold: f64,
) -> MatchFlags {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then_with(|| detections[a].bbox.lex_cmp(&detections[b].bbox))
    });

    let mut gold_taken = vec![false; gold.len()];
    let mut flags = Vec::with_capacity(detections.len());
    for idx in order {
        let det = &detections[idx];
        let mut best: Option<(f64, usize)> = None;
        for (gi, g) in gold.iter().enumerate() {
            if gold_taken[gi] {
                continue;
            }
            let iou = bbox_iou(&det.bbox, g);
            if iou < iou_threshold {
                continue;
            }
            if best.is_none_or(|(bi, _)| iou > bi) {
                best = Some((iou, gi));
            }
        }
        match best {
            Some((_, gi)) => {
                gold_taken[gi] = true;
                flags.push((det.score, true));
            }
            None => flags.push((det.score, false)),
        }
    }
    MatchFlags { flags, false_negatives: gold_taken.iter().filter(|&&t| !t).count() }
}

/// 101-point interpolated average precision over globally score-sorted
/// flags. `n_gold == 0` is [`Error::ZeroGold`]: AP is undefined there, and
/// [`mean_ap`] records such classes as excluded instead of averaging them.
pub fn average_precision(flags: &[(f64, bool)], n_gold: usize) -> Result<f64> {
    if n_gold == 0 {
        return Err(Error::ZeroGold);
    }
    debug_assert!(
        flags.windows(2).all(|w| w[0].0 >= w[1].0),
        "flags must be sorted by descending score"
    );

    let mut precisions = Vec::with_capacity(flags.len());
    let mut recalls = Vec::with_capacity(flags.len());
    let mut tp = 0usize;
    for (rank, &(_, is_tp)) in flags.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
        recalls.push(tp as f64 / n_gold as f64);
    }

    // interpolated precision: running max from the right
    let mut interpolated = precisions.clone();
    for i in (0..interpolated.len().saturating_sub(1)).rev() {
        interpolated[i] = interpolated[i].max(interpolated[i + 1]);
    }

    // mean over the fixed recall grid; recalls are non-decreasing, so a
    // single forward pointer suffices
    let mut cursor = 0usize;
    let mut total = 0.0;
    for step in 0..RECALL_POINTS {
        let recall_threshold = step as f64 / (RECALL_POINTS - 1) as f64;
        while cursor < recalls.len() && recalls[cursor] < recall_threshold - 1e-12 {
            cursor += 1;
        }
        if cursor < recalls.len() {
            total += interpolated[cursor];
        }
    }
    Ok(total / RECALL_POINTS as f64)
}

/// Dataset unit for detection evaluation: one image's post-NMS detections
/// and its gold objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub detections: Vec<Detection>,
    pub golds: Vec<(ObjectClass, BBox)>,
}

/// Per-class APs at each threshold plus the two summary means.
///
/// All values live in `[0, 1]`; [`DetectionEvalReport::render_table`]
/// reports them x100.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionEvalReport {
    pub iou_thresholds: Vec<f64>,
    /// `(class, gold_count, ap_by_threshold)` in class order. Classes with
    /// zero gold boxes carry an empty AP vector.
    pub per_class: Vec<(ObjectClass, usize, Vec<f64>)>,
    /// Classes excluded from the means because AP is undefined for them.
    pub zero_gold_classes: Vec<ObjectClass>,
    pub map_50: f64,
    pub map_50_95: f64,
}

/// Evaluates the dataset at every COCO threshold.
///
/// Flags are pooled across images per class and sorted globally by score
/// (ties by image id, then box order) so the reduction is deterministic
/// regardless of per-image evaluation order.
pub fn mean_ap(scenes: &[Scene]) -> DetectionEvalReport {
    let mut per_class = Vec::new();
    let mut zero_gold_classes = Vec::new();
    let mut ap50 = Vec::new();
    let mut ap_all = Vec::new();

    for &class in ObjectClass::ALL.iter() {
        let n_gold: usize = scenes
            .iter()
            .map(|s| s.golds.iter().filter(|(c, _)| *c == class).count())
            .sum();
        if n_gold == 0 {
            zero_gold_classes.push(class);
            per_class.push((class, 0, Vec::new()));
            continue;
        }

        let mut ap_by_threshold = Vec::with_capacity(COCO_IOU_THRESHOLDS.len());
        for &threshold in COCO_IOU_THRESHOLDS.iter() {
            // (score, image id, box, tp) for a stable global order
            let mut pooled: Vec<(f64, &str, BBox, bool)> = Vec::new();
            for scene in scenes {
                let dets: Vec<Detection> =
                    scene.detections.iter().filter(|d| d.class == class).cloned().collect();
                let golds: Vec<BBox> = scene
                    .golds
                    .iter()
                    .filter(|(c, _)| *c == class)
                    .map(|&(_, b)| b)
                    .collect();
                let matched = match_detections(&dets, &golds, threshold);
                // match_detections visits by descending score; re-pair flags
                // with their boxes through the same ordering
                let mut order: Vec<usize> = (0..dets.len()).collect();
                order.sort_by(|&a, &b| {
                    dets[b]
                        .score
                        .total_cmp(&dets[a].score)
                        .then_with(|| dets[a].bbox.lex_cmp(&dets[b].bbox))
                });
                for (slot, &det_idx) in order.iter().enumerate() {
                    let (score, tp) = matched.flags[slot];
                    pooled.push((score, scene.id.as_str(), dets[det_idx].bbox, tp));
                }
            }
            pooled.sort_by(|a, b| {
                b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)).then_with(|| a.2.lex_cmp(&b.2))
            });
            let flags: Vec<(f64, bool)> = pooled.iter().map(|&(s, _, _, tp)| (s, tp)).collect();
            let ap = average_precision(&flags, n_gold).expect("n_gold > 0 checked above");
            ap_by_threshold.push(ap);
        }

        ap50.push(ap_by_threshold[0]);
        ap_all.extend(ap_by_threshold.iter().copied());
        per_class.push((class, n_gold, ap_by_threshold));
    }

    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    DetectionEvalReport {
        iou_thresholds: COCO_IOU_THRESHOLDS.to_vec(),
        per_class,
        zero_gold_classes,
        map_50: mean(&ap50),
        map_50_95: mean(&ap_all),
    }
}

impl DetectionEvalReport {
    /// Aligned text table in mAP@0.50 / mAP@50:95 column order, x100 with
    /// two decimals.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12}  {:>8}  {:>9}\n", "Class", "mAP@0.50", "mAP@50:95"));
        for (class, gold, aps) in &self.per_class {
            if aps.is_empty() {
                out.push_str(&format!(
                    "{:<12}  {:>8}  {:>9}  (no gold boxes, excluded)\n",
                    class.as_str(),
                    "-",
                    "-"
                ));
            } else {
                let mean_all = aps.iter().sum::<f64>() / aps.len() as f64;
                out.push_str(&format!(
                    "{:<12}  {:>8.2}  {:>9.2}  ({} gold)\n",
                    class.as_str(),
                    aps[0] * 100.0,
                    mean_all * 100.0,
                    gold
                ));
            }
        }
        out.push_str(&format!(
            "{:<12}  {:>8.2}  {:>9.2}\n",
            "mean",
            self.map_50 * 100.0,
            self.map_50_95 * 100.0
        ));
        out
    }
}
