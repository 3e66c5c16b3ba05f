//! Rule-driven mock backends backed by fixture ground truth.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::infer::{Detection, DetectorBackend, LayoutBackend, ObjectClass};
use crate::labeling::{SequenceExample, NORMALIZED_GRID};
use crate::manifest::{DatasetManifest, FieldClass};
use crate::raster::DocumentImage;

/// Annotation geometry kept per document: class plus box.
type AnnotationMap = HashMap<String, Vec<(FieldClass, BBox)>>;

fn annotation_map(manifest: &DatasetManifest) -> AnnotationMap {
    manifest
        .records
        .iter()
        .map(|r| {
            (
                r.id.clone(),
                r.annotations.iter().map(|a| (a.field_class, a.bbox)).collect(),
            )
        })
        .collect()
}

/// Layout backend that labels tokens against the manifest's own annotation
/// boxes using the containment rule, emitting saturated one-hot logits.
pub struct MockLayoutBackend {
    annotations: AnnotationMap,
    overlap_threshold: f64,
}

impl MockLayoutBackend {
    /// Logit magnitude for the chosen class. Large enough that softmax
    /// confidence is exactly 1.0 in f64.
    pub const ONE_HOT_LOGIT: f64 = 50.0;

    pub fn from_manifest(manifest: &DatasetManifest) -> Self {
        MockLayoutBackend {
            annotations: annotation_map(manifest),
            overlap_threshold: crate::labeling::DEFAULT_OVERLAP_THRESHOLD,
        }
    }
}

impl LayoutBackend for MockLayoutBackend {
    fn predict(
        &self,
        example: &SequenceExample,
        image: &DocumentImage,
    ) -> Result<Vec<[f64; FieldClass::ALL.len()]>> {
        let annotations = self.annotations.get(&example.document_id).ok_or_else(|| {
            Error::BackendFailure(format!(
                "mock layout backend knows no document {:?}",
                example.document_id
            ))
        })?;
        // Project annotations onto the same 0-1000 grid the example boxes
        // use, then apply the containment rule there.
        let sx = NORMALIZED_GRID as f64 / image.width() as f64;
        let sy = NORMALIZED_GRID as f64 / image.height() as f64;
        let grid_annotations: Vec<(FieldClass, BBox)> = annotations
            .iter()
            .map(|&(class, b)| {
                (
                    class,
                    BBox {
                        x_min: b.x_min * sx,
                        y_min: b.y_min * sy,
                        x_max: b.x_max * sx,
                        y_max: b.y_max * sy,
                    },
                )
            })
            .collect();

        Ok(example
            .boxes
            .iter()
            .map(|&[x0, y0, x1, y1]| {
                let token_box = BBox {
                    x_min: x0 as f64,
                    y_min: y0 as f64,
                    x_max: (x1 as f64).max(x0 as f64 + 1.0),
                    y_max: (y1 as f64).max(y0 as f64 + 1.0),
                };
                let mut best: Option<(f64, f64, usize)> = None;
                for (idx, (_, ann_box)) in grid_annotations.iter().enumerate() {
                    let ratio = token_box.intersection_area(ann_box) / token_box.area();
                    if ratio < self.overlap_threshold {
                        continue;
                    }
                    let candidate = (ratio, ann_box.area(), idx);
                    best = Some(match best {
                        None => candidate,
                        Some((cr, ca, ci)) => {
                            if ratio > cr || (ratio == cr && (candidate.1 < ca || (candidate.1 == ca && idx < ci))) {
                                candidate
                            } else {
                                (cr, ca, ci)
                            }
                        }
                    });
                }
                let label = match best {
                    Some((_, _, idx)) => grid_annotations[idx].0,
                    None => FieldClass::Other,
                };
                let mut scores = [0.0; FieldClass::ALL.len()];
                scores[label.index()] = Self::ONE_HOT_LOGIT;
                scores
            })
            .collect())
    }
}

/// Detector backend that re-emits the manifest's stamp and signature boxes
/// with fixed scores.
pub struct MockDetectorBackend {
    annotations: AnnotationMap,
}

impl MockDetectorBackend {
    pub const STAMP_SCORE: f64 = 0.95;
    pub const SIGNATURE_SCORE: f64 = 0.9;

    pub fn from_manifest(manifest: &DatasetManifest) -> Self {
        MockDetectorBackend { annotations: annotation_map(manifest) }
    }
}

impl DetectorBackend for MockDetectorBackend {
    fn predict(&self, doc_id: &str, image: &DocumentImage) -> Result<Vec<Detection>> {
        let annotations = self.annotations.get(doc_id).ok_or_else(|| {
            Error::BackendFailure(format!("mock detector knows no document {doc_id:?}"))
        })?;
        Ok(annotations
            .iter()
            .filter_map(|&(class, bbox)| {
                let object = ObjectClass::from_field_class(class)?;
                let clipped = bbox.clip(image.width(), image.height())?;
                Some(Detection {
                    class: object,
                    bbox: clipped,
                    score: match object {
                        ObjectClass::Stamp => Self::STAMP_SCORE,
                        ObjectClass::Signature => Self::SIGNATURE_SCORE,
                    },
                })
            })
            .collect())
    }
}
