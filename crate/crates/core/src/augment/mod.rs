//! The two task-specific, box-aware augmentation tracks, deterministic under
//! a seed.
//!
//! The keyword track prepares pages for token labeling: padding, median blur
//! and color jitter, a small guarded rotation, and an optional resize. The
//! detection track presents stamps and signatures under varying conditions:
//! a larger rotation applied with probability 0.5, jitter with 0.4, and
//! per-channel multiplicative noise with 0.3.
//!
//! Randomness comes only from the passed-in [`Seed`]: per-document streams
//! are derived by stable hashing of `(master, document id, op index)`, so
//! parallel execution order cannot change outputs.

mod ops;

pub use ops::{
    color_jitter, median_blur, multiplicative_noise, pad_replicate, rotate_with_boxes,
    scale_with_boxes, Interpolation, JitterFactors, MarginPolicy, RotationOutcome,
};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::manifest::DocumentRecord;

/// Master seed with stable per-document, per-op stream derivation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Seed {
    /// Derives the RNG stream for one op on one document.
    pub fn stream(&self, doc_id: &str, op_index: u64) -> ChaCha8Rng {
        let mixed = splitmix64(self.0 ^ splitmix64(fnv1a(doc_id.as_bytes()) ^ splitmix64(op_index)));
        ChaCha8Rng::seed_from_u64(mixed)
    }
}

/// Photometric jitter sampling ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JitterParams {
    pub brightness: [f64; 2],
    pub contrast: [f64; 2],
    pub saturation: [f64; 2],
    /// Fraction of the hue circle.
    pub hue: [f64; 2],
}

impl Default for JitterParams {
    fn default() -> Self {
        JitterParams {
            brightness: [0.8, 1.2],
            contrast: [0.8, 1.2],
            saturation: [0.8, 1.2],
            hue: [-0.05, 0.05],
        }
    }
}

impl JitterParams {
    fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in [
            ("brightness", self.brightness),
            ("contrast", self.contrast),
            ("saturation", self.saturation),
            ("hue", self.hue),
        ] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidParams(format!("jitter {name} range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> JitterFactors {
        let draw = |rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        };
        JitterFactors {
            brightness: draw(rng, self.brightness),
            contrast: draw(rng, self.contrast),
            saturation: draw(rng, self.saturation),
            hue: draw(rng, self.hue),
        }
    }
}

/// Keyword-track configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KeywordAugConfig {
    /// Odd median kernel size.
    pub median_blur_kernel: u32,
    pub blur_probability: f64,
    pub jitter: JitterParams,
    pub jitter_probability: f64,
    pub pad_probability: f64,
    /// Replicate-border pad per side, as a fraction of each dimension.
    pub pad_fraction: f64,
    pub max_rotation_deg: f64,
    pub rotation_interpolation: Interpolation,
    /// No output box may come closer than this to any border after
    /// rotation; otherwise the rotation is skipped (flagged).
    pub crop_margin_px: f64,
    /// `None` keeps the post-rotation dimensions.
    pub resize_target: Option<(u32, u32)>,
}

impl Default for KeywordAugConfig {
    fn default() -> Self {
        KeywordAugConfig {
            median_blur_kernel: 3,
            blur_probability: 0.5,
            jitter: JitterParams::default(),
            jitter_probability: 0.5,
            pad_probability: 1.0,
            pad_fraction: 0.05,
            max_rotation_deg: 5.0,
            rotation_interpolation: Interpolation::Cubic,
            crop_margin_px: 20.0,
            resize_target: None,
        }
    }
}

impl KeywordAugConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("blur_probability", self.blur_probability),
            ("jitter_probability", self.jitter_probability),
            ("pad_probability", self.pad_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.median_blur_kernel == 0 || self.median_blur_kernel % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "median_blur_kernel must be odd, got {}",
                self.median_blur_kernel
            )));
        }
        if !self.max_rotation_deg.is_finite() || self.max_rotation_deg < 0.0 {
            return Err(Error::InvalidParams("max_rotation_deg must be >= 0".to_string()));
        }
        if !self.crop_margin_px.is_finite() || self.crop_margin_px < 0.0 {
            return Err(Error::InvalidParams("crop_margin_px must be >= 0".to_string()));
        }
        if !(0.0..=1.0).contains(&self.pad_fraction) {
            return Err(Error::InvalidParams("pad_fraction outside [0, 1]".to_string()));
        }
        self.jitter.validate()
    }
}

/// Detection-track configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionAugConfig {
    pub max_rotation_deg: f64,
    pub rotation_probability: f64,
    pub jitter: JitterParams,
    pub jitter_probability: f64,
    /// Per-channel multiplier range, within `[0.5, 1.0]`.
    pub noise_multiplier_range: [f64; 2],
    pub noise_probability: f64,
    pub rotation_interpolation: Interpolation,
}

impl Default for DetectionAugConfig {
    fn default() -> Self {
        DetectionAugConfig {
            max_rotation_deg: 10.0,
            rotation_probability: 0.5,
            jitter: JitterParams::default(),
            jitter_probability: 0.4,
            noise_multiplier_range: [0.5, 1.0],
            noise_probability: 0.3,
            rotation_interpolation: Interpolation::Bilinear,
        }
    }
}

impl DetectionAugConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("rotation_probability", self.rotation_probability),
            ("jitter_probability", self.jitter_probability),
            ("noise_probability", self.noise_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParams(format!("{name} {p} outside [0, 1]")));
            }
        }
        let [lo, hi] = self.noise_multiplier_range;
        if !(0.5..=1.0).contains(&lo) || !(0.5..=1.0).contains(&hi) || lo > hi {
            return Err(Error::InvalidParams(format!(
                "noise multiplier range [{lo}, {hi}] must lie within [0.5, 1.0]"
            )));
        }
        if !self.max_rotation_deg.is_finite() || self.max_rotation_deg < 0.0 {
            return Err(Error::InvalidParams("max_rotation_deg must be >= 0".to_string()));
        }
        self.jitter.validate()
    }
}

/// Photometric op selector for [`apply_photometric`].
#[derive(Debug, Clone, PartialEq)]
pub enum PhotometricKind {
    MedianBlur { kernel: u32 },
    ColorJitter(JitterParams),
    MultiplicativeNoise { multiplier_range: [f64; 2] },
}

/// Applies one photometric op, sampling its factors from `stream`. Output
/// dimensions always equal input dimensions; geometry is untouched.
pub fn apply_photometric(
    image: &crate::raster::DocumentImage,
    kind: &PhotometricKind,
    stream: &mut ChaCha8Rng,
) -> Result<crate::raster::DocumentImage> {
    match kind {
        PhotometricKind::MedianBlur { kernel } => median_blur(image, *kernel),
        PhotometricKind::ColorJitter(params) => {
            params.validate()?;
            Ok(color_jitter(image, params.sample(stream)))
        }
        PhotometricKind::MultiplicativeNoise { multiplier_range } => {
            let [lo, hi] = *multiplier_range;
            if !(0.5..=1.0).contains(&lo) || !(0.5..=1.0).contains(&hi) || lo > hi {
                return Err(Error::InvalidParams(format!(
                    "noise multiplier range [{lo}, {hi}] must lie within [0.5, 1.0]"
                )));
            }
            let multipliers = sample_multipliers(lo, hi, stream);
            Ok(multiplicative_noise(image, multipliers))
        }
    }
}

fn sample_multipliers(lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> [f64; 3] {
    std::array::from_fn(|_| if lo == hi { lo } else { rng.random_range(lo..hi) })
}

/// What one augmentation run did. Geometry-free ops never appear in the box
/// fields.
#[derive(Debug, Clone, Default)]
pub struct AugTrace {
    pub padded: bool,
    pub blur_applied: bool,
    pub jitter_factors: Option<JitterFactors>,
    /// Angle drawn for the rotation stage (keyword track always draws one;
    /// detection track only when the probability gate passes).
    pub sampled_angle_deg: Option<f64>,
    /// True when the margin guard rejected the sampled rotation.
    pub rotation_guard_skipped: bool,
    /// True when the rotation was actually applied to the image.
    pub rotation_applied: bool,
    /// Boxes as they stood right after the rotation stage, for margin
    /// checks independent of any later resize.
    pub boxes_after_rotation: Vec<BBox>,
    pub noise_multipliers: Option<[f64; 3]>,
    pub resized: bool,
}

/// An augmented record together with its trace.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub record: DocumentRecord,
    pub trace: AugTrace,
}

// Fixed op indices keep seed streams stable if ops are reordered.
const OP_PAD: u64 = 0;
const OP_BLUR: u64 = 1;
const OP_JITTER: u64 = 2;
const OP_ROTATE: u64 = 3;
const OP_NOISE: u64 = 5;

fn split_annotations(record: &DocumentRecord) -> Vec<BBox> {
    record.annotations.iter().map(|a| a.bbox).collect()
}

fn rebuild_record(record: &DocumentRecord, image: crate::raster::DocumentImage, boxes: Vec<BBox>) -> DocumentRecord {
    debug_assert_eq!(boxes.len(), record.annotations.len());
    DocumentRecord {
        id: record.id.clone(),
        image,
        annotations: record
            .annotations
            .iter()
            .zip(boxes)
            .map(|(a, bbox)| crate::manifest::Annotation {
                field_class: a.field_class,
                bbox,
                text: a.text.clone(),
            })
            .collect(),
        handwritten: record.handwritten,
    }
}

/// Keyword-track pipeline: pad, blur/jitter, guarded rotation, resize.
pub fn augment_keyword(
    record: &DocumentRecord,
    cfg: &KeywordAugConfig,
    seed: &Seed,
) -> Result<Augmented> {
    cfg.validate()?;
    if record.handwritten {
        return Err(Error::InvalidParams(format!(
            "record {:?} is handwritten; the keyword track only augments machine-written documents",
            record.id
        )));
    }

    let mut image = record.image.clone();
    let mut boxes = split_annotations(record);
    let mut trace = AugTrace::default();

    let mut rng = seed.stream(&record.id, OP_PAD);
    if cfg.pad_probability > 0.0 && rng.random_bool(cfg.pad_probability) {
        let (padded, padded_boxes) = pad_replicate(&image, &boxes, cfg.pad_fraction)?;
        image = padded;
        boxes = padded_boxes;
        trace.padded = true;
    }

    let mut rng = seed.stream(&record.id, OP_BLUR);
    if cfg.blur_probability > 0.0 && rng.random_bool(cfg.blur_probability) {
        image = median_blur(&image, cfg.median_blur_kernel)?;
        trace.blur_applied = true;
    }

    let mut rng = seed.stream(&record.id, OP_JITTER);
    if cfg.jitter_probability > 0.0 && rng.random_bool(cfg.jitter_probability) {
        let factors = cfg.jitter.sample(&mut rng);
        image = color_jitter(&image, factors);
        trace.jitter_factors = Some(factors);
    }

    let mut rng = seed.stream(&record.id, OP_ROTATE);
    if cfg.max_rotation_deg > 0.0 {
        let angle = rng.random_range(-cfg.max_rotation_deg..cfg.max_rotation_deg);
        trace.sampled_angle_deg = Some(angle);
        let outcome = rotate_with_boxes(
            &image,
            &boxes,
            angle,
            cfg.max_rotation_deg,
            cfg.rotation_interpolation,
            MarginPolicy::Guard(cfg.crop_margin_px),
        )?;
        trace.rotation_guard_skipped = outcome.guard_triggered;
        trace.rotation_applied = !outcome.guard_triggered && angle != 0.0;
        image = outcome.image;
        boxes = outcome.boxes;
    }
    trace.boxes_after_rotation = boxes.clone();

    if let Some((w, h)) = cfg.resize_target {
        let (resized, resized_boxes) = scale_with_boxes(&image, &boxes, w, h)?;
        image = resized;
        boxes = resized_boxes;
        trace.resized = true;
    }

    Ok(Augmented { record: rebuild_record(record, image, boxes), trace })
}

/// Detection-track pipeline: probabilistic rotation (boxes clipped, no
/// margin guard), jitter, per-channel multiplicative noise.
pub fn augment_detection(
    record: &DocumentRecord,
    cfg: &DetectionAugConfig,
    seed: &Seed,
) -> Result<Augmented> {
    cfg.validate()?;
    if record.handwritten {
        return Err(Error::InvalidParams(format!(
            "record {:?} is handwritten; the detection track only augments machine-written documents",
            record.id
        )));
    }

    let mut image = record.image.clone();
    let mut boxes = split_annotations(record);
    let mut trace = AugTrace::default();

    let mut rng = seed.stream(&record.id, OP_ROTATE);
    if cfg.rotation_probability > 0.0
        && rng.random_bool(cfg.rotation_probability)
        && cfg.max_rotation_deg > 0.0
    {
        let angle = rng.random_range(-cfg.max_rotation_deg..cfg.max_rotation_deg);
        trace.sampled_angle_deg = Some(angle);
        let outcome = rotate_with_boxes(
            &image,
            &boxes,
            angle,
            cfg.max_rotation_deg,
            cfg.rotation_interpolation,
            MarginPolicy::Clip,
        )?;
        trace.rotation_applied = angle != 0.0;
        image = outcome.image;
        boxes = outcome.boxes;
    }
    trace.boxes_after_rotation = boxes.clone();

    let mut rng = seed.stream(&record.id, OP_JITTER);
    if cfg.jitter_probability > 0.0 && rng.random_bool(cfg.jitter_probability) {
        let factors = cfg.jitter.sample(&mut rng);
        image = color_jitter(&image, factors);
        trace.jitter_factors = Some(factors);
    }

    let mut rng = seed.stream(&record.id, OP_NOISE);
    if cfg.noise_probability > 0.0 && rng.random_bool(cfg.noise_probability) {
        let [lo, hi] = cfg.noise_multiplier_range;
        let multipliers = sample_multipliers(lo, hi, &mut rng);
        image = multiplicative_noise(&image, multipliers);
        trace.noise_multipliers = Some(multipliers);
    }

    Ok(Augmented { record: rebuild_record(record, image, boxes), trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{Annotation, FieldClass};
    use crate::raster::DocumentImage;

    fn record() -> DocumentRecord {
        let mut image = DocumentImage::filled(200, 160, [250, 250, 250]);
        for y in 60..80 {
            for x in 60..140 {
                image.set(x, y, [30, 30, 30]);
            }
        }
        DocumentRecord {
            id: "doc-1".to_string(),
            image,
            annotations: vec![Annotation {
                field_class: FieldClass::Title,
                bbox: BBox::new(60.0, 60.0, 140.0, 80.0).unwrap(),
                text: Some("INVOICE".to_string()),
            }],
            handwritten: false,
        }
    }

    #[test]
    fn degenerate_keyword_config_only_pads() {
        let cfg = KeywordAugConfig {
            blur_probability: 0.0,
            jitter_probability: 0.0,
            max_rotation_deg: 0.0,
            resize_target: None,
            ..KeywordAugConfig::default()
        };
        let rec = record();
        let out = augment_keyword(&rec, &cfg, &Seed(1)).unwrap();
        assert!(out.trace.padded);
        assert!(!out.trace.blur_applied);
        assert!(out.trace.jitter_factors.is_none());
        assert!(out.trace.sampled_angle_deg.is_none());
        // padding by 5% of 200x160 = 10 and 8 per side
        assert_eq!(out.record.image.width(), 220);
        assert_eq!(out.record.image.height(), 176);
        assert_eq!(out.record.annotations[0].bbox.to_array(), [70.0, 68.0, 150.0, 88.0]);

        // with padding disabled too, the record passes through unchanged
        let identity_cfg = KeywordAugConfig { pad_probability: 0.0, ..cfg };
        let out = augment_keyword(&rec, &identity_cfg, &Seed(1)).unwrap();
        assert_eq!(out.record.image, rec.image);
        assert_eq!(out.record.annotations, rec.annotations);
    }

    #[test]
    fn keyword_track_is_deterministic() {
        let rec = record();
        let cfg = KeywordAugConfig::default();
        let a = augment_keyword(&rec, &cfg, &Seed(42)).unwrap();
        let b = augment_keyword(&rec, &cfg, &Seed(42)).unwrap();
        assert_eq!(a.record.image, b.record.image);
        assert_eq!(a.record.annotations, b.record.annotations);

        let c = augment_keyword(&rec, &cfg, &Seed(43)).unwrap();
        assert!(a.record.image != c.record.image || a.record.annotations != c.record.annotations);
    }

    #[test]
    fn detection_track_is_deterministic_and_preserves_cardinality() {
        let rec = record();
        let cfg = DetectionAugConfig::default();
        for seed in 0..20 {
            let a = augment_detection(&rec, &cfg, &Seed(seed)).unwrap();
            let b = augment_detection(&rec, &cfg, &Seed(seed)).unwrap();
            assert_eq!(a.record.image, b.record.image);
            assert_eq!(a.record.annotations, b.record.annotations);
            assert_eq!(a.record.annotations.len(), rec.annotations.len());
        }
    }

    #[test]
    fn detection_zero_probabilities_is_identity() {
        let cfg = DetectionAugConfig {
            rotation_probability: 0.0,
            jitter_probability: 0.0,
            noise_probability: 0.0,
            ..DetectionAugConfig::default()
        };
        let rec = record();
        let out = augment_detection(&rec, &cfg, &Seed(5)).unwrap();
        assert_eq!(out.record.image, rec.image);
        assert_eq!(out.record.annotations, rec.annotations);
    }

    #[test]
    fn handwritten_records_are_rejected() {
        let mut rec = record();
        rec.handwritten = true;
        assert!(augment_keyword(&rec, &KeywordAugConfig::default(), &Seed(0)).is_err());
        assert!(augment_detection(&rec, &DetectionAugConfig::default(), &Seed(0)).is_err());
    }

    #[test]
    fn sampled_angles_respect_the_bound() {
        let rec = record();
        let cfg = KeywordAugConfig::default();
        for seed in 0..100 {
            let out = augment_keyword(&rec, &cfg, &Seed(seed)).unwrap();
            if let Some(angle) = out.trace.sampled_angle_deg {
                assert!(angle.abs() <= cfg.max_rotation_deg);
            }
        }
    }

    #[test]
    fn photometric_ops_leave_boxes_untouched() {
        let rec = record();
        let cfg = KeywordAugConfig {
            pad_probability: 0.0,
            max_rotation_deg: 0.0,
            blur_probability: 1.0,
            jitter_probability: 1.0,
            ..KeywordAugConfig::default()
        };
        for seed in 0..10 {
            let out = augment_keyword(&rec, &cfg, &Seed(seed)).unwrap();
            assert_eq!(out.record.annotations, rec.annotations);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = KeywordAugConfig { blur_probability: 1.5, ..KeywordAugConfig::default() };
        assert!(augment_keyword(&record(), &cfg, &Seed(0)).is_err());

        let cfg = DetectionAugConfig {
            noise_multiplier_range: [0.2, 1.0],
            ..DetectionAugConfig::default()
        };
        assert!(augment_detection(&record(), &cfg, &Seed(0)).is_err());
    }

    #[test]
    fn seed_streams_are_independent_per_document() {
        let seed = Seed(7);
        let a: u64 = seed.stream("doc-a", 0).random();
        let b: u64 = seed.stream("doc-b", 0).random();
        let a2: u64 = seed.stream("doc-a", 0).random();
        assert_ne!(a, b);
        assert_eq!(a, a2);
        let a_op1: u64 = seed.stream("doc-a", 1).random();
        assert_ne!(a, a_op1);
    }
}
