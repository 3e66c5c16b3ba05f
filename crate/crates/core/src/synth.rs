//! Synthetic invoice fixture generator.
//!
//! The generator renders invoice-like pages — schematic text strokes for the
//! keyword fields, an ellipse-outline stamp, a wobbly polyline signature —
//! and emits exact annotations plus a self-describing plan: which classes
//! each document contains, including deliberately omitted elements. Tests
//! cross-check pipeline verdicts against the plan instead of trusting any
//! model.
//!
//! Distortion knobs (per-document skew, stroke blur) approximate phone-shot
//! pages so augmentation and guard logic see realistically imperfect input.

use std::collections::BTreeSet;
use std::path::Path;

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{median_blur, rotate_with_boxes, Interpolation, MarginPolicy, Seed};
use crate::error::Result;
use crate::geometry::BBox;
use crate::manifest::{
    Annotation, DatasetManifest, DocumentRecord, FieldClass, ManifestRecord, Split,
};
use crate::raster::DocumentImage;

const INK: [u8; 3] = [35, 35, 45];
const STAMP_INK: [u8; 3] = [70, 70, 170];
const SIGNATURE_INK: [u8; 3] = [25, 25, 95];

/// Which elements a generated page carries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocPlan {
    pub id: String,
    pub classes: BTreeSet<FieldClass>,
    pub handwritten: bool,
}

/// The generator's own ground truth, one entry per document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPlan {
    pub docs: Vec<DocPlan>,
}

/// Fixture shape controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthOptions {
    pub n_docs: usize,
    pub base_width: u32,
    pub base_height: u32,
    /// Document indices rendered without a stamp.
    pub omit_stamp: Vec<usize>,
    /// Document indices rendered without a signature.
    pub omit_signature: Vec<usize>,
    /// `(document index, keyword class)` pairs to leave out.
    pub omit_fields: Vec<(usize, FieldClass)>,
    /// Document indices flagged (and rendered) as handwritten.
    pub handwritten: Vec<usize>,
    /// Maximum per-document capture skew baked into the page.
    pub skew_deg: f64,
    /// Soften strokes with a small median filter.
    pub blur: bool,
    pub split: Split,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            n_docs: 10,
            base_width: 380,
            base_height: 500,
            omit_stamp: Vec::new(),
            omit_signature: Vec::new(),
            omit_fields: Vec::new(),
            handwritten: Vec::new(),
            skew_deg: 0.0,
            blur: false,
            split: Split::Train,
        }
    }
}

fn fill_rect(img: &mut DocumentImage, x0: i64, y0: i64, x1: i64, y1: i64, rgb: [u8; 3]) {
    for y in y0.max(0)..y1.min(img.height() as i64) {
        for x in x0.max(0)..x1.min(img.width() as i64) {
            img.set(x as u32, y as u32, rgb);
        }
    }
}

fn draw_line(img: &mut DocumentImage, x0: f64, y0: f64, x1: f64, y1: f64, rgb: [u8; 3]) {
    let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let x = x0 + (x1 - x0) * t;
        let y = y0 + (y1 - y0) * t;
        fill_rect(img, x as i64, y as i64, x as i64 + 2, y as i64 + 2, rgb);
    }
}

fn draw_ellipse_outline(
    img: &mut DocumentImage,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    rgb: [u8; 3],
) {
    let steps = (4.0 * (rx + ry)) as usize;
    for s in 0..steps {
        let t = s as f64 / steps as f64 * std::f64::consts::TAU;
        let x = cx + rx * t.cos();
        let y = cy + ry * t.sin();
        fill_rect(img, x as i64, y as i64, x as i64 + 2, y as i64 + 2, rgb);
    }
}

/// Seven-segment-ish fake glyphs: which strokes a character gets is a pure
/// function of the character, so pages are reproducible.
fn draw_fake_word(img: &mut DocumentImage, x: f64, y: f64, word: &str, char_h: f64, rgb: [u8; 3]) -> f64 {
    let char_w = char_h * 0.6;
    let mut cursor = x;
    for c in word.chars() {
        let bits = c as u32;
        let (x0, y0, x1, y1) = (cursor, y, cursor + char_w - 2.0, y + char_h);
        if bits & 1 != 0 {
            fill_rect(img, x0 as i64, y0 as i64, x0 as i64 + 2, y1 as i64, rgb);
        }
        if bits & 2 != 0 {
            fill_rect(img, x1 as i64 - 2, y0 as i64, x1 as i64, y1 as i64, rgb);
        }
        if bits & 4 != 0 {
            fill_rect(img, x0 as i64, y0 as i64, x1 as i64, y0 as i64 + 2, rgb);
        }
        if bits & 8 != 0 {
            let mid = ((y0 + y1) / 2.0) as i64;
            fill_rect(img, x0 as i64, mid, x1 as i64, mid + 2, rgb);
        }
        if bits & 16 != 0 {
            fill_rect(img, x0 as i64, y1 as i64 - 2, x1 as i64, y1 as i64, rgb);
        }
        if bits & 32 != 0 {
            draw_line(img, x0, y1, x1, y0, rgb);
        }
        cursor += char_w;
    }
    cursor - x
}

/// Renders a text field and returns its tight annotation box.
fn render_text_field(
    img: &mut DocumentImage,
    x: f64,
    y: f64,
    text: &str,
    char_h: f64,
) -> BBox {
    let char_w = char_h * 0.6;
    let mut cursor = x;
    for word in text.split_whitespace() {
        let advance = draw_fake_word(img, cursor, y, word, char_h, INK);
        cursor += advance + char_w;
    }
    let width = (cursor - char_w - x).max(char_w);
    BBox { x_min: x - 2.0, y_min: y - 2.0, x_max: x + width + 2.0, y_max: y + char_h + 2.0 }
}

const CLIENTS: [&str; 5] = ["ACME SUPPLY CO", "NORTHWIND LTD", "GLOBEX SARL", "INITECH GMBH", "WAYSTAR SA"];
const TITLES: [&str; 2] = ["INVOICE", "RECEIPT"];

struct FieldSpec {
    class: FieldClass,
    text: String,
    /// Fractions of the page for the anchor point.
    anchor: (f64, f64),
}

/// Generates `n_docs` records with exact annotations and the matching plan.
/// Byte-identical output for equal `(seed, options)`.
pub fn synth_fixture(seed: Seed, options: &SynthOptions) -> Result<(Vec<DocumentRecord>, SynthPlan)> {
    let mut records = Vec::with_capacity(options.n_docs);
    let mut plans = Vec::with_capacity(options.n_docs);

    for doc_index in 0..options.n_docs {
        let id = format!("doc-{doc_index:04}");
        let mut rng = seed.stream(&id, 100);
        let handwritten = options.handwritten.contains(&doc_index);

        let width = options.base_width + rng.random_range(0..40);
        let height = options.base_height + rng.random_range(0..48);
        let mut img = DocumentImage::filled(width, height, [252, 251, 248]);

        // faint ruled separators for texture
        for frac in [0.14, 0.62, 0.88] {
            let y = (height as f64 * frac) as i64;
            fill_rect(&mut img, 10, y, width as i64 - 10, y + 1, [210, 210, 210]);
        }

        let date = format!(
            "{:04}-{:02}-{:02}",
            rng.random_range(2019..2026),
            rng.random_range(1..13),
            rng.random_range(1..29)
        );
        let total_value = format!(
            "{},{:03}.{:02}",
            rng.random_range(1..10),
            rng.random_range(0..1000),
            rng.random_range(0..100)
        );
        let fields = [
            FieldSpec {
                class: FieldClass::Title,
                text: TITLES[rng.random_range(0..TITLES.len())].to_string(),
                anchor: (0.12, 0.06),
            },
            FieldSpec {
                class: FieldClass::Client,
                text: CLIENTS[rng.random_range(0..CLIENTS.len())].to_string(),
                anchor: (0.12, 0.18),
            },
            FieldSpec { class: FieldClass::Date, text: date, anchor: (0.58, 0.18) },
            FieldSpec { class: FieldClass::Total, text: "TOTAL".to_string(), anchor: (0.12, 0.66) },
            FieldSpec {
                class: FieldClass::TotalValue,
                text: total_value,
                anchor: (0.55, 0.66),
            },
        ];

        let mut annotations = Vec::new();
        let mut classes = BTreeSet::new();

        for field in &fields {
            if options.omit_fields.iter().any(|&(i, c)| i == doc_index && c == field.class) {
                continue;
            }
            let jitter_x = rng.random_range(-0.02..0.02);
            let jitter_y = rng.random_range(-0.015..0.015);
            let x = width as f64 * (field.anchor.0 + jitter_x);
            let y = height as f64 * (field.anchor.1 + jitter_y);
            let char_h = if field.class == FieldClass::Title { 16.0 } else { 11.0 };
            let bbox = render_text_field(&mut img, x, y, &field.text, char_h);
            annotations.push(Annotation {
                field_class: field.class,
                bbox,
                text: Some(field.text.clone()),
            });
            classes.insert(field.class);
        }

        // body filler lines (annotated by nothing)
        for row in 0..rng.random_range(4..8) {
            let y = height as f64 * (0.30 + 0.045 * row as f64);
            let x = width as f64 * 0.12;
            let len = rng.random_range(4..9);
            let filler: String =
                (0..len).map(|k| char::from(b'a' + ((row * 7 + k * 3) % 26) as u8)).collect();
            draw_fake_word(&mut img, x, y, &filler, 9.0, [120, 120, 120]);
        }

        if !options.omit_stamp.contains(&doc_index) {
            let cx = width as f64 * rng.random_range(0.22..0.32);
            let cy = height as f64 * rng.random_range(0.76..0.82);
            let rx = width as f64 * 0.11;
            let ry = height as f64 * 0.055;
            draw_ellipse_outline(&mut img, cx, cy, rx, ry, STAMP_INK);
            draw_ellipse_outline(&mut img, cx, cy, rx * 0.75, ry * 0.7, STAMP_INK);
            fill_rect(
                &mut img,
                (cx - rx * 0.5) as i64,
                (cy - 1.0) as i64,
                (cx + rx * 0.5) as i64,
                (cy + 1.0) as i64,
                STAMP_INK,
            );
            annotations.push(Annotation {
                field_class: FieldClass::Stamp,
                bbox: BBox {
                    x_min: cx - rx - 3.0,
                    y_min: cy - ry - 3.0,
                    x_max: cx + rx + 3.0,
                    y_max: cy + ry + 3.0,
                },
                text: None,
            });
            classes.insert(FieldClass::Stamp);
        }

        if !options.omit_signature.contains(&doc_index) {
            let x0 = width as f64 * rng.random_range(0.58..0.66);
            let y0 = height as f64 * rng.random_range(0.78..0.82);
            let span = width as f64 * 0.18;
            let mut prev = (x0, y0);
            let mut min_y = y0;
            let mut max_y = y0;
            for s in 1..=8 {
                let next = (
                    x0 + span * s as f64 / 8.0,
                    y0 + rng.random_range(-9.0..9.0),
                );
                draw_line(&mut img, prev.0, prev.1, next.0, next.1, SIGNATURE_INK);
                min_y = min_y.min(next.1);
                max_y = max_y.max(next.1);
                prev = next;
            }
            annotations.push(Annotation {
                field_class: FieldClass::Signature,
                bbox: BBox {
                    x_min: x0 - 3.0,
                    y_min: min_y - 3.0,
                    x_max: x0 + span + 3.0,
                    y_max: max_y + 5.0,
                },
                text: None,
            });
            classes.insert(FieldClass::Signature);
        }

        if handwritten {
            // loose script-like wobble across the body
            let mut prev = (width as f64 * 0.15, height as f64 * 0.45);
            for s in 1..=30 {
                let next = (
                    width as f64 * (0.15 + 0.7 * (s % 10) as f64 / 10.0),
                    height as f64 * 0.45 + rng.random_range(-14.0..14.0) + (s / 10) as f64 * 18.0,
                );
                draw_line(&mut img, prev.0, prev.1, next.0, next.1, SIGNATURE_INK);
                prev = next;
            }
        }

        if options.blur {
            img = median_blur(&img, 3)?;
        }

        if options.skew_deg > 0.0 {
            let angle = rng.random_range(-options.skew_deg..options.skew_deg);
            let boxes: Vec<BBox> = annotations.iter().map(|a| a.bbox).collect();
            let outcome = rotate_with_boxes(
                &img,
                &boxes,
                angle,
                options.skew_deg,
                Interpolation::Bilinear,
                MarginPolicy::Clip,
            )?;
            img = outcome.image;
            for (ann, bbox) in annotations.iter_mut().zip(outcome.boxes) {
                ann.bbox = bbox;
            }
        }

        plans.push(DocPlan { id: id.clone(), classes, handwritten });
        records.push(DocumentRecord { id, image: img, annotations, handwritten });
    }

    Ok((records, SynthPlan { docs: plans }))
}

/// Writes PNG images plus the manifest (`manifest.json`) and plan
/// (`plan.json`) into `dir`.
pub fn write_fixture(
    dir: &Path,
    records: &[DocumentRecord],
    plan: &SynthPlan,
    split: Split,
) -> Result<DatasetManifest> {
    std::fs::create_dir_all(dir.join("images"))?;
    let mut manifest_records = Vec::with_capacity(records.len());
    for record in records {
        let rel = format!("images/{}.png", record.id);
        record.image.save_png(&dir.join(&rel))?;
        manifest_records.push(ManifestRecord {
            id: record.id.clone(),
            image: rel.into(),
            handwritten: record.handwritten,
            annotations: record.annotations.clone(),
        });
    }
    let manifest = DatasetManifest { split, records: manifest_records };
    manifest.save(&dir.join("manifest.json"))?;
    let mut plan_bytes = serde_json::to_vec_pretty(plan)?;
    plan_bytes.push(b'\n');
    std::fs::write(dir.join("plan.json"), plan_bytes)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::class_distribution;

    #[test]
    fn zero_docs_is_empty() {
        let (records, plan) = synth_fixture(Seed(1), &SynthOptions { n_docs: 0, ..SynthOptions::default() }).unwrap();
        assert!(records.is_empty());
        assert!(plan.docs.is_empty());
    }

    #[test]
    fn omissions_follow_the_plan() {
        let options = SynthOptions {
            n_docs: 5,
            omit_stamp: vec![3],
            omit_signature: vec![1],
            omit_fields: vec![(2, FieldClass::Date)],
            handwritten: vec![4],
            ..SynthOptions::default()
        };
        let (records, plan) = synth_fixture(Seed(9), &options).unwrap();
        assert_eq!(records.len(), 5);

        let has = |i: usize, c: FieldClass| {
            records[i].annotations.iter().any(|a| a.field_class == c)
        };
        assert!(!has(3, FieldClass::Stamp));
        assert!(has(0, FieldClass::Stamp));
        assert!(!has(1, FieldClass::Signature));
        assert!(!has(2, FieldClass::Date));
        assert!(records[4].handwritten);
        assert!(plan.docs[4].handwritten);

        // plan agrees with the rendered annotations
        for (record, doc_plan) in records.iter().zip(plan.docs.iter()) {
            let rendered: BTreeSet<FieldClass> =
                record.annotations.iter().map(|a| a.field_class).collect();
            assert_eq!(rendered, doc_plan.classes);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let options = SynthOptions { n_docs: 3, skew_deg: 2.0, blur: true, ..SynthOptions::default() };
        let (a, plan_a) = synth_fixture(Seed(7), &options).unwrap();
        let (b, plan_b) = synth_fixture(Seed(7), &options).unwrap();
        assert_eq!(plan_a, plan_b);
        for (ra, rb) in a.iter().zip(b.iter()) {
            assert_eq!(ra.image, rb.image);
            assert_eq!(ra.annotations, rb.annotations);
        }
        let (c, _) = synth_fixture(Seed(8), &options).unwrap();
        assert_ne!(a[0].image, c[0].image);
    }

    #[test]
    fn annotations_stay_inside_pages() {
        let options = SynthOptions { n_docs: 8, skew_deg: 3.0, ..SynthOptions::default() };
        let (records, _) = synth_fixture(Seed(3), &options).unwrap();
        for record in &records {
            for ann in &record.annotations {
                assert!(
                    ann.bbox.inside(record.image.width(), record.image.height()),
                    "annotation {:?} outside {}x{} in {}",
                    ann.bbox.to_array(),
                    record.image.width(),
                    record.image.height(),
                    record.id
                );
            }
        }
    }

    #[test]
    fn distribution_matches_plan_counts() {
        let options = SynthOptions { n_docs: 10, omit_stamp: vec![2, 5], ..SynthOptions::default() };
        let (records, plan) = synth_fixture(Seed(11), &options).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_fixture(dir.path(), &records, &plan, Split::Train).unwrap();
        let counts = class_distribution(&manifest);
        let planned_stamps =
            plan.docs.iter().filter(|d| d.classes.contains(&FieldClass::Stamp)).count() as u64;
        assert_eq!(counts.get(FieldClass::Stamp), planned_stamps);
        assert_eq!(counts.get(FieldClass::Stamp), 8);
        // loading back validates paths and boxes
        let loaded = DatasetManifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(loaded, manifest);
    }
}
