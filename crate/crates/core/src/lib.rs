//! Invoice validation pipeline.
//!
//! `validoc` ingests invoice images with box annotations, runs a two-track
//! pipeline — OCR token labeling for keyword fields, object detection for
//! stamps and signatures — and emits a multi-criteria validity verdict per
//! document: a machine-written invoice is `Valid` only when a stamp, a
//! signature, and the required keyword fields are all present. Handwritten
//! documents are routed to `Unsupported`.
//!
//! The crate is a library first. Each major capability has a runnable
//! example:
//!
//! | Example | Shows |
//! |---------|-------|
//! | `synth_dataset` | generating a self-describing synthetic invoice corpus |
//! | `augment_tracks` | the keyword- and detection-track augmentation pipelines |
//! | `ocr_formats` | parsing local TSV and cloud JSON OCR dumps, reading order, text metrics |
//! | `label_tokens` | aligning OCR tokens with annotations and class-count statistics |
//! | `detect_objects` | mock detector output, score filtering, and NMS |
//! | `evaluate_metrics` | token P/R/F1 and COCO-style mAP evaluation |
//! | `loss_functions` | the detection/classification loss kernels and their gradients |
//! | `validate_invoices` | the full pipeline from manifest to verdicts |
//!
//! Run one with `cargo run -p validoc --example <name>`. The same stages are
//! exposed as subcommands of the thin `validoc` binary (`synth`, `augment`,
//! `ocr`, `label`, `stats`, `eval-tokens`, `eval-detect`, `validate`,
//! `export-train-config`) so stages compose via files.

pub mod augment;
pub mod config;
pub mod error;
pub mod geometry;
pub mod infer;
pub mod labeling;
pub mod losses;
pub mod manifest;
pub mod metrics;
pub mod ocr;
pub mod pipeline;
pub mod raster;
pub mod synth;
pub mod validator;

pub use error::{Error, Result};
pub use geometry::{bbox_iou, BBox};
pub use manifest::{
    class_distribution, load_record, parse_manifest, serialize_manifest, Annotation, ClassCounts,
    DatasetManifest, DocumentRecord, FieldClass, ManifestRecord, Split,
};
pub use raster::DocumentImage;
