//! Dataset manifest: the on-disk contract for bringing your own invoices.
//!
//! A manifest is a single self-contained JSON file per split with relative
//! image paths:
//!
//! ```json
//! {
//!   "split": "train",
//!   "records": [
//!     {
//!       "id": "doc-0001",
//!       "image": "images/doc-0001.png",
//!       "handwritten": false,
//!       "annotations": [
//!         {"class": "Stamp", "box": [10.0, 10.0, 50.0, 50.0], "text": null}
//!       ]
//!     }
//!   ]
//! }
//! ```
//!
//! Field names are bit-exact; unknown keys are rejected. Annotation classes
//! are the seven box classes — the background label `O` never appears in
//! annotation files, only in token-labeling output.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::raster::DocumentImage;

/// Token/annotation classes. `Other` is the background label for tokens
/// matching no annotated field.
///
/// The declaration order fixes the class index used for score vectors and
/// argmax tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FieldClass {
    Title,
    Client,
    Stamp,
    Signature,
    Date,
    Total,
    TotalValue,
    #[serde(rename = "O")]
    Other,
}

impl FieldClass {
    /// All classes, in index order. Score vectors have this length.
    pub const ALL: [FieldClass; 8] = [
        FieldClass::Title,
        FieldClass::Client,
        FieldClass::Stamp,
        FieldClass::Signature,
        FieldClass::Date,
        FieldClass::Total,
        FieldClass::TotalValue,
        FieldClass::Other,
    ];

    /// The seven classes allowed in annotation files.
    pub const ANNOTATION: [FieldClass; 7] = [
        FieldClass::Title,
        FieldClass::Client,
        FieldClass::Stamp,
        FieldClass::Signature,
        FieldClass::Date,
        FieldClass::Total,
        FieldClass::TotalValue,
    ];

    /// The five keyword field classes (everything except the two detector
    /// object classes and the background label).
    pub const KEYWORD_FIELDS: [FieldClass; 5] = [
        FieldClass::Title,
        FieldClass::Client,
        FieldClass::Date,
        FieldClass::Total,
        FieldClass::TotalValue,
    ];

    pub fn index(self) -> usize {
        FieldClass::ALL.iter().position(|&c| c == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<FieldClass> {
        FieldClass::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FieldClass::Title => "Title",
            FieldClass::Client => "Client",
            FieldClass::Stamp => "Stamp",
            FieldClass::Signature => "Signature",
            FieldClass::Date => "Date",
            FieldClass::Total => "Total",
            FieldClass::TotalValue => "TotalValue",
            FieldClass::Other => "O",
        }
    }

    /// Parses an annotation class string. `O`/`Other` is rejected here: it is
    /// not an annotation class.
    pub fn from_annotation_str(s: &str) -> Result<FieldClass> {
        FieldClass::ANNOTATION
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownClass(s.to_string()))
    }
}

impl fmt::Display for FieldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One annotated region of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub field_class: FieldClass,
    pub bbox: BBox,
    /// Ground-truth transcription, when annotated. Always `None` for stamps
    /// and signatures.
    pub text: Option<String>,
}

/// Split the manifest belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// One record descriptor inside a manifest: image path plus inline
/// annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRecord {
    pub id: String,
    pub image: PathBuf,
    pub handwritten: bool,
    pub annotations: Vec<Annotation>,
}

/// A parsed, validated manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub split: Split,
    pub records: Vec<ManifestRecord>,
}

/// A fully loaded document: the unit of pipeline work.
#[derive(Debug, Clone)]
pub struct DocumentRecord {
    pub id: String,
    pub image: DocumentImage,
    pub annotations: Vec<Annotation>,
    pub handwritten: bool,
}

// Wire structs mirror the JSON schema exactly.
mod wire {
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Manifest {
        pub split: super::Split,
        pub records: Vec<Record>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Record {
        pub id: String,
        pub image: String,
        pub handwritten: bool,
        pub annotations: Vec<Annotation>,
    }

    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Annotation {
        pub class: String,
        #[serde(rename = "box")]
        pub bbox: [f64; 4],
        pub text: Option<String>,
    }
}

/// Parses and validates a manifest document.
///
/// Schema violations report the line/column of the first offending token;
/// invariant violations report the record/annotation path.
pub fn parse_manifest(bytes: &[u8]) -> Result<DatasetManifest> {
    let wire: wire::Manifest = serde_json::from_slice(bytes).map_err(|e| {
        Error::MalformedManifest {
            path: format!("line {} column {}", e.line(), e.column()),
            reason: e.to_string(),
        }
    })?;

    let mut seen_ids = HashSet::new();
    let mut records = Vec::with_capacity(wire.records.len());
    for (ri, rec) in wire.records.into_iter().enumerate() {
        if rec.id.is_empty() {
            return Err(Error::MalformedManifest {
                path: format!("records[{ri}].id"),
                reason: "empty id".to_string(),
            });
        }
        if !seen_ids.insert(rec.id.clone()) {
            return Err(Error::MalformedManifest {
                path: format!("records[{ri}].id"),
                reason: format!("duplicate id {:?}", rec.id),
            });
        }
        let mut annotations = Vec::with_capacity(rec.annotations.len());
        for (ai, ann) in rec.annotations.into_iter().enumerate() {
            let field_class = FieldClass::from_annotation_str(&ann.class)?;
            let [x0, y0, x1, y1] = ann.bbox;
            let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| match e {
                Error::BoxOutOfBounds { reason, .. } => Error::BoxOutOfBounds {
                    context: format!("records[{ri}].annotations[{ai}]"),
                    reason,
                },
                other => other,
            })?;
            annotations.push(Annotation { field_class, bbox, text: ann.text });
        }
        records.push(ManifestRecord {
            id: rec.id,
            image: PathBuf::from(rec.image),
            handwritten: rec.handwritten,
            annotations,
        });
    }
    Ok(DatasetManifest { split: wire.split, records })
}

/// Serializes a manifest back to its JSON form. Round-trips through
/// [`parse_manifest`] losslessly.
pub fn serialize_manifest(manifest: &DatasetManifest) -> Vec<u8> {
    let wire = wire::Manifest {
        split: manifest.split,
        records: manifest
            .records
            .iter()
            .map(|r| wire::Record {
                id: r.id.clone(),
                image: r.image.to_string_lossy().into_owned(),
                handwritten: r.handwritten,
                annotations: r
                    .annotations
                    .iter()
                    .map(|a| wire::Annotation {
                        class: a.field_class.as_str().to_string(),
                        bbox: a.bbox.to_array(),
                        text: a.text.clone(),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&wire).expect("manifest serialization is infallible");
    out.push(b'\n');
    out
}

impl DatasetManifest {
    /// Reads a manifest file and verifies every referenced image path
    /// resolves relative to the manifest's directory.
    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let bytes = std::fs::read(path)?;
        let manifest = parse_manifest(&bytes)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        for rec in &manifest.records {
            let img = dir.join(&rec.image);
            if !img.is_file() {
                return Err(Error::MalformedManifest {
                    path: format!("record {:?}", rec.id),
                    reason: format!("image path {:?} does not resolve", img),
                });
            }
        }
        Ok(manifest)
    }

    /// Writes the manifest next to its images.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serialize_manifest(self))?;
        Ok(())
    }
}

/// Decodes a record's image and checks every annotation box against the
/// image bounds.
pub fn load_record(manifest_dir: &Path, record: &ManifestRecord) -> Result<DocumentRecord> {
    let image = DocumentImage::open(&manifest_dir.join(&record.image))?;
    for (ai, ann) in record.annotations.iter().enumerate() {
        if !ann.bbox.inside(image.width(), image.height()) {
            return Err(Error::BoxOutOfBounds {
                context: format!("record {:?} annotations[{ai}]", record.id),
                reason: format!(
                    "box {:?} exceeds image bounds {}x{}",
                    ann.bbox.to_array(),
                    image.width(),
                    image.height()
                ),
            });
        }
    }
    Ok(DocumentRecord {
        id: record.id.clone(),
        image,
        annotations: record.annotations.clone(),
        handwritten: record.handwritten,
    })
}

/// Per-class counters over all eight classes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    counts: [u64; 8],
}

impl ClassCounts {
    pub fn get(&self, class: FieldClass) -> u64 {
        self.counts[class.index()]
    }

    pub fn add(&mut self, class: FieldClass, n: u64) {
        self.counts[class.index()] += n;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn merge(&mut self, other: &ClassCounts) {
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }

    /// `(class, count)` pairs in class-index order.
    pub fn iter(&self) -> impl Iterator<Item = (FieldClass, u64)> + '_ {
        FieldClass::ALL.iter().map(|&c| (c, self.get(c)))
    }
}

/// Exact per-class annotation counts of a manifest.
pub fn class_distribution(manifest: &DatasetManifest) -> ClassCounts {
    let mut counts = ClassCounts::default();
    for rec in &manifest.records {
        for ann in &rec.annotations {
            counts.add(ann.field_class, 1);
        }
    }
    counts
}
