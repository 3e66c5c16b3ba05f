//! Pipeline configuration and the training-recipe export.
//!
//! The config file is strict JSON: unknown keys are rejected, every omitted
//! key takes its documented default, and the SHA-256 fingerprint of the
//! canonical serialization is stamped into every report a run produces.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{DetectionAugConfig, KeywordAugConfig};
use crate::error::{Error, Result};
use crate::infer::{BackendSpec, DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESHOLD};
use crate::ocr::RecordedFormat;
use crate::validator::ValidationCriteria;

/// OCR source selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OcrEngineConfig {
    /// Tokens derived from fixture annotations; no files or models needed.
    Mock,
    /// Recorded engine responses replayed from a directory.
    Recorded { dir: std::path::PathBuf, format: RecordedFormat },
    /// Live cloud client (requires the `live-ocr` feature and the
    /// `OCR_ENDPOINT` / `OCR_KEY` environment variables).
    AzureLive {
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
}

fn default_in_flight() -> usize {
    4
}

impl Default for OcrEngineConfig {
    fn default() -> Self {
        OcrEngineConfig::Mock
    }
}

fn default_score_threshold() -> f64 {
    DEFAULT_SCORE_THRESHOLD
}

fn default_nms_iou() -> f64 {
    DEFAULT_NMS_IOU
}

fn default_max_sequence_length() -> usize {
    512
}

fn default_backend() -> BackendSpec {
    BackendSpec::Mock
}

/// Everything a pipeline run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub keyword_augment: KeywordAugConfig,
    pub detection_augment: DetectionAugConfig,
    pub ocr: OcrEngineConfig,
    pub layout_backend: BackendSpec,
    pub detector_backend: BackendSpec,
    /// Detections below this score are dropped before NMS.
    pub score_threshold: f64,
    /// IoU threshold of the per-class greedy NMS.
    pub nms_iou: f64,
    pub criteria: ValidationCriteria,
    pub master_seed: u64,
    pub max_sequence_length: usize,
    pub window_stride: usize,
    /// Worker threads; `None` means available parallelism.
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            keyword_augment: KeywordAugConfig::default(),
            detection_augment: DetectionAugConfig::default(),
            ocr: OcrEngineConfig::default(),
            layout_backend: default_backend(),
            detector_backend: default_backend(),
            score_threshold: default_score_threshold(),
            nms_iou: default_nms_iou(),
            criteria: ValidationCriteria::default(),
            master_seed: 0,
            max_sequence_length: default_max_sequence_length(),
            window_stride: 0,
            jobs: None,
        }
    }
}

impl PipelineConfig {
    /// Parses a strict config file.
    pub fn parse(bytes: &[u8]) -> Result<PipelineConfig> {
        let config: PipelineConfig =
            serde_json::from_slice(bytes).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&std::fs::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.keyword_augment.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.detection_augment.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.criteria.validate()?;
        for (name, t) in [("score_threshold", self.score_threshold), ("nms_iou", self.nms_iou)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("{name} {t} outside [0, 1]")));
            }
        }
        if self.max_sequence_length == 0 {
            return Err(Error::Config("max_sequence_length must be positive".to_string()));
        }
        if self.window_stride >= self.max_sequence_length {
            return Err(Error::Config(
                "window_stride must be smaller than max_sequence_length".to_string(),
            ));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON serialization. `jobs` is execution
    /// concurrency, not semantics, and is excluded: a run must fingerprint
    /// identically at any worker count.
    pub fn fingerprint(&self) -> String {
        let semantic = PipelineConfig { jobs: None, ..self.clone() };
        let canonical =
            serde_json::to_vec(&semantic).expect("config serialization is infallible");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Training track selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingTrack {
    Layout,
    Detection,
}

impl std::str::FromStr for TrainingTrack {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layout" => Ok(TrainingTrack::Layout),
            "detection" => Ok(TrainingTrack::Detection),
            other => Err(Error::Config(format!(
                "unknown training track {other:?}; expected \"layout\" or \"detection\""
            ))),
        }
    }
}

/// Hyperparameters of the two training recipes, exported for external
/// harnesses. This artifact performs no training itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfigExport {
    pub track: TrainingTrack,
    pub epochs: u32,
    pub batch_size: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    pub weight_decay: f64,
    pub learning_rate: f64,
}

/// The published settings per track.
pub fn export_training_config(track: TrainingTrack) -> TrainingConfigExport {
    match track {
        TrainingTrack::Layout => TrainingConfigExport {
            track,
            epochs: 50,
            batch_size: 4,
            optimizer: Some("adam".to_string()),
            momentum: None,
            weight_decay: 1e-3,
            learning_rate: 5e-5,
        },
        TrainingTrack::Detection => TrainingConfigExport {
            track,
            epochs: 50,
            batch_size: 8,
            optimizer: None,
            momentum: Some(0.9),
            weight_decay: 5e-4,
            learning_rate: 1e-3,
        },
    }
}
