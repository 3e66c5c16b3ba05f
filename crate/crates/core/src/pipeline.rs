//! The end-to-end inference pipeline: OCR, reading order, token
//! classification, object detection with post-processing, and the validity
//! verdict — per document, with per-document failures isolated.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{OcrEngineConfig, PipelineConfig};
use crate::error::{Error, Result};
use crate::infer::{
    classify_tokens, filter_detections, nms, BackendSpec, DetectorBackend, LayoutBackend,
    MockDetectorBackend, MockLayoutBackend,
};
use crate::labeling::{build_sequence_examples, LabeledToken};
use crate::manifest::{load_record, DatasetManifest, DocumentRecord, FieldClass};
use crate::ocr::{sort_reading_order, MockOcrEngine, OcrEngine, RecordedEngine};
use crate::validator::{validate, ClassifiedToken, ValidationReport, Verdict};

/// Wall-clock stage totals and run provenance. Timings vary run to run;
/// everything else is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_fingerprint: String,
    pub master_seed: u64,
    pub documents: usize,
    pub stage_millis: BTreeMap<String, u64>,
    /// `(document id, error)` pairs for isolated per-document failures.
    pub failures: Vec<(String, String)>,
}

/// Deterministic roll-up over all reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub config_fingerprint: String,
    pub total: usize,
    pub valid: usize,
    pub invalid: usize,
    pub unsupported: usize,
    pub failed: usize,
    /// Failed-criterion counts across invalid documents.
    pub criterion_failures: BTreeMap<String, u64>,
}

/// Everything one run produces.
#[derive(Debug)]
pub struct PipelineOutcome {
    /// Reports sorted by document id.
    pub reports: Vec<ValidationReport>,
    pub summary: Summary,
    pub run: RunManifest,
}

impl PipelineOutcome {
    pub fn has_failures(&self) -> bool {
        !self.run.failures.is_empty()
    }
}

struct Backends {
    ocr: Box<dyn OcrEngine>,
    layout: Box<dyn LayoutBackend>,
    detector: Box<dyn DetectorBackend>,
}

/// Resolves the configured OCR source.
pub fn resolve_ocr_engine(config: &PipelineConfig) -> Result<Box<dyn OcrEngine>> {
    match &config.ocr {
        OcrEngineConfig::Mock => Ok(Box::new(MockOcrEngine)),
        OcrEngineConfig::Recorded { dir, format } => {
            if !dir.is_dir() {
                return Err(Error::Config(format!(
                    "recorded OCR directory {:?} does not exist",
                    dir
                )));
            }
            Ok(Box::new(RecordedEngine::new(dir.clone(), *format)))
        }
        OcrEngineConfig::AzureLive { max_in_flight } => {
            #[cfg(feature = "live-ocr")]
            {
                Ok(Box::new(crate::ocr::AzureLiveEngine::from_env(*max_in_flight)?))
            }
            #[cfg(not(feature = "live-ocr"))]
            {
                let _ = max_in_flight;
                Err(Error::Config(
                    "the azure-live engine requires building with the `live-ocr` feature"
                        .to_string(),
                ))
            }
        }
    }
}

/// Fail-fast backend resolution: every descriptor must resolve before any
/// document runs.
fn resolve_backends(config: &PipelineConfig, manifest: &DatasetManifest) -> Result<Backends> {
    let ocr = resolve_ocr_engine(config)?;
    let layout: Box<dyn LayoutBackend> = match &config.layout_backend {
        BackendSpec::Mock => Box::new(MockLayoutBackend::from_manifest(manifest)),
        BackendSpec::Onnx(path) => return Err(BackendSpec::onnx_unavailable(path)),
    };
    let detector: Box<dyn DetectorBackend> = match &config.detector_backend {
        BackendSpec::Mock => Box::new(MockDetectorBackend::from_manifest(manifest)),
        BackendSpec::Onnx(path) => return Err(BackendSpec::onnx_unavailable(path)),
    };
    Ok(Backends { ocr, layout, detector })
}

#[derive(Default, Clone, Copy)]
struct StageTimes {
    load: u64,
    ocr: u64,
    classify: u64,
    detect: u64,
    validate: u64,
}

fn process_document(
    record: &DocumentRecord,
    config: &PipelineConfig,
    backends: &Backends,
    fingerprint: &str,
) -> Result<(ValidationReport, StageTimes)> {
    let mut times = StageTimes::default();

    if record.handwritten {
        let started = Instant::now();
        let report = validate(&record.id, &[], &[], true, &config.criteria, fingerprint);
        times.validate = started.elapsed().as_millis() as u64;
        return Ok((report, times));
    }

    let started = Instant::now();
    let tokens = sort_reading_order(backends.ocr.analyze(record)?);
    times.ocr = started.elapsed().as_millis() as u64;

    let started = Instant::now();
    let classified: Vec<ClassifiedToken> = if tokens.is_empty() {
        Vec::new()
    } else {
        // inference-time windows carry placeholder labels
        let unlabeled: Vec<LabeledToken> = tokens
            .iter()
            .map(|t| LabeledToken {
                token: t.clone(),
                label: FieldClass::Other,
                source_annotation: None,
            })
            .collect();
        let windows = build_sequence_examples(
            &record.id,
            &unlabeled,
            record.image.width(),
            record.image.height(),
            config.max_sequence_length,
            config.window_stride,
        )?;
        let mut classified = Vec::with_capacity(tokens.len());
        let mut window_start = 0usize;
        for (wi, window) in windows.iter().enumerate() {
            let predictions = classify_tokens(backends.layout.as_ref(), window, &record.image)?;
            // with a positive stride every window after the first repeats the
            // previous window's trailing tokens; the earlier prediction wins
            let skip = if wi == 0 { 0 } else { config.window_stride };
            for (offset, prediction) in predictions.into_iter().enumerate().skip(skip) {
                classified.push(ClassifiedToken {
                    token: tokens[window_start + offset].clone(),
                    label: prediction.label,
                    confidence: prediction.confidence,
                });
            }
            if wi + 1 < windows.len() {
                // non-final windows are always full, so this cannot underflow
                window_start += window.tokens.len() - config.window_stride;
            }
        }
        classified
    };
    times.classify = started.elapsed().as_millis() as u64;

    let started = Instant::now();
    let raw = backends.detector.predict(&record.id, &record.image)?;
    let detections = nms(
        filter_detections(raw, config.score_threshold),
        config.nms_iou,
    );
    times.detect = started.elapsed().as_millis() as u64;

    let started = Instant::now();
    let report = validate(
        &record.id,
        &classified,
        &detections,
        false,
        &config.criteria,
        fingerprint,
    );
    times.validate = started.elapsed().as_millis() as u64;
    Ok((report, times))
}

/// Runs the full pipeline over a manifest. Per-document failures are
/// isolated into the run manifest; only configuration problems abort the
/// run.
pub fn run_pipeline(
    config: &PipelineConfig,
    manifest: &DatasetManifest,
    manifest_dir: &Path,
) -> Result<PipelineOutcome> {
    config.validate()?;
    let fingerprint = config.fingerprint();
    let backends = resolve_backends(config, manifest)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.unwrap_or(0)) // 0 = available parallelism
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    type DocResult = (String, Result<(ValidationReport, StageTimes)>, u64);
    let results: Vec<DocResult> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|rec| {
                let started = Instant::now();
                let loaded = load_record(manifest_dir, rec);
                let load_ms = started.elapsed().as_millis() as u64;
                match loaded {
                    Ok(record) => (
                        rec.id.clone(),
                        process_document(&record, config, &backends, &fingerprint),
                        load_ms,
                    ),
                    Err(e) => (rec.id.clone(), Err(e), load_ms),
                }
            })
            .collect()
    });

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut totals = StageTimes::default();
    for (id, outcome, load_ms) in results {
        totals.load += load_ms;
        match outcome {
            Ok((report, times)) => {
                totals.ocr += times.ocr;
                totals.classify += times.classify;
                totals.detect += times.detect;
                totals.validate += times.validate;
                reports.push(report);
            }
            Err(e) => failures.push((id, e.to_string())),
        }
    }
    reports.sort_by(|a, b| a.document_id.cmp(&b.document_id));
    failures.sort();

    let mut criterion_failures: BTreeMap<String, u64> = BTreeMap::new();
    for report in &reports {
        for criterion in report.criteria.iter().filter(|c| !c.satisfied) {
            *criterion_failures.entry(criterion.name.clone()).or_default() += 1;
        }
    }
    let count = |v: Verdict| reports.iter().filter(|r| r.verdict == v).count();
    let summary = Summary {
        schema_version: crate::validator::REPORT_SCHEMA_VERSION,
        config_fingerprint: fingerprint.clone(),
        total: manifest.records.len(),
        valid: count(Verdict::Valid),
        invalid: count(Verdict::Invalid),
        unsupported: count(Verdict::Unsupported),
        failed: failures.len(),
        criterion_failures,
    };

    let stage_millis: BTreeMap<String, u64> = [
        ("load".to_string(), totals.load),
        ("ocr".to_string(), totals.ocr),
        ("classify".to_string(), totals.classify),
        ("detect".to_string(), totals.detect),
        ("validate".to_string(), totals.validate),
    ]
    .into_iter()
    .collect();

    Ok(PipelineOutcome {
        reports,
        summary,
        run: RunManifest {
            schema_version: crate::validator::REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_fingerprint: fingerprint,
            master_seed: config.master_seed,
            documents: manifest.records.len(),
            stage_millis,
            failures,
        },
    })
}

/// Writes `reports/<doc-id>.json`, `summary.json`, and `run.json` under
/// `out_dir`. Report and summary bytes are deterministic for a fixed
/// `(config, seed, inputs)` triple; `run.json` carries timings and is not.
pub fn write_outputs(outcome: &PipelineOutcome, out_dir: &Path) -> Result<()> {
    let reports_dir = out_dir.join("reports");
    std::fs::create_dir_all(&reports_dir)?;
    for report in &outcome.reports {
        let mut bytes = serde_json::to_vec_pretty(report)?;
        bytes.push(b'\n');
        std::fs::write(reports_dir.join(format!("{}.json", report.document_id)), bytes)?;
    }
    let mut summary = serde_json::to_vec_pretty(&outcome.summary)?;
    summary.push(b'\n');
    std::fs::write(out_dir.join("summary.json"), summary)?;
    let mut run = serde_json::to_vec_pretty(&outcome.run)?;
    run.push(b'\n');
    std::fs::write(out_dir.join("run.json"), run)?;
    Ok(())
}
