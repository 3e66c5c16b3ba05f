//! Thin CLI over the library: each subcommand reads and writes the
//! documented JSON formats so stages compose via files.
//!
//! Exit codes: 0 success, 1 document hard-failures present, 2 configuration
//! or usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use validoc::augment::{augment_detection, augment_keyword, Seed};
use validoc::config::{export_training_config, PipelineConfig, TrainingTrack};
use validoc::infer::BackendSpec;
use validoc::labeling::{
    assign_labels, build_sequence_examples, count_label_instances, format_class_counts,
    read_jsonl, write_jsonl, LabeledToken, SequenceExample, DEFAULT_OVERLAP_THRESHOLD,
};
use validoc::manifest::{
    class_distribution, load_record, DatasetManifest, FieldClass, ManifestRecord,
};
use validoc::metrics::{mean_ap, precision_recall_f1, Scene};
use validoc::ocr::sort_reading_order;
use validoc::pipeline::{run_pipeline, write_outputs};
use validoc::synth::{synth_fixture, write_fixture, SynthOptions};
use validoc::validator::explain;
use validoc::{Error, Result};

#[derive(Parser)]
#[command(name = "validoc", version, about = "Invoice validation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Pipeline config file (strict JSON). Omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config file value.
    #[arg(long)]
    seed: Option<u64>,
    /// Backend descriptor (`mock` or `onnx:<path>`) for both backends;
    /// overrides the config file values.
    #[arg(long)]
    backend: Option<String>,
    /// Worker threads; overrides the config file value.
    #[arg(long)]
    jobs: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut config = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.master_seed = seed;
        }
        if let Some(backend) = &self.backend {
            let spec: BackendSpec = backend.parse()?;
            config.layout_backend = spec.clone();
            config.detector_backend = spec;
        }
        if let Some(jobs) = self.jobs {
            config.jobs = Some(jobs);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fixture: images, manifest, and plan.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        n_docs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Document indices rendered without a stamp (repeatable).
        #[arg(long)]
        omit_stamp: Vec<usize>,
        /// Document indices rendered without a signature (repeatable).
        #[arg(long)]
        omit_signature: Vec<usize>,
        /// `<index>:<Class>` pairs to leave out, e.g. `3:Date` (repeatable).
        #[arg(long)]
        omit_field: Vec<String>,
        /// Document indices flagged handwritten (repeatable).
        #[arg(long)]
        handwritten: Vec<usize>,
        /// Maximum per-document capture skew in degrees.
        #[arg(long, default_value_t = 0.0)]
        skew: f64,
        /// Soften strokes with a median filter.
        #[arg(long)]
        blur: bool,
    },
    /// Augment a manifest, writing new images and an augmented manifest.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Augmentation track: `keyword` or `detection`.
        #[arg(long)]
        track: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run OCR over a manifest and write tokens as JSON lines.
    Ocr {
        #[arg(long)]
        manifest: PathBuf,
        /// Output JSONL file: `{"id": ..., "tokens": [...]}` per document.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Align OCR tokens with gold annotations and write sequence examples.
    Label {
        #[arg(long)]
        manifest: PathBuf,
        /// Tokens JSONL produced by `ocr`.
        #[arg(long)]
        tokens: PathBuf,
        /// Output JSONL of sequence examples.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_OVERLAP_THRESHOLD)]
        overlap_threshold: f64,
        #[arg(long, default_value_t = 512)]
        max_sequence_length: usize,
        #[arg(long, default_value_t = 0)]
        stride: usize,
    },
    /// Class statistics of a manifest (and, optionally, labeled examples).
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        /// Sequence-example JSONL to count token labels from.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Token-classification metrics from two label files.
    EvalTokens {
        /// Predicted sequence examples (JSONL).
        #[arg(long)]
        predicted: PathBuf,
        /// Gold sequence examples (JSONL), aligned with the predictions.
        #[arg(long)]
        gold: PathBuf,
        /// Write the report JSON here (table always goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detection metrics from a detections file and a gold manifest.
    EvalDetect {
        /// Detections JSONL: `{"id": ..., "detections": [...]}` per document.
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate every document of a manifest and write reports.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Export the published training hyperparameters for a track.
    ExportTrainConfig {
        /// `layout` or `detection`.
        #[arg(long)]
        track: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_omit_field(s: &str) -> Result<(usize, FieldClass)> {
    let (index, class) = s
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("expected <index>:<Class>, got {s:?}")))?;
    let index = index
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad document index in {s:?}")))?;
    Ok((index, FieldClass::from_annotation_str(class)?))
}

fn write_json_pretty<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

#[derive(serde::Serialize, serde::Deserialize)]
struct TokensLine {
    id: String,
    tokens: Vec<validoc::ocr::OcrToken>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct DetectionsLine {
    id: String,
    detections: Vec<validoc::infer::Detection>,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Synth {
            out,
            n_docs,
            seed,
            omit_stamp,
            omit_signature,
            omit_field,
            handwritten,
            skew,
            blur,
        } => {
            let omit_fields =
                omit_field.iter().map(|s| parse_omit_field(s)).collect::<Result<Vec<_>>>()?;
            let options = SynthOptions {
                n_docs,
                omit_stamp,
                omit_signature,
                omit_fields,
                handwritten,
                skew_deg: skew,
                blur,
                ..SynthOptions::default()
            };
            let (records, plan) = synth_fixture(Seed(seed), &options)?;
            write_fixture(&out, &records, &plan, options.split)?;
            println!("wrote {} documents under {}", records.len(), out.display());
            Ok(false)
        }

        Command::Augment { manifest, out, track, config } => {
            let config = config.resolve()?;
            let loaded = DatasetManifest::load(&manifest)?;
            let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
            let seed = Seed(config.master_seed);
            std::fs::create_dir_all(out.join("images"))?;
            let mut out_records = Vec::new();
            let mut skipped = 0usize;
            for rec in &loaded.records {
                let record = load_record(dir, rec)?;
                if record.handwritten {
                    skipped += 1;
                    continue;
                }
                let augmented = match track.as_str() {
                    "keyword" => augment_keyword(&record, &config.keyword_augment, &seed)?,
                    "detection" => augment_detection(&record, &config.detection_augment, &seed)?,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown track {other:?}; expected \"keyword\" or \"detection\""
                        )))
                    }
                };
                let rel = format!("images/{}.png", record.id);
                augmented.record.image.save_png(&out.join(&rel))?;
                out_records.push(ManifestRecord {
                    id: augmented.record.id,
                    image: rel.into(),
                    handwritten: false,
                    annotations: augmented.record.annotations,
                });
            }
            let augmented_manifest = DatasetManifest { split: loaded.split, records: out_records };
            augmented_manifest.save(&out.join("manifest.json"))?;
            println!(
                "augmented {} documents ({skipped} handwritten skipped) into {}",
                augmented_manifest.records.len(),
                out.display()
            );
            Ok(false)
        }

        Command::Ocr { manifest, out, config } => {
            let config = config.resolve()?;
            let loaded = DatasetManifest::load(&manifest)?;
            let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
            let engine = validoc::pipeline::resolve_ocr_engine(&config)?;
            let mut file = std::io::BufWriter::new(std::fs::File::create(&out)?);
            let mut documents = 0usize;
            for rec in &loaded.records {
                let record = load_record(dir, rec)?;
                let tokens = sort_reading_order(engine.analyze(&record)?);
                serde_json::to_writer(
                    &mut file,
                    &TokensLine { id: record.id.clone(), tokens },
                )?;
                std::io::Write::write_all(&mut file, b"\n")?;
                documents += 1;
            }
            println!("wrote tokens for {documents} documents to {}", out.display());
            Ok(false)
        }

        Command::Label { manifest, tokens, out, overlap_threshold, max_sequence_length, stride } => {
            let loaded = DatasetManifest::load(&manifest)?;
            let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
            let token_lines: Vec<TokensLine> = std::fs::read_to_string(&tokens)?
                .lines()
                .filter(|l| !l.is_empty())
                .map(|l| serde_json::from_str(l).map_err(Error::from))
                .collect::<Result<_>>()?;
            let mut examples: Vec<SequenceExample> = Vec::new();
            let mut counts_docs: Vec<Vec<LabeledToken>> = Vec::new();
            for rec in &loaded.records {
                let Some(line) = token_lines.iter().find(|t| t.id == rec.id) else {
                    continue;
                };
                if line.tokens.is_empty() {
                    continue;
                }
                let record = load_record(dir, rec)?;
                let ordered = sort_reading_order(line.tokens.clone());
                let labeled = assign_labels(&ordered, &record.annotations, overlap_threshold);
                examples.extend(build_sequence_examples(
                    &rec.id,
                    &labeled,
                    record.image.width(),
                    record.image.height(),
                    max_sequence_length,
                    stride,
                )?);
                counts_docs.push(labeled);
            }
            let file = std::fs::File::create(&out)?;
            write_jsonl(&examples, std::io::BufWriter::new(file))?;
            let counts = count_label_instances(counts_docs.iter().map(|d| d.as_slice()));
            print!("{}", format_class_counts("Labeled tokens", &counts));
            println!("wrote {} windows to {}", examples.len(), out.display());
            Ok(false)
        }

        Command::Stats { manifest, labels } => {
            let loaded = DatasetManifest::load(&manifest)?;
            let distribution = class_distribution(&loaded);
            println!("documents: {}", loaded.records.len());
            println!("annotations: {}", distribution.total());
            for (class, count) in distribution.iter() {
                if class != FieldClass::Other {
                    println!("  {:<12} {count}", class.as_str());
                }
            }
            if let Some(labels) = labels {
                let examples = read_jsonl(&std::fs::read(&labels)?)?;
                let mut counts = validoc::manifest::ClassCounts::default();
                for example in &examples {
                    for &label in &example.labels {
                        counts.add(label, 1);
                    }
                }
                println!();
                print!("{}", format_class_counts("Token labels", &counts));
            }
            Ok(false)
        }

        Command::EvalTokens { predicted, gold, out } => {
            let predicted = read_jsonl(&std::fs::read(&predicted)?)?;
            let gold = read_jsonl(&std::fs::read(&gold)?)?;
            let flat = |examples: &[SequenceExample]| -> Vec<FieldClass> {
                examples.iter().flat_map(|e| e.labels.iter().copied()).collect()
            };
            let report = precision_recall_f1(&flat(&predicted), &flat(&gold))?;
            print!("{}", report.render_table());
            if let Some(out) = out {
                write_json_pretty(&report, &out)?;
            }
            Ok(false)
        }

        Command::EvalDetect { detections, manifest, out } => {
            let loaded = DatasetManifest::load(&manifest)?;
            let lines: Vec<DetectionsLine> = std::fs::read_to_string(&detections)?
                .lines()
                .filter(|l| !l.is_empty())
                .map(|l| serde_json::from_str(l).map_err(Error::from))
                .collect::<Result<_>>()?;
            let scenes: Vec<Scene> = loaded
                .records
                .iter()
                .map(|rec| Scene {
                    id: rec.id.clone(),
                    detections: lines
                        .iter()
                        .find(|l| l.id == rec.id)
                        .map(|l| l.detections.clone())
                        .unwrap_or_default(),
                    golds: rec
                        .annotations
                        .iter()
                        .filter_map(|a| {
                            validoc::infer::ObjectClass::from_field_class(a.field_class)
                                .map(|c| (c, a.bbox))
                        })
                        .collect(),
                })
                .collect();
            let report = mean_ap(&scenes);
            print!("{}", report.render_table());
            if let Some(out) = out {
                write_json_pretty(&report, &out)?;
            }
            Ok(false)
        }

        Command::Validate { manifest, out, config } => {
            let config = config.resolve()?;
            let loaded = DatasetManifest::load(&manifest)?;
            let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
            let outcome = run_pipeline(&config, &loaded, dir)?;
            std::fs::create_dir_all(&out)?;
            write_outputs(&outcome, &out)?;
            for report in &outcome.reports {
                for line in explain(report) {
                    println!("{line}");
                }
            }
            println!(
                "valid {} / invalid {} / unsupported {} / failed {}",
                outcome.summary.valid,
                outcome.summary.invalid,
                outcome.summary.unsupported,
                outcome.summary.failed
            );
            Ok(outcome.has_failures())
        }

        Command::ExportTrainConfig { track, out } => {
            let track: TrainingTrack = track.parse()?;
            let export = export_training_config(track);
            match out {
                Some(path) => write_json_pretty(&export, &path)?,
                None => println!("{}", serde_json::to_string_pretty(&export)?),
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
