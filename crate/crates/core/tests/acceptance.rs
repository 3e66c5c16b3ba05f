//! Acceptance suite: one test per release criterion, each printing a
//! PASS line on success (run with `--nocapture` to see them).
//!
//! Every expected value here is either trivially forced, verified against an
//! independent oracle implemented in this file, or a published number.

use std::collections::HashMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use validoc::augment::{
    augment_detection, augment_keyword, DetectionAugConfig, KeywordAugConfig, Seed,
};
use validoc::config::PipelineConfig;
use validoc::geometry::{bbox_iou, BBox};
use validoc::infer::{Detection, ObjectClass};
use validoc::labeling::format_class_counts;
use validoc::losses::{cross_entropy, focal_loss, smooth_l1, FocalParams, LossValue};
use validoc::manifest::{ClassCounts, FieldClass, Split};
use validoc::metrics::{f1_score, mean_ap, Scene, COCO_IOU_THRESHOLDS};
use validoc::ocr::{
    levenshtein, parse_cloud_read_response, parse_local_engine_output, OcrToken,
};
use validoc::pipeline::{run_pipeline, write_outputs};
use validoc::synth::{synth_fixture, write_fixture, SynthOptions};
use validoc::validator::{validate, ClassifiedToken, ValidationCriteria, Verdict};

fn data(name: &str) -> Vec<u8> {
    std::fs::read(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

// ---------------------------------------------------------------------------
// 1. Table V F1 consistency
// ---------------------------------------------------------------------------

/// The published precision/recall pairs are themselves rounded to two
/// decimals, so consistency holds when the F1 interval induced by the input
/// rounding (+-0.005 per input) intersects the rounding interval of the
/// published F1. f1_score is monotone in both arguments, so the interval
/// endpoints are the corner evaluations.
fn f1_consistent(p2: f64, r2: f64, f1_reported: f64) -> bool {
    let lo = f1_score(p2 - 0.005, r2 - 0.005);
    let hi = f1_score(p2 + 0.005, r2 + 0.005);
    lo <= f1_reported + 0.005 && f1_reported - 0.005 <= hi
}

#[test]
fn criterion_1_table_v_f1_consistency() {
    for (precision, recall, f1_reported) in [(0.87, 0.77, 0.81), (0.68, 0.48, 0.56)] {
        let f1 = f1_score(precision, recall);
        assert!(
            f1_consistent(precision, recall, f1_reported),
            "F1({precision}, {recall}) = {f1} is not consistent with reported {f1_reported}"
        );
        // the point estimate itself stays within one rounding unit
        assert!(
            (f1 - f1_reported).abs() <= 0.01 + 1e-12,
            "F1({precision}, {recall}) = {f1} strays beyond a rounding unit from {f1_reported}"
        );
    }
    // the second pair also reproduces exactly after 2-decimal rounding
    assert_eq!((f1_score(0.68, 0.48) * 100.0).round() / 100.0, 0.56);
    println!("ACCEPTANCE 1 (Table V F1 consistency): PASS");
}

// ---------------------------------------------------------------------------
// 2. mAP oracle equivalence
// ---------------------------------------------------------------------------

/// Blunt matcher, written independently of the library: walk detections by
/// descending score and give each the best still-free gold at or above the
/// IoU threshold.
fn oracle_match_tp_count(dets: &[Detection], golds: &[BBox], iou_threshold: f64) -> usize {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].score.total_cmp(&dets[a].score).then_with(|| dets[a].bbox.lex_cmp(&dets[b].bbox))
    });
    let mut taken = vec![false; golds.len()];
    let mut tp = 0;
    for &di in &order {
        let mut best: Option<(f64, usize)> = None;
        for (gi, gold) in golds.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let iou = bbox_iou(&dets[di].bbox, gold);
            if iou >= iou_threshold && best.map_or(true, |(b, _)| iou > b) {
                best = Some((iou, gi));
            }
        }
        if let Some((_, gi)) = best {
            taken[gi] = true;
            tp += 1;
        }
    }
    tp
}

/// PR-enumeration AP: re-match every score-ordered prefix from scratch, then
/// average max-precision-at-recall over the 101-point grid.
fn oracle_ap(dets: &[Detection], golds: &[BBox], iou_threshold: f64) -> f64 {
    let n_gold = golds.len();
    assert!(n_gold > 0);
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b].score.total_cmp(&dets[a].score).then_with(|| dets[a].bbox.lex_cmp(&dets[b].bbox))
    });
    let mut curve = Vec::new(); // (recall, precision) per prefix
    for k in 1..=order.len() {
        let prefix: Vec<Detection> = order[..k].iter().map(|&i| dets[i].clone()).collect();
        let tp = oracle_match_tp_count(&prefix, golds, iou_threshold);
        curve.push((tp as f64 / n_gold as f64, tp as f64 / k as f64));
    }
    let mut total = 0.0;
    for step in 0..101 {
        let r = step as f64 / 100.0;
        let best = curve
            .iter()
            .filter(|(recall, _)| *recall >= r - 1e-12)
            .map(|(_, precision)| *precision)
            .fold(0.0, f64::max);
        total += best;
    }
    total / 101.0
}

fn random_box(rng: &mut ChaCha8Rng) -> BBox {
    let x = rng.random_range(0.0..80.0);
    let y = rng.random_range(0.0..80.0);
    let w = rng.random_range(4.0..30.0);
    let h = rng.random_range(4.0..30.0);
    BBox { x_min: x, y_min: y, x_max: x + w, y_max: y + h }
}

#[test]
fn criterion_2_map_oracle_equivalence() {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for scene_index in 0..200 {
        let n_dets = rng.random_range(0..=6);
        let n_golds = rng.random_range(0..=4);
        let classes = [ObjectClass::Stamp, ObjectClass::Signature];
        let detections: Vec<Detection> = (0..n_dets)
            .map(|_| Detection {
                class: classes[rng.random_range(0..2)],
                bbox: random_box(&mut rng),
                score: rng.random_range(0.05..1.0),
            })
            .collect();
        let golds: Vec<(ObjectClass, BBox)> = (0..n_golds)
            .map(|_| (classes[rng.random_range(0..2)], random_box(&mut rng)))
            .collect();
        let scene =
            Scene { id: format!("scene-{scene_index}"), detections: detections.clone(), golds: golds.clone() };
        let report = mean_ap(std::slice::from_ref(&scene));

        for (class, gold_count, aps) in &report.per_class {
            let class_golds: Vec<BBox> =
                golds.iter().filter(|(c, _)| c == class).map(|&(_, b)| b).collect();
            let class_dets: Vec<Detection> =
                detections.iter().filter(|d| d.class == *class).cloned().collect();
            assert_eq!(*gold_count, class_golds.len());
            if class_golds.is_empty() {
                assert!(aps.is_empty());
                assert!(report.zero_gold_classes.contains(class));
                continue;
            }
            for (ti, &threshold) in COCO_IOU_THRESHOLDS.iter().enumerate() {
                let expected = oracle_ap(&class_dets, &class_golds, threshold);
                assert!(
                    (aps[ti] - expected).abs() < 1e-9,
                    "scene {scene_index} {class:?} @{threshold}: {} vs oracle {expected}",
                    aps[ti]
                );
            }
        }
        assert!(
            report.map_50_95 <= report.map_50 + 1e-12,
            "scene {scene_index}: mAP@[.50:.95] {} exceeds mAP@0.50 {}",
            report.map_50_95,
            report.map_50
        );
    }
    assert!(started.elapsed().as_secs() < 10, "oracle comparison exceeded 10 s");
    println!("ACCEPTANCE 2 (mAP oracle equivalence, 200 scenes): PASS");
}

// ---------------------------------------------------------------------------
// 3. Loss verification
// ---------------------------------------------------------------------------

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-7 {
        0.0 // both negligibly small
    } else {
        (a - b).abs() / scale
    }
}

fn check_gradient(name: &str, f: impl Fn(&[f64]) -> LossValue, point: &[f64]) {
    const STEP: f64 = 1e-5;
    let analytic = f(point);
    for i in 0..point.len() {
        let mut plus = point.to_vec();
        plus[i] += STEP;
        let mut minus = point.to_vec();
        minus[i] -= STEP;
        let numeric = (f(&plus).loss - f(&minus).loss) / (2.0 * STEP);
        let err = relative_error(analytic.grad[i], numeric);
        assert!(
            err < 1e-5,
            "{name}: grad[{i}] analytic {} vs numeric {numeric} (rel {err:.3e}) at {point:?}",
            analytic.grad[i]
        );
    }
}

#[test]
fn criterion_3_loss_verification() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    // focal(gamma = 0) == cross-entropy on 1000 random logit vectors
    let gamma_zero = FocalParams { gamma: 0.0, alpha: Vec::new() };
    for _ in 0..1000 {
        let dim = rng.random_range(2..=10);
        let logits: Vec<f64> = (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect();
        let target = rng.random_range(0..dim);
        let ce = cross_entropy(&logits, target).unwrap();
        let fl = focal_loss(&logits, target, &gamma_zero).unwrap();
        assert!(
            (ce.loss - fl.loss).abs() < 1e-12,
            "focal(gamma=0) {} != CE {}",
            fl.loss,
            ce.loss
        );
    }

    // analytic gradients against central finite differences
    for _ in 0..100 {
        let dim = rng.random_range(2..=8);
        let logits: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let target = rng.random_range(0..dim);
        check_gradient("cross_entropy", |z| cross_entropy(z, target).unwrap(), &logits);
    }
    let focal_params = FocalParams::default();
    for _ in 0..100 {
        let dim = rng.random_range(2..=8);
        let logits: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let target = rng.random_range(0..dim);
        check_gradient(
            "focal_loss",
            |z| focal_loss(z, target, &focal_params).unwrap(),
            &logits,
        );
    }
    for _ in 0..100 {
        let pred: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        let gold: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let beta = rng.random_range(0.5..2.0);
        check_gradient(
            "smooth_l1",
            |p| smooth_l1(&[p[0], p[1], p[2], p[3]], &gold, beta).unwrap(),
            &pred,
        );
    }

    // branch continuity at |d| = beta
    for beta in [0.5, 1.0, 2.0] {
        let eps = 1e-9;
        for sign in [-1.0, 1.0] {
            let below = smooth_l1(&[sign * (beta - eps), 0.0, 0.0, 0.0], &[0.0; 4], beta).unwrap();
            let above = smooth_l1(&[sign * (beta + eps), 0.0, 0.0, 0.0], &[0.0; 4], beta).unwrap();
            assert!((below.loss - above.loss).abs() < 1e-8);
            assert!((below.grad[0] - above.grad[0]).abs() < 1e-8);
        }
    }
    println!("ACCEPTANCE 3 (loss verification): PASS");
}

// ---------------------------------------------------------------------------
// 4. Augmentation invariants
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_augmentation_invariants() {
    let started = std::time::Instant::now();
    // small pages keep 1000 seeded runs fast; content layout is unchanged
    let options = SynthOptions {
        n_docs: 8,
        base_width: 190,
        base_height: 250,
        ..SynthOptions::default()
    };
    let (records, _) = synth_fixture(Seed(40), &options).unwrap();

    let keyword_cfg = KeywordAugConfig::default();
    let mut guard_skips = 0usize;
    let mut applied = 0usize;
    for i in 0..1000u64 {
        let record = &records[(i % records.len() as u64) as usize];
        let out = augment_keyword(record, &keyword_cfg, &Seed(i)).unwrap();
        let angle = out.trace.sampled_angle_deg.expect("keyword track always samples an angle");
        assert!(angle.abs() <= keyword_cfg.max_rotation_deg, "sampled {angle}");
        assert_eq!(out.record.annotations.len(), record.annotations.len());
        if out.trace.rotation_guard_skipped {
            guard_skips += 1;
        } else {
            applied += 1;
            // margin invariant on the post-rotation canvas (no resize
            // configured, so the output image is that canvas)
            let (w, h) =
                (out.record.image.width() as f64, out.record.image.height() as f64);
            for b in &out.trace.boxes_after_rotation {
                let margin = keyword_cfg.crop_margin_px;
                assert!(
                    b.x_min >= margin
                        && b.y_min >= margin
                        && b.x_max <= w - margin
                        && b.y_max <= h - margin,
                    "box {:?} violates the {margin} px margin on {w}x{h} (seed {i})",
                    b.to_array()
                );
            }
        }
    }
    assert_eq!(guard_skips + applied, 1000);
    assert!(applied > 0, "no rotation ever survived the guard");

    // without the pad cushion, pages with near-border boxes must take the
    // guard-skip branch rather than violate the margin
    let no_pad_cfg = KeywordAugConfig { pad_probability: 0.0, ..KeywordAugConfig::default() };
    let mut no_pad_skips = 0usize;
    for i in 0..200u64 {
        let record = &records[(i % records.len() as u64) as usize];
        let out = augment_keyword(record, &no_pad_cfg, &Seed(i)).unwrap();
        if out.trace.rotation_guard_skipped {
            no_pad_skips += 1;
            assert_eq!(out.record.annotations, record.annotations);
        } else {
            let (w, h) =
                (out.record.image.width() as f64, out.record.image.height() as f64);
            for b in &out.trace.boxes_after_rotation {
                assert!(
                    b.x_min >= 20.0 && b.y_min >= 20.0 && b.x_max <= w - 20.0 && b.y_max <= h - 20.0
                );
            }
        }
    }
    assert!(no_pad_skips > 0, "expected the margin guard to reject some rotations");

    // photometric ops never move boxes
    let photometric_cfg = KeywordAugConfig {
        pad_probability: 0.0,
        max_rotation_deg: 0.0,
        blur_probability: 1.0,
        jitter_probability: 1.0,
        ..KeywordAugConfig::default()
    };
    for i in 0..50u64 {
        let record = &records[(i % records.len() as u64) as usize];
        let out = augment_keyword(record, &photometric_cfg, &Seed(i)).unwrap();
        assert_eq!(out.record.annotations, record.annotations);
    }

    // identical seeds give byte-identical outputs
    for i in 0..25u64 {
        let record = &records[(i % records.len() as u64) as usize];
        let a = augment_keyword(record, &keyword_cfg, &Seed(i)).unwrap();
        let b = augment_keyword(record, &keyword_cfg, &Seed(i)).unwrap();
        assert_eq!(a.record.image.pixels(), b.record.image.pixels());
        assert_eq!(a.record.annotations, b.record.annotations);
    }

    // detection track: empirical rotation rate and noise multiplier bounds
    let detection_cfg = DetectionAugConfig::default();
    let mut rotations = 0usize;
    for i in 0..1000u64 {
        let record = &records[(i % records.len() as u64) as usize];
        let out = augment_detection(record, &detection_cfg, &Seed(i)).unwrap();
        if out.trace.sampled_angle_deg.is_some() {
            rotations += 1;
            let angle = out.trace.sampled_angle_deg.unwrap();
            assert!(angle.abs() <= detection_cfg.max_rotation_deg);
        }
        if let Some(multipliers) = out.trace.noise_multipliers {
            for m in multipliers {
                assert!((0.5..=1.0).contains(&m), "noise multiplier {m} out of range");
            }
        }
    }
    let rate = rotations as f64 / 1000.0;
    assert!(
        (0.45..=0.55).contains(&rate),
        "empirical rotation rate {rate} outside 0.5 +- 0.05"
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "augmentation checks took {elapsed:?}");
    println!(
        "ACCEPTANCE 4 (augmentation invariants, 1000+1000 runs, rotation rate {rate:.3}, \
         guard skips {guard_skips}+{no_pad_skips}): PASS"
    );
}

// ---------------------------------------------------------------------------
// 5. Levenshtein oracle and metric axioms
// ---------------------------------------------------------------------------

/// Exhaustive memoized recursion over the textbook recurrence.
fn oracle_levenshtein(a: &[char], b: &[char]) -> usize {
    fn rec(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let substitution =
            rec(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let deletion = rec(a, b, i + 1, j, memo) + 1;
        let insertion = rec(a, b, i, j + 1, memo) + 1;
        let v = substitution.min(deletion).min(insertion);
        memo.insert((i, j), v);
        v
    }
    rec(a, b, 0, 0, &mut HashMap::new())
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

#[test]
fn criterion_5_levenshtein_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphabet = ['a', 'b', 'c'];
    for _ in 0..10_000 {
        let a = random_word(&mut rng, &alphabet, 8);
        let b = random_word(&mut rng, &alphabet, 8);
        let expected = oracle_levenshtein(
            &a.chars().collect::<Vec<_>>(),
            &b.chars().collect::<Vec<_>>(),
        );
        assert_eq!(levenshtein(&a, &b), expected, "{a:?} vs {b:?}");
    }

    let wide = ['a', 'b', 'c', 'd', 'e'];
    for _ in 0..1000 {
        let a = random_word(&mut rng, &wide, 12);
        let b = random_word(&mut rng, &wide, 12);
        let c = random_word(&mut rng, &wide, 12);
        let ab = levenshtein(&a, &b);
        assert_eq!(ab, levenshtein(&b, &a), "symmetry {a:?} {b:?}");
        assert_eq!(levenshtein(&a, &a), 0);
        assert_eq!(ab == 0, a == b, "identity of indiscernibles {a:?} {b:?}");
        assert!(
            ab <= levenshtein(&a, &c) + levenshtein(&c, &b),
            "triangle {a:?} {b:?} via {c:?}"
        );
    }
    println!("ACCEPTANCE 5 (Levenshtein oracle + metric axioms): PASS");
}

// ---------------------------------------------------------------------------
// 6. Validator truth table
// ---------------------------------------------------------------------------

fn token_evidence(class: FieldClass) -> ClassifiedToken {
    ClassifiedToken {
        token: OcrToken {
            text: format!("{class}"),
            bbox: BBox::new(10.0, 10.0, 30.0, 20.0).unwrap(),
            confidence: 0.99,
        },
        label: class,
        confidence: 0.95,
    }
}

fn detection_evidence(class: ObjectClass, score: f64) -> Detection {
    Detection { class, bbox: BBox::new(40.0, 40.0, 90.0, 70.0).unwrap(), score }
}

#[test]
fn criterion_6_validator_truth_table() {
    let criteria = ValidationCriteria::default();
    let fields = FieldClass::KEYWORD_FIELDS;

    // bits 0..4 = the five fields, bit 5 = stamp, bit 6 = signature
    for mask in 0u32..128 {
        let tokens: Vec<ClassifiedToken> = fields
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &c)| token_evidence(c))
            .collect();
        let mut detections = Vec::new();
        if mask & (1 << 5) != 0 {
            detections.push(detection_evidence(ObjectClass::Stamp, 0.9));
        }
        if mask & (1 << 6) != 0 {
            detections.push(detection_evidence(ObjectClass::Signature, 0.85));
        }
        let report = validate("doc", &tokens, &detections, false, &criteria, "fp");
        let expected = if mask == 127 { Verdict::Valid } else { Verdict::Invalid };
        assert_eq!(report.verdict, expected, "mask {mask:#09b}");

        // the handwritten flag wins regardless of evidence
        let handwritten = validate("doc", &tokens, &detections, true, &criteria, "fp");
        assert_eq!(handwritten.verdict, Verdict::Unsupported, "mask {mask:#09b}");
        assert!(handwritten.criteria.is_empty());
    }

    // monotonicity: adding evidence never flips Valid -> Invalid
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let mut tokens = Vec::new();
        let mut detections = Vec::new();
        for &field in &fields {
            if rng.random_bool(0.5) {
                tokens.push(token_evidence(field));
            }
        }
        if rng.random_bool(0.5) {
            detections.push(detection_evidence(ObjectClass::Stamp, rng.random_range(0.5..1.0)));
        }
        if rng.random_bool(0.5) {
            detections
                .push(detection_evidence(ObjectClass::Signature, rng.random_range(0.5..1.0)));
        }
        let before = validate("doc", &tokens, &detections, false, &criteria, "fp").verdict;

        let mut more_tokens = tokens.clone();
        let mut more_detections = detections.clone();
        more_tokens.push(token_evidence(fields[rng.random_range(0..fields.len())]));
        more_detections.push(detection_evidence(
            if rng.random_bool(0.5) { ObjectClass::Stamp } else { ObjectClass::Signature },
            rng.random_range(0.5..1.0),
        ));
        let after =
            validate("doc", &more_tokens, &more_detections, false, &criteria, "fp").verdict;
        assert!(
            !(before == Verdict::Valid && after == Verdict::Invalid),
            "added evidence flipped Valid -> Invalid"
        );

        // raising min_detection_score never flips Invalid -> Valid
        let strict = ValidationCriteria {
            min_detection_score: (criteria.min_detection_score + 0.4).min(1.0),
            ..criteria.clone()
        };
        let strict_verdict = validate("doc", &tokens, &detections, false, &strict, "fp").verdict;
        assert!(
            !(before == Verdict::Invalid && strict_verdict == Verdict::Valid),
            "raising the detection threshold flipped Invalid -> Valid"
        );
    }
    println!("ACCEPTANCE 6 (validator truth table, 128 combos + 500 monotonicity): PASS");
}

// ---------------------------------------------------------------------------
// 7. End-to-end determinism
// ---------------------------------------------------------------------------

fn read_dir_sorted(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn criterion_7_end_to_end_determinism() {
    let started = std::time::Instant::now();
    let options = SynthOptions {
        n_docs: 20,
        omit_stamp: vec![2, 7],
        omit_signature: vec![5],
        omit_fields: vec![(9, FieldClass::Date)],
        handwritten: vec![12, 13],
        skew_deg: 1.5,
        ..SynthOptions::default()
    };
    let (records, plan) = synth_fixture(Seed(7), &options).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_fixture(dir.path(), &records, &plan, Split::Test).unwrap();

    let config = PipelineConfig { master_seed: 7, ..PipelineConfig::default() };
    let outcome_a = run_pipeline(&config, &manifest, dir.path()).unwrap();
    let outcome_b = run_pipeline(&config, &manifest, dir.path()).unwrap();
    assert!(!outcome_a.has_failures());

    // verdicts match the fixture plan exactly
    for (report, doc_plan) in outcome_a.reports.iter().zip(plan.docs.iter()) {
        assert_eq!(report.document_id, doc_plan.id);
        let expected = if doc_plan.handwritten {
            Verdict::Unsupported
        } else {
            let complete = FieldClass::ANNOTATION
                .iter()
                .all(|c| doc_plan.classes.contains(c));
            if complete {
                Verdict::Valid
            } else {
                Verdict::Invalid
            }
        };
        assert_eq!(report.verdict, expected, "{}", doc_plan.id);
    }

    // byte-identical reports across the two runs
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    write_outputs(&outcome_a, out_a.path()).unwrap();
    write_outputs(&outcome_b, out_b.path()).unwrap();
    assert_eq!(
        read_dir_sorted(&out_a.path().join("reports")),
        read_dir_sorted(&out_b.path().join("reports"))
    );
    assert_eq!(
        std::fs::read(out_a.path().join("summary.json")).unwrap(),
        std::fs::read(out_b.path().join("summary.json")).unwrap()
    );

    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 30, "pipeline determinism check took {elapsed:?}");
    println!("ACCEPTANCE 7 (end-to-end determinism, 20 documents): PASS");
}

// ---------------------------------------------------------------------------
// 8. Format fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_format_fidelity() {
    // local engine golden round-trip
    let tokens = parse_local_engine_output(&data("tesseract_sample.tsv")).unwrap();
    let expected: Vec<OcrToken> =
        serde_json::from_slice(&data("tesseract_sample.expected.json")).unwrap();
    assert_eq!(tokens, expected);
    let reparsed: Vec<OcrToken> =
        serde_json::from_slice(&serde_json::to_vec(&tokens).unwrap()).unwrap();
    assert_eq!(tokens, reparsed);

    // cloud engine golden round-trip
    let tokens = parse_cloud_read_response(&data("azure_read_sample.json")).unwrap();
    let expected: Vec<OcrToken> =
        serde_json::from_slice(&data("azure_read_sample.expected.json")).unwrap();
    assert_eq!(tokens, expected);
    let reparsed: Vec<OcrToken> =
        serde_json::from_slice(&serde_json::to_vec(&tokens).unwrap()).unwrap();
    assert_eq!(tokens, reparsed);

    // class-count statistics render the published corpus row byte-for-byte
    let golden_counts: std::collections::BTreeMap<String, u64> =
        serde_json::from_slice(&data("class_counts_azure.json")).unwrap();
    let mut counts = ClassCounts::default();
    for (name, value) in &golden_counts {
        let class = FieldClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == name)
            .unwrap_or_else(|| panic!("unknown class {name:?} in golden input"));
        counts.add(class, *value);
    }
    assert_eq!(counts.get(FieldClass::Other), 31715);
    assert_eq!(counts.get(FieldClass::Title), 217);
    assert_eq!(counts.get(FieldClass::Date), 242);
    assert_eq!(counts.get(FieldClass::Client), 553);
    assert_eq!(counts.get(FieldClass::Total), 315);
    assert_eq!(counts.get(FieldClass::TotalValue), 221);
    let rendered = format_class_counts("Azure OCR", &counts);
    let golden = String::from_utf8(data("class_counts_azure.txt")).unwrap();
    assert_eq!(rendered, golden);

    println!("ACCEPTANCE 8 (format fidelity): PASS");
}
