//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use palsy_cli::commands::{cmd_eval_lopo, cmd_preprocess, cmd_report, cmd_train, eval_dir};
use palsy_cli::config::{Overrides, Resolved, RunConfig};
use palsy_core::dataset::{derive_binary_label, load_manifest, lopo_folds, RegionIntensity};
use palsy_core::evaluation::{
    confusion, format_2dp, parse_report, prf, write_report, Averages, ConfusionCounts, ReportRow, Selection,
    FOLD_HEADER, REPORT_HEADER,
};
use palsy_core::modalities::{rasterize_contours, to_pixel, ContourGroup, ContourSpec, LandmarkSet, LANDMARK_COUNT};
use palsy_core::models::{
    build_cnn, build_early_fusion, build_fnn, late_fusion_predict, predict_class, predict_proba, train_model,
    BackboneConfig, EarlyFusionConfig, FnnConfig, Hyper, InMemorySource, InputSpec, CNN_EMBEDDING_TAP,
};
use palsy_core::numerics::{bce_loss, check_layer_family, GradCheckConfig, LayerFamily, RngState, Tensor};
use palsy_core::synth::{gaussian_clusters, write_synthetic_corpus, SynthConfig};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let holds: bool = $cond;
        if !holds {
            return Err(format!($($msg)+));
        }
    };
}

fn ok_or<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

// ---------------------------------------------------------------- gradients

const GRAD_SEEDS: u64 = 20;

fn gradients() -> Check {
    let start = Instant::now();
    let cfg = GradCheckConfig {
        h: 1e-5,
        tol: 1e-4,
        ..GradCheckConfig::default()
    };
    let mut summary = Vec::new();
    for family in LayerFamily::ALL {
        let mut worst: f64 = 0.0;
        for seed in 0..GRAD_SEEDS {
            let report = ok_or(check_layer_family(family, seed, &cfg), family.name())?;
            worst = worst.max(report.max_rel_error());
            ensure!(
                report.passed(),
                "{} seed {seed}: {:?} exceeds {}",
                family.name(),
                report.worst(),
                cfg.tol
            );
        }
        summary.push(format!("{} {worst:.1e}", family.name()));
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{GRAD_SEEDS} seeds each, max rel err: {}; {elapsed:.1?}", summary.join(", ")))
}

// ---------------------------------------------------------------- BCE

fn bce(p: f64, y: f64) -> Result<f64, String> {
    let pt = Tensor::new(vec![1, 1], vec![p]).unwrap();
    let yt = Tensor::new(vec![1, 1], vec![y]).unwrap();
    ok_or(bce_loss(&pt, &yt).map(|(l, _)| l), "bce_loss")
}

#[allow(clippy::approx_constant)]
fn bce_points() -> Check {
    let one = bce(1.0, 1.0)?;
    ensure!(one == 0.0, "(y=1, p=1) gave {one}");
    let half = bce(0.5, 1.0)?;
    ensure!((half - 0.693147).abs() <= 1e-6, "(y=1, p=0.5) gave {half}");
    let mut extremes = Vec::new();
    for (p, y) in [(0.0, 1.0), (1.0, 0.0), (0.0, 0.0), (1e-300, 1.0)] {
        let l = bce(p, y)?;
        ensure!(l.is_finite(), "(y={y}, p={p}) gave {l}");
        extremes.push(l);
    }
    Ok(format!("0 / {half:.6} / extremes {:.3}", extremes[0]))
}

// ---------------------------------------------------------------- labels

fn label_table() -> Check {
    use RegionIntensity::*;
    let all = [Absent, Slight, Strong];
    for eye in all {
        for mouth in all {
            let oracle = eye == Strong || mouth == Strong || (eye == Slight && mouth == Slight);
            let got = derive_binary_label(eye, mouth).class_index() == 1;
            ensure!(got == oracle, "({eye:?}, {mouth:?}) gave {got}, expected {oracle}");
        }
    }
    Ok("9/9 pairs".into())
}

// ---------------------------------------------------------------- LOPO

fn lopo_integrity() -> Check {
    let tmp = ok_or(tempfile::tempdir(), "tempdir")?;
    let cfg = SynthConfig {
        patients: 21,
        videos_per_patient: 3,
        frames_per_video: 2,
        image_side: 8,
        seed: 5,
    };
    let path = ok_or(write_synthetic_corpus(tmp.path(), &cfg), "corpus")?;
    let m = ok_or(load_manifest(&path), "manifest")?;
    let plan = ok_or(lopo_folds(&m), "folds")?;
    ensure!(plan.folds.len() == 21, "{} folds", plan.folds.len());
    let frames = m.frames();
    for fold in &plan.folds {
        let pid = |i: &usize| frames[*i].key.patient_id.as_str();
        let train: BTreeSet<&str> = fold.train.iter().map(pid).collect();
        let test: BTreeSet<&str> = fold.test.iter().map(pid).collect();
        ensure!(train.is_disjoint(&test), "fold {} overlaps: {:?}", fold.index, train.intersection(&test));
        ensure!(test.len() == 1 && test.contains(fold.held_out.as_str()), "fold {} test {test:?}", fold.index);
        let expected: Vec<usize> = (0..frames.len())
            .filter(|&i| frames[i].key.patient_id == fold.held_out)
            .collect();
        ensure!(fold.test == expected, "fold {} does not hold all of {}'s frames", fold.index, fold.held_out);
        let videos: BTreeSet<&str> = fold.test.iter().map(|&i| frames[i].key.video_id.as_str()).collect();
        ensure!(videos.len() == 3, "fold {} test spans videos {videos:?}", fold.index);
        ensure!(fold.train.len() + fold.test.len() == frames.len(), "fold {} loses frames", fold.index);
    }
    Ok(format!("21 folds over {} frames, 3 videos per patient", frames.len()))
}

// ---------------------------------------------------------------- metrics

fn brute_counts(preds: &[usize], labels: &[usize]) -> [u64; 4] {
    let mut c = [0u64; 4];
    for (&p, &l) in preds.iter().zip(labels) {
        let slot = match (p, l) {
            (1, 1) => 0,
            (1, 0) => 1,
            (0, 0) => 2,
            _ => 3,
        };
        c[slot] += 1;
    }
    c
}

fn brute_prf(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn metric_oracle() -> Check {
    let mut rng = RngState::new(2024);
    for case in 0..10_000 {
        let n = rng.below(40);
        let bias = rng.uniform();
        let labels: Vec<usize> = (0..n).map(|_| (rng.uniform() < 0.5) as usize).collect();
        let preds: Vec<usize> = (0..n).map(|_| (rng.uniform() < bias) as usize).collect();
        let c = ok_or(confusion(&preds, &labels), "confusion")?;
        let [tp, fp, tn, fn_] = brute_counts(&preds, &labels);
        ensure!(
            (c.tp, c.fp, c.tn, c.fn_) == (tp, fp, tn, fn_),
            "case {case}: {c:?} vs brute ({tp}, {fp}, {tn}, {fn_})"
        );
        let m = prf(&c);
        let (p, r, f) = brute_prf(tp, fp, fn_);
        ensure!(
            (m.precision - p).abs() < 1e-9 && (m.recall - r).abs() < 1e-9 && (m.f1 - f).abs() < 1e-9,
            "case {case}: {m:?} vs brute ({p}, {r}, {f})"
        );
        ensure!(
            m.degenerate.precision == (tp + fp == 0) && m.degenerate.recall == (tp + fn_ == 0),
            "case {case}: degenerate flags {:?}",
            m.degenerate
        );
    }
    let worked = prf(&ConfusionCounts {
        tp: 3,
        fp: 1,
        tn: 0,
        fn_: 2,
    });
    let shown = [worked.precision, worked.recall, worked.f1].map(format_2dp);
    ensure!(shown == ["75.00", "60.00", "66.67"], "worked case gave {shown:?}");
    Ok(format!("10^4 cases exact; worked case {}", shown.join("/")))
}

// ---------------------------------------------------------------- learnability

fn learnability() -> Check {
    let mut accs = Vec::new();
    for seed in 0..3u64 {
        let start = Instant::now();
        let (x, y) = gaussian_clusters(500, 52, 100 + seed);
        let source = ok_or(InMemorySource::new(vec![x], y.clone()), "source")?;
        let mut model = ok_or(build_fnn(&FnnConfig::blendshapes(), &mut RngState::new(seed)), "build")?;
        let hyper = Hyper::fnn().with_seed(seed);
        ensure!(
            hyper.lr == 0.01 && hyper.batch_size == 32 && hyper.epochs == 15,
            "preset hyper {hyper:?}"
        );
        ok_or(train_model(&mut model, &source, &hyper), "train")?;
        let probs = ok_or(predict_proba(&mut model, &source, 256), "predict")?;
        let preds = ok_or(predict_class(&probs), "classes")?;
        let correct = preds.iter().zip(&y).filter(|(p, l)| **p == l.class_index()).count();
        let acc = correct as f64 / y.len() as f64;
        let elapsed = start.elapsed();
        ensure!(acc >= 0.95, "seed {seed}: training accuracy {acc:.4}");
        ensure!(elapsed < Duration::from_secs(60), "seed {seed}: took {elapsed:?}");
        accs.push(format!("{:.1}% in {elapsed:.1?}", 100.0 * acc));
    }
    Ok(format!("training accuracy {}", accs.join(", ")))
}

// ---------------------------------------------------------------- shared corpus

const RUN_TOML: &str = r#"
manifest = "manifest.json"
image_side = 16

[cnn]
base_channels = 4
stage_blocks = [1, 1]
epochs = 2
dual_epochs = 2
"#;

struct Corpus {
    _dir: tempfile::TempDir,
    root: PathBuf,
    cfg: RunConfig,
}

impl Corpus {
    fn new() -> Result<Self, String> {
        let dir = ok_or(tempfile::tempdir(), "tempdir")?;
        let root = dir.path().to_path_buf();
        let synth = SynthConfig {
            patients: 21,
            videos_per_patient: 2,
            frames_per_video: 3,
            image_side: 16,
            seed: 17,
        };
        ok_or(write_synthetic_corpus(&root, &synth), "corpus")?;
        let cfg = ok_or(RunConfig::parse(RUN_TOML, Path::new("acceptance.toml")), "config")?;
        Ok(Self { _dir: dir, root, cfg })
    }

    fn resolve(&self, out: &str, sel: Selection, workers: usize) -> Result<Resolved, String> {
        let ov = Overrides {
            out: Some(self.root.join(out)),
            workers: Some(workers),
            seed: Some(7),
            modality: Some(sel.token().into()),
        };
        let r = ok_or(Resolved::new(&self.cfg, &self.root, &ov), "resolve")?;
        ok_or(cmd_preprocess(&r), "preprocess")?;
        Ok(r)
    }
}

// ---------------------------------------------------------------- fusion

fn fusion_properties(corpus: &Corpus) -> Check {
    let mut rng = RngState::new(99);
    for case in 0..10_000 {
        let draw = |rng: &mut RngState| {
            if rng.uniform() < 0.2 {
                (rng.below(5) as f32) / 4.0
            } else {
                rng.uniform() as f32
            }
        };
        let a = Tensor::new(vec![1, 2], vec![draw(&mut rng), draw(&mut rng)]).unwrap();
        let b = Tensor::new(vec![1, 2], vec![draw(&mut rng), draw(&mut rng)]).unwrap();
        let ab = ok_or(late_fusion_predict(&a, &b), "late fusion")?;
        let ba = ok_or(late_fusion_predict(&b, &a), "late fusion")?;
        ensure!(ab == ba, "case {case}: {:?} / {:?}", a.data(), b.data());
    }

    let mut rng = RngState::new(0);
    let fnn = ok_or(build_fnn::<f32>(&FnnConfig::blendshapes(), &mut rng), "fnn")?;
    let cnn = ok_or(build_cnn::<f32>(&BackboneConfig::desk(), &mut rng), "cnn")?;
    let tap_a = ok_or(fnn.tap("hidden3"), "tap a")?.clone();
    let tap_b = ok_or(cnn.tap(CNN_EMBEDDING_TAP), "tap b")?.clone();
    let cfg = EarlyFusionConfig::new(tap_a, tap_b);
    let head = ok_or(build_early_fusion::<f32>(&cfg, &mut rng), "head")?;
    ensure!(cfg.input_width() == 522, "tap widths sum to {}", cfg.input_width());
    ensure!(head.input() == InputSpec::Features(522), "head input {:?}", head.input());

    let mut rows = Vec::new();
    for sel in [Selection::EarlyFusion, Selection::LateFusion] {
        let r = corpus.resolve("fusion", sel, 4)?;
        let (report, _) = ok_or(cmd_eval_lopo(&r), sel.token())?;
        let parsed = ok_or(parse_report(&report), "parse")?;
        let row = &parsed.rows[0];
        for v in [row.avg_f1, row.avg_precision, row.avg_recall] {
            ensure!(v.is_finite() && (0.0..=100.0).contains(&v), "{}: metric {v}", sel.token());
        }
        rows.push(format!("{} F1 {}", sel.token(), format_2dp(row.avg_f1)));
    }
    Ok(format!("10^4 swaps symmetric; width 522; {}", rows.join(", ")))
}

// ---------------------------------------------------------------- rasterizer

fn segment_landmarks(a: (f64, f64), b: (f64, f64)) -> LandmarkSet {
    let mut points = vec![[0.5, 0.5, 0.0]; LANDMARK_COUNT];
    points[0] = [a.0, a.1, 0.0];
    points[1] = [b.0, b.1, 0.0];
    LandmarkSet::new(points).expect("points in the unit square")
}

fn segment_spec() -> ContourSpec {
    ContourSpec::new(vec![ContourGroup {
        name: "seg".into(),
        closed: false,
        indices: vec![0, 1],
    }])
    .expect("valid spec")
}

fn set_pixels(r: &palsy_core::modalities::BnwRaster) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..r.height() {
        for x in 0..r.width() {
            if r.get(x, y) == 1 {
                out.push((x, y));
            }
        }
    }
    out
}

fn rasterizer_goldens() -> Check {
    let lm = segment_landmarks((0.0, 0.5), (1.0, 0.5));

    let empty = ok_or(rasterize_contours(&lm, &ContourSpec::empty(), 11, 11), "empty")?;
    ensure!(empty.pixels().iter().all(|&p| p == 0), "empty spec set pixels");

    let spec = segment_spec();
    let horizontal = ok_or(rasterize_contours(&lm, &spec, 11, 11), "horizontal")?;
    let on_line = |x: usize, y: usize| y == 5 && x <= 10;
    for y in 0..11 {
        for x in 0..11 {
            ensure!(
                (horizontal.get(x, y) == 1) == on_line(x, y),
                "horizontal: pixel ({x}, {y}) is {}",
                horizontal.get(x, y)
            );
        }
    }

    let diag_lm = segment_landmarks((0.0, 0.0), (1.0, 0.6));
    let diagonal = ok_or(rasterize_contours(&diag_lm, &spec, 11, 11), "diagonal")?;
    let golden = vec![
        (0, 0),
        (1, 1),
        (2, 1),
        (3, 2),
        (4, 2),
        (5, 3),
        (6, 4),
        (7, 4),
        (8, 5),
        (9, 5),
        (10, 6),
    ];
    let mut got = set_pixels(&diagonal);
    got.sort();
    ensure!(got == golden, "diagonal pixels {got:?}");

    for (lm, spec, name) in [(&lm, &ContourSpec::empty(), "empty"), (&lm, &spec, "horizontal"), (&diag_lm, &spec, "diagonal")] {
        let again = ok_or(rasterize_contours(lm, spec, 11, 11), name)?;
        let first = match name {
            "empty" => &empty,
            "horizontal" => &horizontal,
            _ => &diagonal,
        };
        ensure!(again.pixels() == first.pixels(), "{name}: rerun differs");
    }

    let mut rng = RngState::new(31);
    for case in 0..1000 {
        let side = 8 + rng.below(57);
        let a = (rng.uniform(), rng.uniform());
        let b = (rng.uniform(), rng.uniform());
        let r = ok_or(rasterize_contours(&segment_landmarks(a, b), &spec, side, side), "random")?;
        let dx = (to_pixel(a.0, side) - to_pixel(b.0, side)).unsigned_abs() as usize;
        let dy = (to_pixel(a.1, side) - to_pixel(b.1, side)).unsigned_abs() as usize;
        ensure!(
            r.count_set() == dx.max(dy) + 1,
            "case {case}: {} pixels for dx={dx} dy={dy}",
            r.count_set()
        );
    }
    Ok("empty / horizontal / diagonal goldens byte-identical; 10^3 segments".into())
}

// ---------------------------------------------------------------- report

/// Column titles of the published results table, in order, with the report
/// header fields they correspond to.
const TABLE_COLUMNS: [(&str, &str); 5] = [
    ("Data Modality", "modality"),
    ("Model", "model"),
    ("Average F1", "avg_f1"),
    ("Average Precision", "avg_precision"),
    ("Average Recall", "avg_recall"),
];

/// Data modality cells of the published table, top to bottom.
const TABLE_ROWS: [&str; 7] = [
    "Coordinates",
    "Features of Facial Expressions",
    "RGB Images",
    "BnW LineSegment Images",
    "BnW LineSegment Images + RGB Images",
    "Features of Facial Expressions + BnW LineSegment Images",
    "Features of Facial Expressions + BnW LineSegment Images",
];

fn report_structure(corpus: &Corpus) -> Check {
    let header: Vec<&str> = TABLE_COLUMNS.iter().map(|c| c.1).collect();
    ensure!(header == REPORT_HEADER, "header constant {REPORT_HEADER:?}");

    let tmp = ok_or(tempfile::tempdir(), "tempdir")?;
    let sample = tmp.path().join("sample.csv");
    let row = ReportRow::new(
        Selection::Blendshapes,
        &Averages {
            f1: 71.21,
            precision: 76.22,
            recall: 79.00,
        },
    );
    ok_or(write_report(&sample, &[row]), "write sample")?;
    let text = ok_or(fs::read_to_string(&sample), "read sample")?;
    ensure!(
        text.lines().nth(1) == Some("Features of Facial Expressions,Feed-forward Neural Network,71.21,76.22,79.00"),
        "sample row {text:?}"
    );

    let mut reports = Vec::new();
    for sel in Selection::ALL {
        let r = corpus.resolve("report", sel, 4)?;
        let (report, folds) = ok_or(cmd_eval_lopo(&r), sel.token())?;
        let text = ok_or(fs::read_to_string(&report), "read report")?;
        let lines: Vec<&str> = text.lines().collect();
        ensure!(lines.len() == 2, "{}: {} report lines", sel.token(), lines.len());
        ensure!(lines[0] == header.join(","), "{}: header {}", sel.token(), lines[0]);
        let cells: Vec<&str> = lines[1].split(',').collect();
        ensure!(cells.len() == 5, "{}: row {}", sel.token(), lines[1]);
        for c in &cells[2..] {
            let dp = c.split('.').nth(1).map_or(0, str::len);
            ensure!(c.parse::<f64>().is_ok() && dp == 2, "{}: value {c}", sel.token());
        }
        let fold_text = ok_or(fs::read_to_string(&folds), "read folds")?;
        ensure!(
            fold_text.lines().next() == Some(FOLD_HEADER.join(",").as_str()),
            "{}: fold header",
            sel.token()
        );
        ensure!(fold_text.lines().count() == 22, "{}: {} fold lines", sel.token(), fold_text.lines().count());
        reports.push(report);
    }
    reports.reverse();
    let (merged_path, merged) = ok_or(cmd_report(&reports, &corpus.root.join("report")), "merge")?;
    ensure!(merged.rows.len() == 7, "{} merged rows", merged.rows.len());
    let modalities: Vec<&str> = merged.rows.iter().map(|r| r.modality.as_str()).collect();
    ensure!(modalities == TABLE_ROWS, "row order {modalities:?}");
    let models: Vec<&str> = merged.rows.iter().map(|r| r.model.as_str()).collect();
    ensure!(
        models[5] == "Early Fusion Model" && models[6] == "Late Fusion Model",
        "fusion models {models:?}"
    );
    ensure!(
        ok_or(parse_report(&merged_path), "reparse")? == merged,
        "merged report does not round-trip"
    );
    Ok("header matches the 5 published columns; 7 runs merged into 7 rows".into())
}

// ---------------------------------------------------------------- determinism

fn tree_bytes(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in ok_or(fs::read_dir(&d), "read_dir")? {
            let p = ok_or(e, "entry")?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_path_buf();
                out.push((rel, ok_or(fs::read(&p), "read")?));
            }
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(corpus: &Corpus) -> Check {
    let mut compared = 0;
    for sel in [Selection::EarlyFusion, Selection::BnwRgb, Selection::Coords] {
        let mut trees = Vec::new();
        for workers in [1, 4] {
            let r = corpus.resolve(&format!("det{workers}"), sel, workers)?;
            ok_or(cmd_eval_lopo(&r), "eval")?;
            let train = ok_or(cmd_train(&r), "train")?;
            let mut tree = tree_bytes(&eval_dir(&r.out, sel))?;
            tree.extend(tree_bytes(&train)?);
            trees.push(tree);
        }
        ensure!(trees[0].len() == trees[1].len(), "{}: file sets differ", sel.token());
        for (a, b) in trees[0].iter().zip(&trees[1]) {
            ensure!(a.0 == b.0, "{}: {:?} vs {:?}", sel.token(), a.0, b.0);
            ensure!(a.1 == b.1, "{}: {} differs between 1 and 4 workers", sel.token(), a.0.display());
        }
        compared += trees[0].len();
    }
    Ok(format!("{compared} files byte-identical with 1 and 4 workers"))
}

// ---------------------------------------------------------------- runner

fn run(name: &str, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS  {name:<22} {detail} [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("FAIL  {name:<22} {detail} [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    // The libtest harness is disabled; honour `--list` so runners that
    // enumerate tests do not execute the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let corpus = Corpus::new();
    let shared = |f: fn(&Corpus) -> Check| {
        let corpus = &corpus;
        move || match corpus {
            Ok(c) => f(c),
            Err(e) => Err(format!("corpus setup: {e}")),
        }
    };
    let results = [
        run("gradient-verification", gradients),
        run("bce-point-values", bce_points),
        run("label-truth-table", label_table),
        run("lopo-integrity", lopo_integrity),
        run("metric-oracle", metric_oracle),
        run("learnability", learnability),
        run("fusion-properties", shared(fusion_properties)),
        run("rasterizer-goldens", rasterizer_goldens),
        run("report-structure", shared(report_structure)),
        run("determinism", shared(determinism)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
