//! The four subcommands.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use palsy_core::dataset::{load_manifest, lopo_folds, Fold, FrameRecord, Manifest};
use palsy_core::evaluation::{
    aggregate_lopo, emit_report, merge_reports, parse_report, write_report, AggregateReport, FoldDetail, FoldMetrics,
    ReportRow, Selection, REPORT_FILE,
};
use palsy_core::numerics::archive;
use rayon::prelude::*;

use crate::cache::{preprocess, Cache, CacheParams, PreprocessStats};
use crate::config::Resolved;
use crate::error::{output_err, CliError, Result};
use crate::run::{train_selection, Trained};

fn cache_params(r: &Resolved) -> CacheParams {
    CacheParams::new(r.image_side, &r.subset, &r.contours, r.rgb_norm)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} worker threads: {e}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| output_err(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| output_err(path, e))
}

/// Populates `<out>/cache` from the manifest.
pub fn cmd_preprocess(r: &Resolved) -> Result<PreprocessStats> {
    let manifest = load_manifest(&r.manifest)?;
    let params = cache_params(r);
    let stats = pool(r.workers)?.install(|| preprocess(&manifest, &r.out, &params, &r.subset, &r.contours))?;
    info!(
        "preprocessed {} frames ({} written, {} up to date)",
        stats.frames, stats.written, stats.skipped
    );
    Ok(stats)
}

fn open(r: &Resolved) -> Result<(Manifest, Cache)> {
    let manifest = load_manifest(&r.manifest)?;
    let cache = Cache::open(&r.out, &cache_params(r))?;
    Ok((manifest, cache))
}

fn history_file(part: &str) -> String {
    if part.is_empty() {
        "history.tsv".into()
    } else {
        format!("history_{part}.tsv")
    }
}

/// Directory `train` writes to for `sel`.
pub fn train_dir(out: &Path, sel: Selection) -> PathBuf {
    out.join("train").join(sel.token())
}

/// Directory `eval-lopo` writes to for `sel`.
pub fn eval_dir(out: &Path, sel: Selection) -> PathBuf {
    out.join("eval").join(sel.token())
}

/// Trains the selected model on every patient not listed in `holdout` and
/// writes `weights.bin`, the loss histories and `model.toml`.
pub fn cmd_train(r: &Resolved) -> Result<PathBuf> {
    let sel = r.require_selection()?;
    let (manifest, cache) = open(r)?;
    let known: BTreeSet<&str> = manifest.patient_ids().into_iter().collect();
    if let Some(bad) = r.holdout.iter().find(|h| !known.contains(h.as_str())) {
        return Err(CliError::Usage(format!("holdout patient `{bad}` is not in the manifest")));
    }
    let frames: Vec<&FrameRecord> = manifest
        .frames()
        .iter()
        .filter(|f| !r.holdout.contains(&f.key.patient_id))
        .collect();
    info!("training {} on {} frames", sel.token(), frames.len());
    let trained = pool(r.workers)?.install(|| train_selection(r, &cache, &frames, sel, r.seed_base))?;

    let dir = train_dir(&r.out, sel);
    create_dir(&dir)?;
    archive::save(&dir.join("weights.bin"), &trained.state_dict())?;
    for (part, h) in trained.histories() {
        write_text(&dir.join(history_file(part)), &h.to_table())?;
    }
    let card = trained.card(r, sel, r.seed_base, frames.len());
    let text = toml::to_string(&card).map_err(|e| CliError::Usage(format!("model card: {e}")))?;
    write_text(&dir.join("model.toml"), &text)?;
    Ok(dir)
}

fn run_fold(r: &Resolved, manifest: &Manifest, cache: &Cache, sel: Selection, fold: &Fold) -> Result<(FoldMetrics, Trained)> {
    let pick = |ix: &[usize]| ix.iter().map(|&i| &manifest.frames()[i]).collect::<Vec<_>>();
    let (train, test) = (pick(&fold.train), pick(&fold.test));
    let seed = r.seed_base.wrapping_add(fold.index as u64);
    info!("fold {} ({}): {} train / {} test frames", fold.index, fold.held_out, train.len(), test.len());
    let mut trained = train_selection(r, cache, &train, sel, seed)?;
    let preds = trained.predict(cache, &test)?;
    let labels: Vec<usize> = test.iter().map(|f| f.label().class_index()).collect();
    Ok((FoldMetrics::from_predictions(&fold.held_out, &preds, &labels)?, trained))
}

/// Leave-one-patient-out evaluation of the selected model. Folds run on
/// `workers` threads; results are identical for any worker count.
pub fn cmd_eval_lopo(r: &Resolved) -> Result<(PathBuf, PathBuf)> {
    let sel = r.require_selection()?;
    let (manifest, cache) = open(r)?;
    let plan = lopo_folds(&manifest)?;
    let dir = eval_dir(&r.out, sel);
    let weights_dir = dir.join("weights");
    create_dir(&weights_dir)?;

    let results = pool(r.workers)?.install(|| {
        plan.folds
            .par_iter()
            .map(|fold| {
                let (metrics, trained) = run_fold(r, &manifest, &cache, sel, fold)?;
                let name = format!("fold_{:02}_{}.bin", fold.index, fold.held_out);
                archive::save(&weights_dir.join(name), &trained.state_dict())?;
                Ok(metrics)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let averages = aggregate_lopo(&results)?;
    let report = AggregateReport {
        rows: vec![ReportRow::new(sel, &averages)],
    };
    let details: Vec<FoldDetail> = results
        .into_iter()
        .enumerate()
        .map(|(fold, metrics)| FoldDetail {
            selection: sel,
            fold,
            metrics,
        })
        .collect();
    Ok(emit_report(&dir, &report, &details)?)
}

/// Merges per-selection reports into `<out>/report.csv`.
pub fn cmd_report(paths: &[PathBuf], out: &Path) -> Result<(PathBuf, AggregateReport)> {
    if paths.is_empty() {
        return Err(CliError::Usage("report needs at least one report.csv".into()));
    }
    let reports = paths.iter().map(|p| parse_report(p)).collect::<palsy_core::Result<Vec<_>>>()?;
    let merged = merge_reports(&reports)?;
    create_dir(out)?;
    let path = out.join(REPORT_FILE);
    write_report(&path, &merged.rows)?;
    Ok((path, merged))
}
