use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{Averages, FoldMetrics};
use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 5] = ["modality", "model", "avg_f1", "avg_precision", "avg_recall"];
pub const FOLD_HEADER: [&str; 15] = [
    "modality",
    "model",
    "fold",
    "patient_id",
    "tp",
    "fp",
    "tn",
    "fn",
    "frames",
    "precision",
    "recall",
    "f1",
    "precision_degenerate",
    "recall_degenerate",
    "f1_degenerate",
];
pub const REPORT_FILE: &str = "report.csv";
pub const FOLDS_FILE: &str = "folds.csv";

/// A (data modality, model) combination; one row of the results table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Selection {
    #[serde(rename = "coords")]
    Coords,
    #[serde(rename = "blendshapes")]
    Blendshapes,
    #[serde(rename = "rgb")]
    Rgb,
    #[serde(rename = "bnw")]
    Bnw,
    #[serde(rename = "bnw+rgb")]
    BnwRgb,
    #[serde(rename = "early_fusion")]
    EarlyFusion,
    #[serde(rename = "late_fusion")]
    LateFusion,
}

impl Selection {
    /// Table order.
    pub const ALL: [Selection; 7] = [
        Selection::Coords,
        Selection::Blendshapes,
        Selection::Rgb,
        Selection::Bnw,
        Selection::BnwRgb,
        Selection::EarlyFusion,
        Selection::LateFusion,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Selection::Coords => "coords",
            Selection::Blendshapes => "blendshapes",
            Selection::Rgb => "rgb",
            Selection::Bnw => "bnw",
            Selection::BnwRgb => "bnw+rgb",
            Selection::EarlyFusion => "early_fusion",
            Selection::LateFusion => "late_fusion",
        }
    }

    pub fn modality_label(self) -> &'static str {
        match self {
            Selection::Coords => "Coordinates",
            Selection::Blendshapes => "Features of Facial Expressions",
            Selection::Rgb => "RGB Images",
            Selection::Bnw => "BnW LineSegment Images",
            Selection::BnwRgb => "BnW LineSegment Images + RGB Images",
            Selection::EarlyFusion | Selection::LateFusion => "Features of Facial Expressions + BnW LineSegment Images",
        }
    }

    pub fn model_label(self) -> &'static str {
        match self {
            Selection::Coords | Selection::Blendshapes => "Feed-forward Neural Network",
            Selection::Rgb | Selection::Bnw | Selection::BnwRgb => "ResNet-based Model",
            Selection::EarlyFusion => "Early Fusion Model",
            Selection::LateFusion => "Late Fusion Model",
        }
    }

    pub fn tokens() -> String {
        Self::ALL.map(Selection::token).join(", ")
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| Error::Config(format!("unknown modality `{s}`; expected one of: {}", Self::tokens())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub modality: String,
    pub model: String,
    pub avg_f1: f64,
    pub avg_precision: f64,
    pub avg_recall: f64,
}

impl ReportRow {
    pub fn new(selection: Selection, averages: &Averages) -> Self {
        Self {
            modality: selection.modality_label().into(),
            model: selection.model_label().into(),
            avg_f1: averages.f1,
            avg_precision: averages.precision,
            avg_recall: averages.recall,
        }
    }

    fn key(&self) -> (&str, &str) {
        (&self.modality, &self.model)
    }

    /// Position of this row's labels in table order, if they are known.
    fn table_rank(&self) -> Option<usize> {
        Selection::ALL
            .iter()
            .position(|s| s.modality_label() == self.modality && s.model_label() == self.model)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregateReport {
    pub rows: Vec<ReportRow>,
}

/// Fixed two-decimal rendering with halves rounded away from zero on the
/// decimal expansion (so `1.005` gives `1.01`).
pub fn format_2dp(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = format!("{:.9}", x.abs());
    let (int, frac) = digits.split_once('.').expect("fixed-point format has a dot");
    let nanos: u128 = format!("{int}{frac}").parse().expect("decimal digits");
    let hundredths = (nanos + 5_000_000) / 10_000_000;
    let sign = if x.is_sign_negative() && hundredths != 0 { "-" } else { "" };
    format!("{sign}{}.{:02}", hundredths / 100, hundredths % 100)
}

fn output_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Output {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn create_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| Error::Output {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let file = fs::File::create(path).map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::Writer::from_writer(file))
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = create_writer(path)?;
    let err = output_err(path);
    w.write_record(REPORT_HEADER).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.modality.as_str(),
            r.model.as_str(),
            &format_2dp(r.avg_f1),
            &format_2dp(r.avg_precision),
            &format_2dp(r.avg_recall),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// One fold's metrics under the row it contributes to.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldDetail {
    pub selection: Selection,
    pub fold: usize,
    pub metrics: FoldMetrics,
}

pub fn write_fold_details(path: &Path, folds: &[FoldDetail]) -> Result<()> {
    let mut w = create_writer(path)?;
    let err = output_err(path);
    w.write_record(FOLD_HEADER).map_err(&err)?;
    for d in folds {
        let (c, m) = (&d.metrics.counts, &d.metrics.metrics);
        w.write_record([
            d.selection.modality_label().to_string(),
            d.selection.model_label().to_string(),
            d.fold.to_string(),
            d.metrics.patient_id.clone(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            c.total().to_string(),
            format_2dp(m.precision),
            format_2dp(m.recall),
            format_2dp(m.f1),
            m.degenerate.precision.to_string(),
            m.degenerate.recall.to_string(),
            m.degenerate.f1.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `report.csv` and `folds.csv` into `dir`, returning both paths.
pub fn emit_report(dir: &Path, report: &AggregateReport, folds: &[FoldDetail]) -> Result<(PathBuf, PathBuf)> {
    let report_path = dir.join(REPORT_FILE);
    let folds_path = dir.join(FOLDS_FILE);
    write_report(&report_path, &report.rows)?;
    write_fold_details(&folds_path, folds)?;
    Ok((report_path, folds_path))
}

pub fn parse_report(path: &Path) -> Result<AggregateReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_report_str(&text, path)
}

/// Parses report text; `origin` is only used in error messages.
pub fn parse_report_str(text: &str, origin: &Path) -> Result<AggregateReport> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != REPORT_HEADER {
        return Err(parse_err(
            1,
            format!("header must be `{}`", REPORT_HEADER.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != REPORT_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", REPORT_HEADER.len(), record.len()),
            ));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("{} `{}` is not a number", REPORT_HEADER[i], &record[i])))
        };
        rows.push(ReportRow {
            modality: record[0].to_string(),
            model: record[1].to_string(),
            avg_f1: num(2)?,
            avg_precision: num(3)?,
            avg_recall: num(4)?,
        });
    }
    Ok(AggregateReport { rows })
}

/// Concatenates reports, rejecting repeated (modality, model) keys, and
/// orders known rows as in the results table; unknown rows keep their
/// relative order after them.
pub fn merge_reports(reports: &[AggregateReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Input("nothing to merge".into()));
    }
    let mut rows: Vec<ReportRow> = Vec::new();
    for row in reports.iter().flat_map(|r| &r.rows) {
        if rows.iter().any(|r| r.key() == row.key()) {
            return Err(Error::Input(format!(
                "duplicate row for modality `{}` and model `{}`",
                row.modality, row.model
            )));
        }
        rows.push(row.clone());
    }
    rows.sort_by_key(|r| r.table_rank().unwrap_or(usize::MAX));
    Ok(AggregateReport { rows })
}
