//! Confusion counts, precision/recall/F1 in percent, macro averaging over
//! leave-one-patient-out folds, and the comma-separated results tables.

mod metrics;
mod report;

pub use metrics::{aggregate_lopo, confusion, prf, Averages, ConfusionCounts, Degenerate, FoldMetrics, Prf};
pub use report::{
    emit_report, format_2dp, merge_reports, parse_report, parse_report_str, write_fold_details, write_report,
    AggregateReport, FoldDetail, ReportRow, Selection, FOLDS_FILE, FOLD_HEADER, REPORT_FILE, REPORT_HEADER,
};
