use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with class 1 (palsy present) as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(preds: &[usize], labels: &[usize]) -> Result<ConfusionCounts> {
    if preds.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (i, (&p, &l)) in preds.iter().zip(labels).enumerate() {
        match (p, l) {
            (1, 1) => c.tp += 1,
            (1, 0) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (0, 1) => c.fn_ += 1,
            _ => {
                return Err(Error::Input(format!(
                    "entry {i}: prediction {p} / label {l} not in {{0, 1}}"
                )))
            }
        }
    }
    Ok(c)
}

/// Which metrics hit a zero denominator and were set to 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degenerate {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

/// Precision, recall and F1 in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: Degenerate,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (100.0 * num as f64 / den as f64, false)
    }
}

/// Zero denominators yield 0 with the matching degenerate flag set.
pub fn prf(c: &ConfusionCounts) -> Prf {
    let (precision, dp) = ratio(c.tp, c.tp + c.fp);
    let (recall, dr) = ratio(c.tp, c.tp + c.fn_);
    let (f1, df) = if precision + recall > 0.0 {
        (2.0 * precision * recall / (precision + recall), false)
    } else {
        (0.0, true)
    };
    Prf {
        precision,
        recall,
        f1,
        degenerate: Degenerate {
            precision: dp,
            recall: dr,
            f1: df,
        },
    }
}

/// Metrics for one held-out patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub patient_id: String,
    pub counts: ConfusionCounts,
    pub metrics: Prf,
}

impl FoldMetrics {
    pub fn new(patient_id: impl Into<String>, counts: ConfusionCounts) -> Self {
        Self {
            patient_id: patient_id.into(),
            metrics: prf(&counts),
            counts,
        }
    }

    pub fn from_predictions(patient_id: impl Into<String>, preds: &[usize], labels: &[usize]) -> Result<Self> {
        Ok(Self::new(patient_id, confusion(preds, labels)?))
    }
}

/// Macro averages over folds, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Unweighted mean over folds; degenerate folds count at their recorded 0.
pub fn aggregate_lopo(folds: &[FoldMetrics]) -> Result<Averages> {
    if folds.is_empty() {
        return Err(Error::Protocol("cannot average zero folds".into()));
    }
    // Sum in patient-id order so the result does not depend on fold order.
    let mut sorted: Vec<&FoldMetrics> = folds.iter().collect();
    sorted.sort_by(|a, b| a.patient_id.cmp(&b.patient_id));
    let n = folds.len() as f64;
    let mean = |f: fn(&Prf) -> f64| sorted.iter().map(|m| f(&m.metrics)).sum::<f64>() / n;
    Ok(Averages {
        f1: mean(|m| m.f1),
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
    })
}
