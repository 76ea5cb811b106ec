//! Report files: run summary JSON, confusion matrix CSV, per-epoch predictions CSV.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cv::Prediction;
use super::metrics::{ConfusionMatrix, MetricsReport};
use crate::error::{Error, Result};
use crate::labels::CLASSES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Protocol {
    Lfs,
    Dt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub protocol: Protocol,
    pub k: Option<usize>,
    pub per_fold: Vec<MetricsReport>,
    pub pooled: MetricsReport,
    pub config_digest: String,
    pub schema_hash: String,
    /// Seconds per stage. The only field that varies between identical runs.
    pub wall_times: BTreeMap<String, f64>,
}

pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let mut out = String::from("truth\\pred");
    for c in CLASSES {
        out.push(',');
        out.push_str(c.as_str());
    }
    out.push('\n');
    for (k, row) in m.counts.iter().enumerate() {
        out.push_str(CLASSES[k].as_str());
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_confusion_csv(m: &ConfusionMatrix, path: &Path) -> Result<()> {
    std::fs::write(path, confusion_csv(m)).map_err(|e| Error::io(path, e))
}

pub fn predictions_csv(predictions: &[Prediction]) -> String {
    let mut out = String::from("subject_id,recording_id,epoch_index,truth,pred");
    for c in CLASSES {
        let _ = write!(out, ",p_{}", c.as_str());
    }
    out.push('\n');
    for p in predictions {
        let _ = write!(out, "{},{},{},{},{}", p.subject_id, p.recording_id, p.epoch_index, p.truth, p.pred);
        for v in p.proba {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

pub fn write_predictions_csv(predictions: &[Prediction], path: &Path) -> Result<()> {
    std::fs::write(path, predictions_csv(predictions)).map_err(|e| Error::io(path, e))
}
