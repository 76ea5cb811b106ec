//! Classification metrics over the five model classes. Everything except
//! log loss is computed from integer confusion counts.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::{SleepStage, CLASSES};

const N: usize = CLASSES.len();
pub const LOG_LOSS_EPS: f64 = 1e-15;

/// Rows are true stages, columns predicted stages, both in [`CLASSES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; N]; N],
}

fn index(stage: SleepStage) -> Result<usize> {
    stage
        .class_index()
        .ok_or_else(|| Error::Eval(format!("{stage} is not a model class")))
}

impl ConfusionMatrix {
    pub fn from_labels(truth: &[SleepStage], pred: &[SleepStage]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::Eval(format!("{} truths but {} predictions", truth.len(), pred.len())));
        }
        let mut m = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(pred) {
            m.counts[index(t)?][index(p)?] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..N).map(|k| self.counts[k][k]).sum()
    }

    pub fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    pub fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    fn require_nonempty(&self) -> Result<u64> {
        match self.total() {
            0 => Err(Error::Eval("no epochs to score".into())),
            n => Ok(n),
        }
    }

    pub fn accuracy(&self) -> Result<f64> {
        let n = self.require_nonempty()?;
        Ok(self.trace() as f64 / n as f64)
    }

    /// Cohen's kappa, `(n·trace − S) / (n² − S)` with `S = Σ row_k·col_k`,
    /// evaluated in integers and rounded once. 0 when chance agreement is 1.
    pub fn cohen_kappa(&self) -> Result<f64> {
        let n = self.require_nonempty()? as i128;
        let chance: i128 = (0..N).map(|k| self.row_sum(k) as i128 * self.col_sum(k) as i128).sum();
        let denom = n * n - chance;
        if denom == 0 {
            return Ok(0.0);
        }
        Ok((n * self.trace() as i128 - chance) as f64 / denom as f64)
    }

    /// Per-class F1, `2·tp / (2·tp + fp + fn)`; 0 for a class that occurs
    /// in neither truth nor prediction.
    pub fn per_class_f1(&self) -> [f64; N] {
        let mut out = [0.0; N];
        for (k, o) in out.iter_mut().enumerate() {
            let tp = self.counts[k][k];
            let denom = self.row_sum(k) + self.col_sum(k);
            if denom > 0 {
                *o = (2 * tp) as f64 / denom as f64;
            }
        }
        out
    }

    /// Mean F1 over the classes that occur in the truth or the prediction.
    pub fn macro_f1(&self) -> Result<f64> {
        self.require_nonempty()?;
        let f1 = self.per_class_f1();
        let present: Vec<usize> = (0..N).filter(|&k| self.row_sum(k) + self.col_sum(k) > 0).collect();
        Ok(present.iter().map(|&k| f1[k]).sum::<f64>() / present.len() as f64)
    }
}

/// Mean negative log-probability of the true class, probabilities clipped
/// to `[1e-15, 1 - 1e-15]`. `proba` columns follow [`CLASSES`].
pub fn log_loss(truth: &[SleepStage], proba: ArrayView2<f64>) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Eval("no epochs to score".into()));
    }
    if proba.nrows() != truth.len() || proba.ncols() != N {
        return Err(Error::Eval(format!(
            "probability matrix is {}x{}, expected {}x{N}",
            proba.nrows(),
            proba.ncols(),
            truth.len()
        )));
    }
    let mut total = 0.0;
    for (r, &t) in truth.iter().enumerate() {
        let p = proba[[r, index(t)?]].clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
        total -= p.ln();
    }
    Ok(total / truth.len() as f64)
}

pub fn accuracy(truth: &[SleepStage], pred: &[SleepStage]) -> Result<f64> {
    ConfusionMatrix::from_labels(truth, pred)?.accuracy()
}

pub fn cohen_kappa(truth: &[SleepStage], pred: &[SleepStage]) -> Result<f64> {
    ConfusionMatrix::from_labels(truth, pred)?.cohen_kappa()
}

pub fn macro_f1(truth: &[SleepStage], pred: &[SleepStage]) -> Result<f64> {
    ConfusionMatrix::from_labels(truth, pred)?.macro_f1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub fold_id: Option<usize>,
    pub n_epochs: u64,
    pub mf1: f64,
    pub acc: f64,
    pub kappa: f64,
    pub log_loss: Option<f64>,
    /// F1 per class, in [`CLASSES`] order.
    pub per_class_f1: Vec<f64>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn new(
        truth: &[SleepStage],
        pred: &[SleepStage],
        proba: Option<ArrayView2<f64>>,
        fold_id: Option<usize>,
    ) -> Result<Self> {
        let confusion = ConfusionMatrix::from_labels(truth, pred)?;
        Ok(MetricsReport {
            fold_id,
            n_epochs: confusion.total(),
            mf1: confusion.macro_f1()?,
            acc: confusion.accuracy()?,
            kappa: confusion.cohen_kappa()?,
            log_loss: proba.map(|p| log_loss(truth, p)).transpose()?,
            per_class_f1: confusion.per_class_f1().to_vec(),
            confusion,
        })
    }
}
