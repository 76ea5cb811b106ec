//! Quantile transform followed by logistic regression, with a versioned
//! JSON file format.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::logistic::{argmax, fit_logistic, FitReport, LogisticModel, LogisticOptions};
use super::quantile::{fit_quantile, QuantileTransform};
use crate::error::{Error, Result};
use crate::labels::{SleepStage, CLASSES};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub dataset: String,
    pub fold: Option<usize>,
    pub subjects: Vec<String>,
    pub n_rows: usize,
    pub config_digest: Option<String>,
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPipeline {
    pub schema_hash: String,
    /// Classes seen in training, in [`CLASSES`] order. Weight row `k` belongs to `classes[k]`.
    pub classes: Vec<SleepStage>,
    pub quantile: QuantileTransform,
    pub logistic: LogisticModel,
    pub meta: TrainingMeta,
}

/// Fit the transform and the classifier on `x`. Stages must be model classes.
/// Classes absent from `y` get no weights and always receive probability 0.
pub fn fit_pipeline(
    x: ArrayView2<f64>,
    y: &[SleepStage],
    schema_hash: &str,
    opts: &LogisticOptions,
    mut meta: TrainingMeta,
) -> Result<LinearPipeline> {
    let classes: Vec<SleepStage> = CLASSES.iter().copied().filter(|c| y.contains(c)).collect();
    if let Some(bad) = y.iter().find(|s| s.class_index().is_none()) {
        return Err(Error::Model(format!("stage {bad} is not a model class")));
    }
    let labels: Vec<usize> = y
        .iter()
        .map(|s| classes.iter().position(|c| c == s).expect("present"))
        .collect();
    let quantile = fit_quantile(x)?;
    let xt = quantile.apply(x)?;
    let (logistic, report) = fit_logistic(xt.view(), &labels, classes.len(), opts)?;
    meta.n_rows = x.nrows();
    meta.fit = Some(report);
    Ok(LinearPipeline {
        schema_hash: schema_hash.to_string(),
        classes,
        quantile,
        logistic,
        meta,
    })
}

impl LinearPipeline {
    fn check_schema(&self, schema_hash: &str) -> Result<()> {
        if schema_hash != self.schema_hash {
            return Err(Error::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found: schema_hash.to_string(),
            });
        }
        Ok(())
    }

    /// Probabilities over all five [`CLASSES`], `n × 5`.
    pub fn predict_proba(&self, x: ArrayView2<f64>, schema_hash: &str) -> Result<Array2<f64>> {
        self.check_schema(schema_hash)?;
        let p = self.logistic.predict_proba(self.quantile.apply(x)?.view())?;
        let mut out = Array2::zeros((x.nrows(), CLASSES.len()));
        for (k, c) in self.classes.iter().enumerate() {
            let col = c.class_index().expect("model class");
            out.column_mut(col).assign(&p.column(k));
        }
        Ok(out)
    }

    pub fn predict(&self, x: ArrayView2<f64>, schema_hash: &str) -> Result<Vec<SleepStage>> {
        let p = self.predict_proba(x, schema_hash)?;
        Ok(p.axis_iter(Axis(0))
            .map(|r| CLASSES[argmax(r.as_slice().expect("row"))])
            .collect())
    }

    pub fn to_file(&self) -> ModelFile {
        let dec = |v: &f64| format!("{v:?}");
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: self.schema_hash.clone(),
            classes: self.classes.iter().map(|c| c.as_str().to_string()).collect(),
            quantile_references: self.quantile.references.clone(),
            weights: self.logistic.weights.axis_iter(Axis(0)).map(|r| r.iter().map(dec).collect()).collect(),
            biases: self.logistic.biases.iter().map(dec).collect(),
            l2_strength: self.logistic.l2_strength,
            training_meta: self.meta.clone(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format version {}", file.format_version)));
        }
        let classes = file
            .classes
            .iter()
            .map(|c| c.parse::<SleepStage>())
            .collect::<Result<Vec<_>>>()?;
        if classes.len() != file.weights.len() || classes.len() != file.biases.len() || classes.len() < 2 {
            return Err(Error::Format("class, weight and bias counts disagree".into()));
        }
        let d = file.quantile_references.len();
        let parse = |s: &String| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Format(format!("bad decimal {s:?} in model file")))
        };
        let mut weights = Array2::zeros((classes.len(), d));
        for (k, row) in file.weights.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Format(format!("weight row {k} has {} entries, expected {d}", row.len())));
            }
            for (j, s) in row.iter().enumerate() {
                weights[[k, j]] = parse(s)?;
            }
        }
        let biases = file.biases.iter().map(parse).collect::<Result<Array1<f64>>>()?;
        Ok(LinearPipeline {
            schema_hash: file.schema_hash,
            classes,
            quantile: QuantileTransform { references: file.quantile_references },
            logistic: LogisticModel { weights, biases, l2_strength: file.l2_strength },
            meta: file.training_meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(&self.to_file())?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_slice(&bytes)?)
    }
}

/// On-disk model. Weights and biases are decimal strings that parse back
/// to the exact same doubles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub schema_hash: String,
    pub classes: Vec<String>,
    pub quantile_references: Vec<Vec<f64>>,
    pub weights: Vec<Vec<String>>,
    pub biases: Vec<String>,
    pub l2_strength: f64,
    pub training_meta: TrainingMeta,
}
