//! Subject-grouped cross-validation and cross-dataset transfer.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{concatenate, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::metrics::MetricsReport;
use crate::error::{Error, Result};
use crate::labels::{SleepStage, CLASSES};
use crate::model::{fit_pipeline, LinearPipeline, LogisticOptions, TrainingMeta};

/// One recording's labelled feature rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecording {
    pub subject_id: String,
    pub recording_id: String,
    pub epoch_index: Vec<usize>,
    pub features: Array2<f64>,
    pub stages: Vec<SleepStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub schema_hash: String,
    pub recordings: Vec<LabeledRecording>,
}

impl Dataset {
    pub fn subjects(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.recordings.iter().map(|r| &r.subject_id).collect();
        set.into_iter().cloned().collect()
    }

    pub fn n_rows(&self) -> usize {
        self.recordings.iter().map(|r| r.stages.len()).sum()
    }

    fn validate(&self) -> Result<()> {
        for r in &self.recordings {
            if r.features.nrows() != r.stages.len() || r.epoch_index.len() != r.stages.len() {
                return Err(Error::Eval(format!("{}: feature rows and labels differ in length", r.recording_id)));
            }
        }
        Ok(())
    }
}

fn stack<'a>(recs: impl Iterator<Item = &'a LabeledRecording>) -> Result<(Array2<f64>, Vec<SleepStage>)> {
    let recs: Vec<&LabeledRecording> = recs.collect();
    let views: Vec<ArrayView2<f64>> = recs.iter().map(|r| r.features.view()).collect();
    if views.is_empty() {
        return Err(Error::Eval("no recordings selected".into()));
    }
    let x = concatenate(Axis(0), &views).map_err(|e| Error::Eval(e.to_string()))?;
    let y = recs.iter().flat_map(|r| r.stages.iter().copied()).collect();
    Ok((x, y))
}

/// Subject to fold assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, subject: &str) -> Option<usize> {
        self.assignments.get(subject).copied()
    }

    pub fn subjects_in(&self, fold: usize) -> Vec<&str> {
        self.assignments.iter().filter(|(_, &f)| f == fold).map(|(s, _)| s.as_str()).collect()
    }
}

/// Distinct subjects, sorted, dealt round-robin into `k` folds.
pub fn grouped_kfold(subjects: &[String], k: usize) -> Result<FoldPlan> {
    let distinct: BTreeSet<&String> = subjects.iter().collect();
    if k == 0 || k > distinct.len() {
        return Err(Error::Eval(format!("k = {k} needs between 1 and {} distinct subjects", distinct.len())));
    }
    let assignments = distinct.into_iter().enumerate().map(|(i, s)| (s.clone(), i % k)).collect();
    Ok(FoldPlan { k, assignments })
}

/// One scored epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fold: Option<usize>,
    pub subject_id: String,
    pub recording_id: String,
    pub epoch_index: usize,
    pub truth: SleepStage,
    pub pred: SleepStage,
    pub proba: [f64; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub per_fold: Vec<MetricsReport>,
    pub pooled: MetricsReport,
    pub predictions: Vec<Prediction>,
}

fn predict_recordings(
    model: &LinearPipeline,
    schema_hash: &str,
    recs: &[&LabeledRecording],
    fold: Option<usize>,
) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for r in recs {
        if r.stages.is_empty() {
            continue;
        }
        let proba = model.predict_proba(r.features.view(), schema_hash)?;
        for (i, row) in proba.axis_iter(Axis(0)).enumerate() {
            let p: [f64; 5] = row.to_vec().try_into().expect("five classes");
            out.push(Prediction {
                fold,
                subject_id: r.subject_id.clone(),
                recording_id: r.recording_id.clone(),
                epoch_index: r.epoch_index[i],
                truth: r.stages[i],
                pred: CLASSES[crate::model::logistic::argmax(&p)],
                proba: p,
            });
        }
    }
    Ok(out)
}

pub fn score(predictions: &[Prediction], fold_id: Option<usize>) -> Result<MetricsReport> {
    let truth: Vec<SleepStage> = predictions.iter().map(|p| p.truth).collect();
    let pred: Vec<SleepStage> = predictions.iter().map(|p| p.pred).collect();
    let proba = Array2::from_shape_fn((predictions.len(), 5), |(r, c)| predictions[r].proba[c]);
    MetricsReport::new(&truth, &pred, Some(proba.view()), fold_id)
}

/// Learning-from-scratch cross-validation: for every fold, fit on the
/// other folds' subjects and score this fold's. The pooled report scores
/// all test predictions together.
pub fn run_lfs_cv(dataset: &Dataset, plan: &FoldPlan, opts: &LogisticOptions) -> Result<EvalOutcome> {
    dataset.validate()?;
    let mut per_fold = Vec::with_capacity(plan.k);
    let mut predictions = Vec::new();
    for fold in 0..plan.k {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for r in &dataset.recordings {
            match plan.fold_of(&r.subject_id) {
                Some(f) if f == fold => test.push(r),
                Some(_) => train.push(r),
                None => return Err(Error::Eval(format!("subject {} is not in the fold plan", r.subject_id))),
            }
        }
        let train_subjects: BTreeSet<&str> = train.iter().map(|r| r.subject_id.as_str()).collect();
        if let Some(s) = test.iter().find(|r| train_subjects.contains(r.subject_id.as_str())) {
            return Err(Error::Eval(format!("subject {} is in both train and test of fold {fold}", s.subject_id)));
        }
        if test.iter().all(|r| r.stages.is_empty()) {
            log::warn!("fold {fold} has no labelled test epochs; skipping");
            continue;
        }
        let (x, y) = stack(train.iter().copied())?;
        let meta = TrainingMeta {
            dataset: dataset.name.clone(),
            fold: Some(fold),
            subjects: train_subjects.iter().map(|s| s.to_string()).collect(),
            ..TrainingMeta::default()
        };
        let model = fit_pipeline(x.view(), &y, &dataset.schema_hash, opts, meta)
            .map_err(|e| Error::Eval(format!("fold {fold}: {e}")))?;
        let preds = predict_recordings(&model, &dataset.schema_hash, &test, Some(fold))?;
        per_fold.push(score(&preds, Some(fold))?);
        predictions.extend(preds);
    }
    let pooled = score(&predictions, None)?;
    Ok(EvalOutcome { per_fold, pooled, predictions })
}

/// Direct transfer: one fit on `train` (minus `exclude_subjects`), scored
/// on all of `eval`. Shared subjects are an error unless `allow_overlap`.
pub fn run_dt(
    train: &Dataset,
    eval: &Dataset,
    opts: &LogisticOptions,
    exclude_subjects: &[String],
    allow_overlap: bool,
) -> Result<(EvalOutcome, LinearPipeline)> {
    train.validate()?;
    eval.validate()?;
    if train.schema_hash != eval.schema_hash {
        return Err(Error::SchemaMismatch {
            expected: train.schema_hash.clone(),
            found: eval.schema_hash.clone(),
        });
    }
    let excluded: BTreeSet<&str> = exclude_subjects.iter().map(String::as_str).collect();
    let train_recs: Vec<&LabeledRecording> =
        train.recordings.iter().filter(|r| !excluded.contains(r.subject_id.as_str())).collect();
    let train_subjects: BTreeSet<&str> = train_recs.iter().map(|r| r.subject_id.as_str()).collect();
    if !allow_overlap {
        if let Some(r) = eval.recordings.iter().find(|r| train_subjects.contains(r.subject_id.as_str())) {
            return Err(Error::Eval(format!(
                "subject {} appears in both training and evaluation data",
                r.subject_id
            )));
        }
    }
    let (x, y) = stack(train_recs.iter().copied())?;
    let meta = TrainingMeta {
        dataset: train.name.clone(),
        fold: None,
        subjects: train_subjects.iter().map(|s| s.to_string()).collect(),
        ..TrainingMeta::default()
    };
    let model = fit_pipeline(x.view(), &y, &train.schema_hash, opts, meta)?;
    let eval_recs: Vec<&LabeledRecording> = eval.recordings.iter().collect();
    let predictions = predict_recordings(&model, &eval.schema_hash, &eval_recs, None)?;
    let pooled = score(&predictions, None)?;
    Ok((EvalOutcome { per_fold: vec![pooled.clone()], pooled, predictions }, model))
}
