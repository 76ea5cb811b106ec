//! Cross-validation protocols and sleep-scoring metrics.

mod cv;
pub mod metrics;
mod report;

pub use cv::{grouped_kfold, run_dt, run_lfs_cv, score, Dataset, EvalOutcome, FoldPlan, LabeledRecording, Prediction};
pub use metrics::{accuracy, cohen_kappa, log_loss, macro_f1, ConfusionMatrix, MetricsReport};
pub use report::{
    confusion_csv, predictions_csv, write_confusion_csv, write_predictions_csv, EvalReport, Protocol,
};
