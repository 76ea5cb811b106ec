//! Linear sleep-stage model: quantile transform, multinomial logistic
//! regression, and a PCA projection for inspecting feature space.

pub mod logistic;
pub mod pca;
mod pipeline;
pub mod quantile;

pub use logistic::{fit_logistic, objective_and_gradient, FitReport, LogisticModel, LogisticOptions};
pub use pca::{fit_pca, PcaModel};
pub use pipeline::{fit_pipeline, LinearPipeline, ModelFile, TrainingMeta, MODEL_FORMAT_VERSION};
pub use quantile::{fit_quantile, QuantileTransform, N_REFERENCES};
