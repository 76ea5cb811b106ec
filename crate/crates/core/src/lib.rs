//! Classical sleep-stage scoring: EDF ingestion, filtering and resampling,
//! multi-resolution epoch features, a quantile-transformed logistic model,
//! and subject-grouped evaluation.

pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod labels;
pub mod model;
pub mod preprocess;
pub mod signal;
pub mod windowing;

pub use error::{Error, Result};
pub use eval::{Dataset, EvalReport, FoldPlan, LabeledRecording, MetricsReport, Protocol};
pub use features::{FeatureId, FeatureParams};
pub use labels::{Hypnogram, LabelReport, SleepStage, CLASSES};
pub use model::{LinearPipeline, LogisticOptions, PcaModel};
pub use preprocess::PreprocessConfig;
pub use signal::{Channel, ChannelKind, Montage, Recording, SampleRate};
pub use windowing::{EpochFeatureMatrix, FeatureSchema, Placement};
