//! Run configuration: one JSON file, a few scalar fields overridable from
//! the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hypnos_core::features::FeatureParams;
use hypnos_core::model::LogisticOptions;
use hypnos_core::preprocess::PreprocessConfig;
use hypnos_core::signal::Montage;
use hypnos_core::windowing::FeatureSchema;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub preprocessing: PreprocessConfig,
    #[serde(default)]
    pub features: FeatureParams,
    #[serde(default)]
    pub model: LogisticOptions,
    #[serde(default)]
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses one per CPU.
    #[serde(default)]
    pub parallelism: usize,
    /// Recorded in every artifact. The pipeline itself draws no random numbers.
    #[serde(default)]
    pub seed: u64,
    /// Also write each feature matrix as CSV.
    #[serde(default)]
    pub write_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    /// Explicitly listed recordings.
    #[serde(default)]
    pub recordings: Vec<RecordingEntry>,
    /// Glob patterns for PSG files, resolved relative to the config file.
    #[serde(default)]
    pub psg_globs: Vec<String>,
    #[serde(default)]
    pub hypnogram: HypnogramSource,
    #[serde(default)]
    pub subject_id: SubjectRule,
    #[serde(default)]
    pub montage: MontageChoice,
    /// Keep only the sleep period plus 30 minutes of wake on either side.
    #[serde(default)]
    pub trim_wake: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingEntry {
    pub psg: PathBuf,
    /// Hypnogram file; when absent the dataset's hypnogram rule decides.
    #[serde(default)]
    pub hypnogram: Option<PathBuf>,
    #[serde(default)]
    pub subject_id: Option<String>,
    #[serde(default)]
    pub recording_id: Option<String>,
}

/// Where stage labels come from when a recording does not name a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum HypnogramSource {
    /// `epoch_index,stage` CSV next to the PSG: `{stem}{suffix}`.
    CsvSidecar {
        #[serde(default = "default_csv_suffix")]
        suffix: String,
    },
    /// Stage annotations inside the PSG file itself.
    EdfAnnotations,
    /// Separate EDF+ annotation file sharing the first six characters of
    /// the PSG name and ending in `-Hypnogram.edf`.
    #[default]
    SleepEdfPair,
}

fn default_csv_suffix() -> String {
    ".hypnogram.csv".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubjectRule {
    /// `SC4ssN...` / `ST7ssN...`: the two-letter study code and subject number.
    #[default]
    SleepEdf,
    /// The file stem, i.e. one subject per recording.
    FileStem,
    /// The first `len` characters of the file name.
    Prefix { len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MontageChoice {
    Named(String),
    Custom(Montage),
}

impl Default for MontageChoice {
    fn default() -> Self {
        MontageChoice::Named("sleep_edf".into())
    }
}

impl MontageChoice {
    pub fn resolve(&self) -> Result<Montage> {
        let m = match self {
            MontageChoice::Named(n) if n == "sleep_edf" => Montage::sleep_edf(),
            MontageChoice::Named(n) if n == "mass_ss3" => Montage::mass_ss3(),
            MontageChoice::Named(n) => bail!("unknown montage {n:?} (expected sleep_edf, mass_ss3 or a list of outputs)"),
            MontageChoice::Custom(m) => m.clone(),
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProtocolChoice {
    #[default]
    Lfs,
    Dt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub protocol: ProtocolChoice,
    /// Folds for LFS; `null` means one fold per subject.
    pub k: Option<usize>,
    /// DT only: feature directory of the training dataset (an `extract` output).
    pub train_features: Option<PathBuf>,
    /// Subjects left out of training (DT) or of the whole run (train).
    pub exclude_subjects: Vec<String>,
    pub allow_subject_overlap: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            protocol: ProtocolChoice::Lfs,
            k: None,
            train_features: None,
            exclude_subjects: Vec::new(),
            allow_subject_overlap: false,
        }
    }
}

/// Scalar overrides from command-line flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub parallelism: Option<usize>,
    pub k: Option<usize>,
    pub l2: Option<f64>,
    pub seed: Option<u64>,
}

fn sha256_json(value: &serde_json::Value) -> String {
    // serde_json maps are sorted by key, so this text is canonical.
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(d) = &overrides.output_dir {
            cfg.output_dir = d.clone();
        } else if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        if let Some(p) = overrides.parallelism {
            cfg.parallelism = p;
        }
        if let Some(k) = overrides.k {
            cfg.eval.k = Some(k);
        }
        if let Some(l2) = overrides.l2 {
            cfg.model.l2_strength = l2;
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok((cfg, base))
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.montage.resolve()?;
        if self.dataset.name.trim().is_empty() {
            bail!("dataset.name must not be empty");
        }
        if !(self.model.l2_strength >= 0.0) {
            bail!("model.l2_strength must be >= 0");
        }
        if self.eval.k == Some(0) {
            bail!("eval.k must be >= 1");
        }
        Ok(())
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        Ok(FeatureSchema::new(&self.dataset.montage.resolve()?.kinds())?)
    }

    /// Digest of everything that affects results. Output location and
    /// worker count are excluded: they change neither features nor models.
    pub fn config_digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serialises");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
            obj.remove("parallelism");
        }
        sha256_json(&v)
    }

    /// Digest of the settings feature matrices depend on.
    pub fn extraction_digest(&self) -> Result<String> {
        let v = serde_json::json!({
            "montage": self.dataset.montage.resolve()?,
            "hypnogram": self.dataset.hypnogram,
            "trim_wake": self.dataset.trim_wake,
            "preprocessing": self.preprocessing,
            "features": self.features,
            "schema_hash": self.schema()?.hash(),
        });
        Ok(sha256_json(&v))
    }

    pub fn features_dir(&self) -> PathBuf {
        self.output_dir.join("features")
    }
}
