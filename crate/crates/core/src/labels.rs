//! Hypnograms: stage decoding, R&K to AASM mapping, invalid-epoch exclusion
//! and wake trimming.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Annotation;
use crate::windowing::{EpochFeatureMatrix, EPOCH_S};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SleepStage {
    W,
    N1,
    N2,
    N3,
    N4,
    #[serde(rename = "REM")]
    Rem,
    #[serde(rename = "MOVEMENT")]
    Movement,
    #[serde(rename = "UNKNOWN")]
    Unknown,
}

/// The five classes a model predicts, in output order.
pub const CLASSES: [SleepStage; 5] = [SleepStage::W, SleepStage::N1, SleepStage::N2, SleepStage::N3, SleepStage::Rem];

impl SleepStage {
    pub fn as_str(&self) -> &'static str {
        match self {
            SleepStage::W => "W",
            SleepStage::N1 => "N1",
            SleepStage::N2 => "N2",
            SleepStage::N3 => "N3",
            SleepStage::N4 => "N4",
            SleepStage::Rem => "REM",
            SleepStage::Movement => "MOVEMENT",
            SleepStage::Unknown => "UNKNOWN",
        }
    }

    /// Index into [`CLASSES`], if this is a model class.
    pub fn class_index(&self) -> Option<usize> {
        CLASSES.iter().position(|c| c == self)
    }

    pub fn is_sleep(&self) -> bool {
        matches!(self, SleepStage::N1 | SleepStage::N2 | SleepStage::N3 | SleepStage::N4 | SleepStage::Rem)
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, SleepStage::Movement | SleepStage::Unknown)
    }
}

impl fmt::Display for SleepStage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SleepStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "W" => SleepStage::W,
            "N1" => SleepStage::N1,
            "N2" => SleepStage::N2,
            "N3" => SleepStage::N3,
            "N4" => SleepStage::N4,
            "REM" => SleepStage::Rem,
            "MOVEMENT" => SleepStage::Movement,
            "UNKNOWN" => SleepStage::Unknown,
            other => return Err(Error::Hypnogram(format!("unknown stage label {other:?}"))),
        })
    }
}

const STAGE_TABLE: &str = include_str!("../data/stage_labels.tsv");

/// Annotation text to stage, from the table shipped with the crate.
pub fn stage_lookup() -> &'static HashMap<String, SleepStage> {
    static TABLE: OnceLock<HashMap<String, SleepStage>> = OnceLock::new();
    TABLE.get_or_init(|| {
        STAGE_TABLE
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .map(|l| {
                let (text, stage) = l.split_once('\t').expect("tab-separated stage table");
                (text.to_string(), stage.trim().parse().expect("valid stage in stage table"))
            })
            .collect()
    })
}

pub fn stage_from_annotation(text: &str) -> Option<SleepStage> {
    stage_lookup().get(text.trim()).copied()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypnogram {
    pub epoch_s: u64,
    pub stages: Vec<SleepStage>,
    pub subject_id: String,
    pub recording_id: String,
}

impl Hypnogram {
    pub fn new(subject_id: impl Into<String>, recording_id: impl Into<String>, stages: Vec<SleepStage>) -> Self {
        Hypnogram {
            epoch_s: EPOCH_S,
            stages,
            subject_id: subject_id.into(),
            recording_id: recording_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for s in &self.stages {
            *out.entry(s.as_str().to_string()).or_insert(0) += 1;
        }
        out
    }

    /// Pad with UNKNOWN or cut to exactly `n` epochs.
    pub fn fit_to(&mut self, n: usize) {
        self.stages.resize(n, SleepStage::Unknown);
    }
}

/// Build a hypnogram over `floor(recording_duration_s / 30)` epochs from
/// stage annotations. Texts that are not stage labels are ignored; an
/// annotation without a duration covers one epoch.
pub fn annotations_to_hypnogram(
    annotations: &[Annotation],
    recording_duration_s: f64,
    subject_id: &str,
    recording_id: &str,
) -> Result<Hypnogram> {
    let epoch = EPOCH_S as f64;
    let n = (recording_duration_s / epoch).floor().max(0.0) as usize;
    let mut stages = vec![SleepStage::Unknown; n];
    let mut source: Vec<Option<f64>> = vec![None; n];
    for a in annotations {
        let Some(stage) = stage_from_annotation(&a.text) else {
            continue;
        };
        let first = (a.onset_s / epoch).round().max(0.0) as usize;
        let count = (a.duration_s.unwrap_or(epoch) / epoch).round() as usize;
        for e in first..(first + count).min(n) {
            match source[e] {
                Some(prev) if stages[e] != stage => {
                    return Err(Error::Hypnogram(format!(
                        "annotations at {prev} s and {} s assign epoch {e} both {} and {stage}",
                        a.onset_s, stages[e]
                    )));
                }
                _ => {
                    stages[e] = stage;
                    source[e] = Some(a.onset_s);
                }
            }
        }
    }
    Ok(Hypnogram::new(subject_id, recording_id, stages))
}

/// Merge N4 into N3. Every other stage is kept.
pub fn map_rk_to_aasm(h: &Hypnogram) -> Hypnogram {
    let mut out = h.clone();
    for s in out.stages.iter_mut() {
        if *s == SleepStage::N4 {
            *s = SleepStage::N3;
        }
    }
    out
}

/// Drop rows labelled MOVEMENT or UNKNOWN from both the stage list and the
/// matrix, keeping order.
pub fn exclude_invalid(h: &Hypnogram, features: &EpochFeatureMatrix) -> Result<(Hypnogram, EpochFeatureMatrix)> {
    if h.len() != features.n_rows() {
        return Err(Error::Hypnogram(format!(
            "{} stages for {} feature rows in {}",
            h.len(),
            features.n_rows(),
            h.recording_id
        )));
    }
    let keep: Vec<usize> = (0..h.len()).filter(|&i| !h.stages[i].is_invalid()).collect();
    if keep.is_empty() {
        log::warn!("{}: every epoch is MOVEMENT or UNKNOWN", h.recording_id);
    }
    let mut kept = h.clone();
    kept.stages = keep.iter().map(|&i| h.stages[i]).collect();
    Ok((kept, features.select_rows(&keep)))
}

/// Wake trimming margin on each side of the sleep period (30 minutes).
pub const TRIM_MARGIN_EPOCHS: usize = 60;

/// `[max(0, first_sleep - 60), min(n, last_sleep + 61))`.
pub fn trim_wake(h: &Hypnogram) -> Result<Range<usize>> {
    let first = h.stages.iter().position(SleepStage::is_sleep);
    let last = h.stages.iter().rposition(SleepStage::is_sleep);
    match (first, last) {
        (Some(f), Some(l)) => Ok(f.saturating_sub(TRIM_MARGIN_EPOCHS)..(l + TRIM_MARGIN_EPOCHS + 1).min(h.len())),
        _ => Err(Error::Hypnogram(format!("{}: no sleep epochs, nothing to trim to", h.recording_id))),
    }
}

/// Per-recording summary written next to each feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub subject_id: String,
    pub recording_id: String,
    pub n_epochs: usize,
    pub raw_counts: BTreeMap<String, usize>,
    pub kept_counts: BTreeMap<String, usize>,
    pub excluded: usize,
    pub trim_range: Option<[usize; 2]>,
}

/// Read a `epoch_index,stage` CSV. Indices must run 0, 1, 2, ...
pub fn read_hypnogram_csv(path: &Path, subject_id: &str, recording_id: &str) -> Result<Hypnogram> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, header)) if header.trim() == "epoch_index,stage" => {}
        _ => {
            return Err(Error::Hypnogram(format!(
                "{}: expected header line `epoch_index,stage`",
                path.display()
            )))
        }
    }
    let mut stages = Vec::new();
    for (lineno, line) in lines {
        let bad = |msg: &str| Error::Hypnogram(format!("{}:{}: {msg}", path.display(), lineno + 1));
        let (idx, stage) = line.split_once(',').ok_or_else(|| bad("expected two fields"))?;
        let idx: usize = idx.trim().parse().map_err(|_| bad("epoch_index is not an integer"))?;
        if idx != stages.len() {
            return Err(bad(&format!("expected epoch_index {}, found {idx}", stages.len())));
        }
        stages.push(stage.trim().parse().map_err(|e: Error| bad(&e.to_string()))?);
    }
    Ok(Hypnogram::new(subject_id, recording_id, stages))
}

pub fn write_hypnogram_csv(h: &Hypnogram, path: &Path) -> Result<()> {
    let mut out = String::from("epoch_index,stage\n");
    for (i, s) in h.stages.iter().enumerate() {
        out.push_str(&format!("{i},{s}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
