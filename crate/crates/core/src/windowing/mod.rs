//! Multi-resolution epoch feature assembly: every 30-s epoch gets the
//! feature catalog evaluated on four window placements plus copies of the
//! 30-s block from the two epochs on either side.

mod extract;
mod io;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{feature_catalog, FeatureFamily, FeatureId, FeatureParams, TOTAL_HIGH_HZ};
use crate::signal::{ChannelKind, Recording};

pub use extract::{extract_features, extract_features_range, EpochFeatureMatrix};
pub use io::{
    read_matrix, read_sidecar, sidecar_path, write_matrix_binary, write_matrix_csv, MatrixSidecar, MATRIX_FORMAT_VERSION,
};

pub const EPOCH_S: u64 = 30;

/// Shifts (in epochs) of the copied 30-s block, in column order.
pub const SHIFTS: [i32; 4] = [-2, -1, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    W30,
    W60Left,
    W60Right,
    W90,
}

pub const PLACEMENTS: [Placement; 4] = [Placement::W30, Placement::W60Left, Placement::W60Right, Placement::W90];

impl Placement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Placement::W30 => "w30",
            Placement::W60Left => "w60_left",
            Placement::W60Right => "w60_right",
            Placement::W90 => "w90",
        }
    }

    /// Window start relative to the epoch start, in seconds.
    pub fn offset_s(&self) -> i64 {
        match self {
            Placement::W30 | Placement::W60Right => 0,
            Placement::W60Left | Placement::W90 => -30,
        }
    }

    pub fn span_s(&self) -> i64 {
        match self {
            Placement::W30 => 30,
            Placement::W60Left | Placement::W60Right => 60,
            Placement::W90 => 90,
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnDescriptor {
    pub channel: String,
    pub kind: ChannelKind,
    pub function: String,
    pub parameter: Option<String>,
    pub placement: Placement,
    pub shift: i32,
}

impl ColumnDescriptor {
    pub fn feature_name(&self) -> String {
        FeatureId { function: self.function.clone(), parameter: self.parameter.clone() }.name()
    }

    /// `{channel}__{feature}__{placement}__s{shift}`.
    pub fn name(&self) -> String {
        format!("{}__{}__{}__s{}", self.channel, self.feature_name(), self.placement, self.shift)
    }
}

/// Ordered column layout of a feature matrix. For each channel (montage
/// order) and each feature (catalog order) there are eight columns: the
/// four placements unshifted, then the 30-s value shifted by -2, -1, +1, +2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnDescriptor>,
}

pub const COLUMNS_PER_FEATURE: usize = PLACEMENTS.len() + SHIFTS.len();

impl FeatureSchema {
    pub fn new(channels: &[(String, ChannelKind)]) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidArgument("feature schema needs at least one channel".into()));
        }
        let mut columns = Vec::new();
        for (name, kind) in channels {
            for f in feature_catalog(*kind) {
                let col = |placement, shift| ColumnDescriptor {
                    channel: name.clone(),
                    kind: *kind,
                    function: f.function.clone(),
                    parameter: f.parameter.clone(),
                    placement,
                    shift,
                };
                columns.extend(PLACEMENTS.iter().map(|&p| col(p, 0)));
                columns.extend(SHIFTS.iter().map(|&s| col(Placement::W30, s)));
            }
        }
        Ok(FeatureSchema { columns })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(ColumnDescriptor::name).collect()
    }

    /// Channels in column order with their kinds.
    pub fn channels(&self) -> Vec<(String, ChannelKind)> {
        let mut out: Vec<(String, ChannelKind)> = Vec::new();
        for c in &self.columns {
            if out.last().map(|(n, _)| n != &c.channel).unwrap_or(true) {
                out.push((c.channel.clone(), c.kind));
            }
        }
        out
    }

    /// Hex SHA-256 of the column names joined by newlines.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.names().join("\n").as_bytes()))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Evaluate,
    Degenerate,
}

/// Whether a feature can be evaluated on a window of `n_samples` at
/// `fs_hz`. Welch-based features need a full segment and a rate whose
/// Nyquist frequency exceeds the top of the analysis band.
pub fn short_signal_policy(feature: &FeatureId, n_samples: usize, fs_hz: f64, params: &FeatureParams) -> Evaluation {
    let ok = match feature.family() {
        FeatureFamily::Time => n_samples >= feature.min_samples(params),
        FeatureFamily::Welch => {
            let seg = (params.welch_segment_s * fs_hz).round() as usize;
            seg >= 2 && n_samples >= seg && fs_hz > 2.0 * TOTAL_HIGH_HZ
        }
    };
    if ok {
        Evaluation::Evaluate
    } else {
        Evaluation::Degenerate
    }
}

/// Number of whole epochs in a recording; a trailing partial epoch is dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochGrid {
    pub n_epochs: usize,
    pub epoch_s: u64,
}

impl EpochGrid {
    pub fn start_s(&self, epoch: usize) -> u64 {
        epoch as u64 * self.epoch_s
    }
}

pub fn segment_epochs(recording: &Recording) -> Result<EpochGrid> {
    if recording.channels.is_empty() {
        return Err(Error::InvalidArgument(format!("recording {} has no channels", recording.recording_id)));
    }
    // Whole epochs fully covered by every channel.
    let n_epochs = recording
        .channels
        .iter()
        .map(|c| {
            let mut n = (c.samples.len() as f64 / c.rate.hz() / EPOCH_S as f64) as usize + 1;
            while n > 0 && c.rate.samples_in(n as u64 * EPOCH_S) > c.samples.len() {
                n -= 1;
            }
            n
        })
        .min()
        .unwrap_or(0);
    if n_epochs == 0 {
        return Err(Error::TooShort {
            needed: EPOCH_S as usize,
            got: recording.duration_s() as usize,
        });
    }
    Ok(EpochGrid { n_epochs, epoch_s: EPOCH_S })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{Channel, SampleRate};

    fn standard() -> Vec<(String, ChannelKind)> {
        vec![
            ("EEG1".into(), ChannelKind::Eeg),
            ("EEG2".into(), ChannelKind::Eeg),
            ("EOG".into(), ChannelKind::Eog),
            ("EMG".into(), ChannelKind::Emg),
        ]
    }

    #[test]
    fn schema_has_1048_columns() {
        let s = FeatureSchema::new(&standard()).unwrap();
        assert_eq!(s.len(), 1048);
        assert_eq!(s.names()[0], "EEG1__std__w30__s0");
        assert_eq!(s.names()[4], "EEG1__std__w30__s-2");
        assert_eq!(s.channels(), standard());
    }

    #[test]
    fn epoch_counts() {
        let rec = |secs: usize| {
            Recording::new("s", "r", vec![Channel::new("EEG1", SampleRate::from_hz(100), vec![0.0; secs * 100])])
                .unwrap()
        };
        assert_eq!(segment_epochs(&rec(12 * 3600)).unwrap().n_epochs, 1440);
        assert_eq!(segment_epochs(&rec(95)).unwrap().n_epochs, 3);
        assert!(segment_epochs(&rec(29)).is_err());
    }

    #[test]
    fn emg_at_one_hz() {
        let p = FeatureParams::default();
        let cat = feature_catalog(ChannelKind::Emg);
        let eval = |name: &str| {
            let f = cat.iter().find(|f| f.name() == name).unwrap();
            short_signal_policy(f, 30, 1.0, &p)
        };
        assert_eq!(eval("std"), Evaluation::Evaluate);
        assert_eq!(eval("zero_crossings"), Evaluation::Evaluate);
        assert_eq!(eval("higuchi_fd"), Evaluation::Evaluate);
        assert_eq!(eval("fourier_binned_entropy_100"), Evaluation::Degenerate);
        for f in feature_catalog(ChannelKind::Eeg) {
            assert_eq!(short_signal_policy(&f, 3000, 100.0, &p), Evaluation::Evaluate, "{f}");
        }
    }
}
