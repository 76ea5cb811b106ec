use std::ops::Range;

use ndarray::Array2;
use rayon::prelude::*;

use super::{segment_epochs, FeatureSchema, Placement, COLUMNS_PER_FEATURE, EPOCH_S, SHIFTS};
use crate::error::{Error, Result};
use crate::features::{compute_window_features, feature_catalog, FeatureParams};
use crate::signal::{Channel, ChannelKind, Recording};

/// Feature rows for a contiguous run of epochs of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochFeatureMatrix {
    pub subject_id: String,
    pub recording_id: String,
    pub epoch_index: Vec<usize>,
    pub values: Array2<f64>,
    pub schema: FeatureSchema,
}

impl EpochFeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    /// Keep the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> EpochFeatureMatrix {
        EpochFeatureMatrix {
            subject_id: self.subject_id.clone(),
            recording_id: self.recording_id.clone(),
            epoch_index: rows.iter().map(|&r| self.epoch_index[r]).collect(),
            values: self.values.select(ndarray::Axis(0), rows),
            schema: self.schema.clone(),
        }
    }
}

/// Which precomputed window a job evaluates. 60-s windows are keyed by
/// their start epoch: `w60_left(i)` is the window starting at `i - 1` and
/// `w60_right(i)` the one starting at `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WindowKind {
    W30,
    W60,
    W90,
}

impl WindowKind {
    fn placement(self) -> Placement {
        match self {
            WindowKind::W30 => Placement::W30,
            WindowKind::W60 => Placement::W60Right,
            WindowKind::W90 => Placement::W90,
        }
    }
}

struct Job {
    channel: usize,
    kind: WindowKind,
    epoch: i64,
}

struct Evaluated {
    values: Vec<f64>,
    /// At least half of the nominal span lies inside the recording.
    sufficient: bool,
}

fn evaluate(channel: &Channel, kind: ChannelKind, placement: Placement, epoch: i64, params: &FeatureParams) -> Evaluated {
    let start_s = epoch * EPOCH_S as i64 + placement.offset_s();
    let nominal_start = channel.rate.index_at(start_s);
    let nominal_end = channel.rate.index_at(start_s + placement.span_s());
    let len = channel.samples.len() as i64;
    let start = nominal_start.clamp(0, len);
    let end = nominal_end.clamp(0, len);
    let available = end - start;
    let window = &channel.samples[start as usize..end as usize];
    Evaluated {
        values: compute_window_features(window, channel.rate.hz(), kind, params),
        sufficient: 2 * available >= nominal_end - nominal_start,
    }
}

/// Replace windows with less than half their span available by the values
/// of the nearest sufficient window of the same kind (earlier wins ties).
/// With no sufficient window at all the truncated values stand.
fn fill_insufficient(windows: &mut [Evaluated]) {
    let good: Vec<usize> = (0..windows.len()).filter(|&i| windows[i].sufficient).collect();
    if good.is_empty() {
        return;
    }
    for i in 0..windows.len() {
        if windows[i].sufficient {
            continue;
        }
        let nearest = *good
            .iter()
            .min_by_key(|&&g| (g as i64 - i as i64).unsigned_abs())
            .expect("non-empty");
        windows[i].values = windows[nearest].values.clone();
    }
}

/// Extract every epoch of `recording`.
pub fn extract_features(recording: &Recording, schema: &FeatureSchema, params: &FeatureParams) -> Result<EpochFeatureMatrix> {
    let grid = segment_epochs(recording)?;
    extract_features_range(recording, schema, params, 0..grid.n_epochs)
}

/// Extract the epochs in `rows`. Neighbouring epochs up to two away are
/// evaluated as well so shifted columns at the range edges hold real data.
pub fn extract_features_range(
    recording: &Recording,
    schema: &FeatureSchema,
    params: &FeatureParams,
    rows: Range<usize>,
) -> Result<EpochFeatureMatrix> {
    let grid = segment_epochs(recording)?;
    if rows.start >= rows.end || rows.end > grid.n_epochs {
        return Err(Error::InvalidArgument(format!(
            "epoch range {}..{} is empty or exceeds the {} epochs of {}",
            rows.start, rows.end, grid.n_epochs, recording.recording_id
        )));
    }
    let lo = rows.start.saturating_sub(2) as i64;
    let hi = (rows.end + 2).min(grid.n_epochs) as i64;

    let channels = schema.channels();
    let sources: Vec<&Channel> = channels
        .iter()
        .map(|(name, _)| recording.channel(name))
        .collect::<Result<_>>()?;

    let mut jobs = Vec::new();
    for c in 0..channels.len() {
        for e in lo..hi {
            jobs.push(Job { channel: c, kind: WindowKind::W30, epoch: e });
        }
        for e in lo - 1..hi {
            jobs.push(Job { channel: c, kind: WindowKind::W60, epoch: e });
        }
        for e in lo..hi {
            jobs.push(Job { channel: c, kind: WindowKind::W90, epoch: e });
        }
    }
    let mut results: Vec<Evaluated> = jobs
        .par_iter()
        .map(|j| evaluate(sources[j.channel], channels[j.channel].1, j.kind.placement(), j.epoch, params))
        .collect();

    // Split the flat result list back into per-(channel, window kind) runs.
    let n30 = (hi - lo) as usize;
    let n60 = n30 + 1;
    let per_channel = 2 * n30 + n60;
    let mut runs: Vec<[&[Evaluated]; 3]> = Vec::with_capacity(channels.len());
    for chunk in results.chunks_mut(per_channel) {
        let (w30, rest) = chunk.split_at_mut(n30);
        let (w60, w90) = rest.split_at_mut(n60);
        fill_insufficient(w30);
        fill_insufficient(w60);
        fill_insufficient(w90);
    }
    for chunk in results.chunks(per_channel) {
        let (w30, rest) = chunk.split_at(n30);
        let (w60, w90) = rest.split_at(n60);
        runs.push([w30, w60, w90]);
    }

    let n_rows = rows.len();
    let mut values = Array2::<f64>::zeros((n_rows, schema.len()));
    let mut col = 0;
    for (c, (_, kind)) in channels.iter().enumerate() {
        let [w30, w60, w90] = runs[c];
        for f in 0..feature_catalog(*kind).len() {
            for (r, epoch) in rows.clone().enumerate() {
                let i = epoch as i64 - lo;
                let mut row = values.row_mut(r);
                row[col] = w30[i as usize].values[f];
                row[col + 1] = w60[i as usize].values[f];
                row[col + 2] = w60[i as usize + 1].values[f];
                row[col + 3] = w90[i as usize].values[f];
                for (k, s) in SHIFTS.iter().enumerate() {
                    let src = (i + *s as i64).clamp(0, n30 as i64 - 1);
                    row[col + 4 + k] = w30[src as usize].values[f];
                }
            }
            col += COLUMNS_PER_FEATURE;
        }
    }
    if col != schema.len() {
        return Err(Error::SchemaMismatch {
            expected: schema.len().to_string(),
            found: col.to_string(),
        });
    }

    Ok(EpochFeatureMatrix {
        subject_id: recording.subject_id.clone(),
        recording_id: recording.recording_id.clone(),
        epoch_index: rows.collect(),
        values,
        schema: schema.clone(),
    })
}
