//! Seeded synthetic PSG whose spectral content is set by the sleep stage.
//! Used for benchmarks and end-to-end checks where real data is unavailable.
//!
//! EEG carries a stage-specific rhythm (W beta, N1 theta, N2 sigma plus
//! slow waves, N3 delta, REM theta-band sawtooth), EOG is large in W and
//! REM, and EMG amplitude falls from W to REM.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::fixture::{tal_bytes, EdfFixture, FixtureSignal};
use super::{Channel, ChannelKind, Recording, SampleRate};
use crate::error::Result;
use crate::labels::SleepStage;

const EPOCH_S: usize = 30;

/// Stage runs of 4 to 40 epochs. The five model classes appear once per
/// cycle in shuffled order, so every recording long enough for one cycle
/// contains each class.
pub fn stage_sequence(n_epochs: usize, seed: u64) -> Vec<SleepStage> {
    use SleepStage::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cycle = [W, N1, N2, N3, Rem];
    let mut out = Vec::with_capacity(n_epochs);
    while out.len() < n_epochs {
        cycle.shuffle(&mut rng);
        for &s in &cycle {
            let run = rng.random_range(4..=40).min(n_epochs - out.len());
            out.extend(std::iter::repeat_n(s, run));
        }
    }
    out
}

/// Sinusoids as `(frequency Hz, amplitude)` and the white-noise standard
/// deviation for one epoch of one channel kind.
fn components(stage: SleepStage, kind: ChannelKind) -> (&'static [(f64, f64)], f64) {
    use ChannelKind::*;
    use SleepStage::*;
    match (kind, stage) {
        (Eeg, W) => (&[(22.0, 20.0), (10.0, 8.0)], 6.0),
        (Eeg, N1) => (&[(6.0, 25.0)], 6.0),
        (Eeg, N2) => (&[(13.0, 22.0), (1.0, 20.0)], 6.0),
        (Eeg, N3) => (&[(1.5, 70.0)], 6.0),
        (Eeg, _) => (&[(4.5, 18.0), (9.0, 6.0)], 6.0),
        (Eog, W) => (&[(0.5, 60.0)], 8.0),
        (Eog, Rem) => (&[(2.0, 80.0)], 8.0),
        (Eog, N3) => (&[(1.5, 25.0)], 5.0),
        (Eog, _) => (&[(0.7, 15.0)], 5.0),
        (Emg, W) => (&[], 30.0),
        (Emg, N1) => (&[], 15.0),
        (Emg, N2) => (&[], 10.0),
        (Emg, N3) => (&[], 8.0),
        (Emg, _) => (&[], 3.0),
    }
}

/// One channel: every epoch gets its stage's components with a random phase
/// plus Gaussian noise.
pub fn synth_channel(stages: &[SleepStage], kind: ChannelKind, rate_hz: u64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_per_epoch = EPOCH_S * rate_hz as usize;
    let fs = rate_hz as f64;
    let mut out = Vec::with_capacity(stages.len() * n_per_epoch);
    for &stage in stages {
        let (tones, noise_sd) = components(stage, kind);
        let noise = Normal::new(0.0, noise_sd).expect("positive sd");
        let phases: Vec<f64> = tones.iter().map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        for i in 0..n_per_epoch {
            let t = i as f64 / fs;
            let mut v = noise.sample(&mut rng);
            for (&(f, a), &ph) in tones.iter().zip(&phases) {
                if f < fs / 2.0 {
                    v += a * (2.0 * PI * f * t + ph).sin();
                }
            }
            out.push(v);
        }
    }
    out
}

/// Channel label, kind and sampling rate of a synthetic recording.
pub type SynthLayout<'a> = [(&'a str, ChannelKind, u64)];

/// The Sleep-EDF cassette layout: EEG and EOG at 100 Hz, EMG at 1 Hz.
pub const SLEEP_EDF_LAYOUT: [(&str, ChannelKind, u64); 4] = [
    ("EEG Fpz-Cz", ChannelKind::Eeg, 100),
    ("EEG Pz-Oz", ChannelKind::Eeg, 100),
    ("EOG horizontal", ChannelKind::Eog, 100),
    ("EMG submental", ChannelKind::Emg, 1),
];

pub fn synth_recording(
    stages: &[SleepStage],
    layout: &SynthLayout,
    seed: u64,
    subject_id: &str,
    recording_id: &str,
) -> Result<Recording> {
    let channels = layout
        .iter()
        .enumerate()
        .map(|(i, &(label, kind, rate))| {
            let samples = synth_channel(stages, kind, rate, seed.wrapping_mul(31).wrapping_add(i as u64));
            Channel::new(label, SampleRate::from_hz(rate), samples)
        })
        .collect();
    Recording::new(subject_id, recording_id, channels)
}

fn annotation_text(stage: SleepStage) -> &'static str {
    match stage {
        SleepStage::W => "Sleep stage W",
        SleepStage::N1 => "Sleep stage 1",
        SleepStage::N2 => "Sleep stage 2",
        SleepStage::N3 => "Sleep stage 3",
        SleepStage::N4 => "Sleep stage 4",
        SleepStage::Rem => "Sleep stage R",
        SleepStage::Movement => "Movement time",
        SleepStage::Unknown => "Sleep stage ?",
    }
}

/// Write `{stem}-PSG.edf` and `{hypnogram_stem}-Hypnogram.edf` in the Sleep-EDF naming
/// scheme. Returns both paths.
pub fn write_sleep_edf_pair(
    dir: &Path,
    stem: &str,
    hypnogram_stem: &str,
    stages: &[SleepStage],
    layout: &SynthLayout,
    seed: u64,
) -> Result<(PathBuf, PathBuf)> {
    let rec = synth_recording(stages, layout, seed, stem, stem)?;
    let signals = rec
        .channels
        .iter()
        .map(|c| {
            // Integer bounds fit the 8-character header fields.
            let bound = (c.samples.iter().fold(1.0f64, |m, x| m.max(x.abs())) * 1.05).ceil();
            let rate = c.rate.hz() as usize;
            // 30-s data records keep 1 Hz channels integral.
            FixtureSignal::from_physical(&c.label, &c.samples, rate * EPOCH_S, -bound, bound)
        })
        .collect();
    let psg = EdfFixture {
        record_duration: EPOCH_S.to_string(),
        signals,
        ..EdfFixture::default()
    };
    let psg_path = dir.join(format!("{stem}-PSG.edf"));
    psg.write(&psg_path)?;

    let mut runs: Vec<(f64, Option<f64>, &str)> = Vec::new();
    let mut start = 0;
    for i in 1..=stages.len() {
        if i == stages.len() || stages[i] != stages[start] {
            runs.push((
                (start * EPOCH_S) as f64,
                Some(((i - start) * EPOCH_S) as f64),
                annotation_text(stages[start]),
            ));
            start = i;
        }
    }
    let tal = tal_bytes(0.0, &runs);
    let hyp = EdfFixture {
        reserved: "EDF+C".into(),
        record_duration: "0".into(),
        signals: vec![FixtureSignal::annotations(&[tal.clone()], tal.len().div_ceil(2))],
        ..EdfFixture::default()
    };
    let hyp_path = dir.join(format!("{hypnogram_stem}-Hypnogram.edf"));
    hyp.write(&hyp_path)?;
    Ok((psg_path, hyp_path))
}
