//! Per-channel conditioning ahead of feature extraction: zero-phase
//! band-pass at the native rate, then downsampling to the target rate.

use serde::{Deserialize, Serialize};

use crate::dsp::{bandpass_zero_phase, resample_rational, BandpassSpec};
use crate::error::{Error, Result};
use crate::signal::{Channel, ChannelKind, Recording, SampleRate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub eeg_band: BandpassSpec,
    pub eog_band: BandpassSpec,
    pub emg_band: BandpassSpec,
    /// Channels sampled faster than this are resampled down to it; slower
    /// channels keep their native rate.
    pub target_rate_hz: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            eeg_band: BandpassSpec::new(0.4, 30.0, 4),
            eog_band: BandpassSpec::new(0.4, 30.0, 4),
            emg_band: BandpassSpec::new(0.5, 10.0, 4),
            target_rate_hz: 100,
        }
    }
}

impl PreprocessConfig {
    pub fn band(&self, kind: ChannelKind) -> &BandpassSpec {
        match kind {
            ChannelKind::Eeg => &self.eeg_band,
            ChannelKind::Eog => &self.eog_band,
            ChannelKind::Emg => &self.emg_band,
        }
    }
}

/// What happened to one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: String,
    pub native_rate_hz: f64,
    pub output_rate_hz: f64,
    pub filtered: bool,
}

pub fn preprocess_channel(channel: &Channel, kind: ChannelKind, cfg: &PreprocessConfig) -> Result<(Channel, ChannelReport)> {
    let fs = channel.rate.hz();
    let band = cfg.band(kind);
    // A band reaching the Nyquist frequency cannot be applied (e.g. a 1 Hz
    // EMG envelope); such channels pass through unfiltered.
    let filtered = band.high_hz < fs / 2.0;
    let samples = if filtered {
        bandpass_zero_phase(&channel.samples, fs, band)?
    } else {
        log::info!("{}: {fs} Hz is too slow for the {}..{} Hz band, not filtering", channel.label, band.low_hz, band.high_hz);
        channel.samples.clone()
    };
    if cfg.target_rate_hz == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    let target = SampleRate::from_hz(cfg.target_rate_hz);
    let (rate, samples) = if channel.rate > target {
        (target, resample_rational(&samples, channel.rate, target)?)
    } else {
        (channel.rate, samples)
    };
    let report = ChannelReport {
        channel: channel.label.clone(),
        native_rate_hz: fs,
        output_rate_hz: rate.hz(),
        filtered,
    };
    Ok((Channel::new(channel.label.clone(), rate, samples), report))
}

/// Condition each montage output of `recording`; `kinds` gives the channel
/// kind for every label and fixes the output channel order.
pub fn preprocess(
    recording: &Recording,
    kinds: &[(String, ChannelKind)],
    cfg: &PreprocessConfig,
) -> Result<(Recording, Vec<ChannelReport>)> {
    let mut channels = Vec::with_capacity(kinds.len());
    let mut reports = Vec::with_capacity(kinds.len());
    for (label, kind) in kinds {
        let (c, r) = preprocess_channel(recording.channel(label)?, *kind, cfg)?;
        channels.push(c);
        reports.push(r);
    }
    let mut out = Recording::new(recording.subject_id.clone(), recording.recording_id.clone(), channels)?;
    out.start_datetime = recording.start_datetime;
    out.source_path = recording.source_path.clone();
    Ok((out, reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slow_channels_pass_through() {
        let c = Channel::new("EMG", SampleRate::from_hz(1), (0..600).map(|i| (i % 7) as f64).collect());
        let (out, rep) = preprocess_channel(&c, ChannelKind::Emg, &PreprocessConfig::default()).unwrap();
        assert!(!rep.filtered);
        assert_eq!(out, c);
    }

    #[test]
    fn fast_channels_are_downsampled() {
        let c = Channel::new("EEG", SampleRate::from_hz(256), vec![0.0; 256 * 60]);
        let (out, rep) = preprocess_channel(&c, ChannelKind::Eeg, &PreprocessConfig::default()).unwrap();
        assert!(rep.filtered);
        assert_eq!(out.rate, SampleRate::from_hz(100));
        assert_eq!(out.samples.len(), 6000);
    }
}
