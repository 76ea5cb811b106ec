//! Frequency-domain features: |FFT| distribution statistics, binned entropy
//! of the Welch PSD, and band powers.

use serde::Serialize;

use super::complexity::binned_entropy;
use crate::dsp::{band_power, rfft_magnitude, welch_psd, PsdEstimate};
use crate::error::{Error, Result};
use crate::signal::ChannelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandName {
    SlowDelta,
    FastDelta,
    Theta,
    Alpha,
    Sigma,
    Beta,
}

impl BandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandName::SlowDelta => "slow_delta",
            BandName::FastDelta => "fast_delta",
            BandName::Theta => "theta",
            BandName::Alpha => "alpha",
            BandName::Sigma => "sigma",
            BandName::Beta => "beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyBand {
    pub name: BandName,
    pub low_hz: f64,
    pub high_hz: f64,
}

const fn band(name: BandName, low_hz: f64, high_hz: f64) -> FrequencyBand {
    FrequencyBand { name, low_hz, high_hz }
}

/// The six bands partition the analysis range [`TOTAL_LOW_HZ`, `TOTAL_HIGH_HZ`].
pub const BANDS: [FrequencyBand; 6] = [
    band(BandName::SlowDelta, 0.4, 1.0),
    band(BandName::FastDelta, 1.0, 4.0),
    band(BandName::Theta, 4.0, 8.0),
    band(BandName::Alpha, 8.0, 12.0),
    band(BandName::Sigma, 12.0, 16.0),
    band(BandName::Beta, 16.0, 30.0),
];

pub const TOTAL_LOW_HZ: f64 = 0.4;
pub const TOTAL_HIGH_HZ: f64 = 30.0;

pub const FFT_STATS: [&str; 4] = ["centroid", "variance", "skew", "kurtosis"];

/// Below this variance (in squared bin units) the spectrum is treated as a
/// single line and its skew and kurtosis are reported as 0.
const FFT_MIN_VARIANCE: f64 = 0.5;

/// Mean, variance, skewness and kurtosis of `|FFT|` viewed as an
/// unnormalised distribution over non-negative bin indices.
pub fn fft_aggregated_stats(window: &[f64]) -> Result<[f64; 4]> {
    if window.len() < 4 {
        return Err(Error::TooShort { needed: 4, got: window.len() });
    }
    Ok(spectrum_stats(&rfft_magnitude(window)))
}

pub(crate) fn spectrum_stats(mag: &[f64]) -> [f64; 4] {
    let total: f64 = mag.iter().sum();
    if !(total > 0.0) {
        return [0.0; 4];
    }
    let centroid = mag.iter().enumerate().map(|(i, &y)| i as f64 * y).sum::<f64>() / total;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for (i, &y) in mag.iter().enumerate() {
        let d = i as f64 - centroid;
        let d2 = d * d;
        m2 += d2 * y;
        m3 += d2 * d * y;
        m4 += d2 * d2 * y;
    }
    let variance = m2 / total;
    if variance < FFT_MIN_VARIANCE {
        return [centroid, variance, 0.0, 0.0];
    }
    [
        centroid,
        variance,
        m3 / total / variance.powf(1.5),
        m4 / total / (variance * variance),
    ]
}

pub(crate) fn psd_binned_entropy(psd: &PsdEstimate, n_bins: usize) -> Result<f64> {
    let max = psd.density.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Ok(0.0);
    }
    let normalized: Vec<f64> = psd.density.iter().map(|d| d / max).collect();
    binned_entropy(&normalized, n_bins)
}

/// Binned entropy of the Welch PSD after scaling its peak to 1.
pub fn fourier_binned_entropy(window: &[f64], fs_hz: f64, n_bins: usize, segment_s: f64) -> Result<f64> {
    let psd = welch_psd(window, fs_hz, segment_s)?;
    psd_binned_entropy(&psd, n_bins)
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Names of the band-power features emitted for a channel kind, in order.
pub fn spectral_feature_names(kind: ChannelKind) -> Vec<String> {
    let mut names = Vec::new();
    if kind == ChannelKind::Emg {
        return names;
    }
    names.push("abs_power".to_string());
    names.extend(BANDS.iter().map(|b| format!("rel_power_{}", b.name.as_str())));
    if kind == ChannelKind::Eeg {
        names.extend(
            [
                "fastdelta_theta_power",
                "alpha_theta_ratio",
                "delta_beta_ratio",
                "delta_sigma_ratio",
                "delta_theta_ratio",
            ]
            .map(String::from),
        );
    }
    names
}

pub(crate) fn spectral_values(psd: &PsdEstimate, kind: ChannelKind) -> Result<Vec<f64>> {
    if kind == ChannelKind::Emg {
        return Ok(Vec::new());
    }
    let powers = BANDS
        .iter()
        .map(|b| band_power(psd, b.low_hz, b.high_hz))
        .collect::<Result<Vec<f64>>>()?;
    let total = band_power(psd, TOTAL_LOW_HZ, TOTAL_HIGH_HZ)?;
    let mut out = Vec::with_capacity(12);
    out.push(total);
    out.extend(powers.iter().map(|&p| ratio(p, total)));
    if kind == ChannelKind::Eeg {
        let [slow_delta, fast_delta, theta, alpha, sigma, beta] =
            <[f64; 6]>::try_from(powers).expect("six bands");
        let delta = slow_delta + fast_delta;
        out.push(fast_delta + theta);
        out.push(ratio(alpha, theta));
        out.push(ratio(delta, beta));
        out.push(ratio(delta, sigma));
        out.push(ratio(delta, theta));
    }
    Ok(out)
}

/// Band-power features for one window, paired with their names.
pub fn spectral_features(
    window: &[f64],
    fs_hz: f64,
    kind: ChannelKind,
    segment_s: f64,
) -> Result<Vec<(String, f64)>> {
    let psd = welch_psd(window, fs_hz, segment_s)?;
    Ok(spectral_feature_names(kind)
        .into_iter()
        .zip(spectral_values(&psd, kind)?)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bands_partition_the_total_range() {
        assert_eq!(BANDS[0].low_hz, TOTAL_LOW_HZ);
        assert_eq!(BANDS[5].high_hz, TOTAL_HIGH_HZ);
        for w in BANDS.windows(2) {
            assert_eq!(w[0].high_hz, w[1].low_hz);
        }
    }

    #[test]
    fn dc_window_has_zero_centroid() {
        let s = fft_aggregated_stats(&[1.0; 64]).unwrap();
        assert_eq!(s[0], 0.0);
        assert_eq!(fft_aggregated_stats(&[0.0; 64]).unwrap(), [0.0; 4]);
    }

    #[test]
    fn single_line_spectrum() {
        let n = 256;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * 17.0 * i as f64 / n as f64).sin()).collect();
        let s = fft_aggregated_stats(&x).unwrap();
        assert!((s[0] - 17.0).abs() < 1e-9);
        assert!(s[1] < 1e-9);
    }

    #[test]
    fn emg_has_no_band_powers() {
        assert!(spectral_feature_names(ChannelKind::Emg).is_empty());
        assert_eq!(spectral_feature_names(ChannelKind::Eog).len(), 7);
        assert_eq!(spectral_feature_names(ChannelKind::Eeg).len(), 12);
    }
}
