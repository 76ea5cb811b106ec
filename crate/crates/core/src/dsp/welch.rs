//! Welch power spectral density and band integration.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::Serialize;

use super::fft::forward_plan;
use crate::error::{Error, Result};

/// One-sided PSD on a uniform frequency grid starting at 0 Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdEstimate {
    pub freqs_hz: Vec<f64>,
    /// signal² / Hz
    pub density: Vec<f64>,
    pub resolution_hz: f64,
}

/// Periodic Hann window.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Samples per Welch segment for a segment length in seconds.
pub fn segment_samples(fs_hz: f64, segment_s: f64) -> usize {
    (segment_s * fs_hz).round() as usize
}

/// Hann-windowed segments with 50 % overlap, per-segment mean removal,
/// one-sided density scaling, averaged by the mean.
pub fn welch_psd(signal: &[f64], fs_hz: f64, segment_s: f64) -> Result<PsdEstimate> {
    let nperseg = segment_samples(fs_hz, segment_s);
    if nperseg < 2 {
        return Err(Error::InvalidArgument(format!(
            "Welch segment of {segment_s} s at {fs_hz} Hz has fewer than 2 samples"
        )));
    }
    if signal.len() < nperseg {
        return Err(Error::TooShort { needed: nperseg, got: signal.len() });
    }
    let noverlap = nperseg / 2;
    let step = nperseg - noverlap;
    let n_segments = (signal.len() - noverlap) / step;
    let window = hann(nperseg);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs_hz * win_power);
    let n_freqs = nperseg / 2 + 1;

    let plan = forward_plan(nperseg);
    let mut buf = vec![Complex64::new(0.0, 0.0); nperseg];
    let mut density = vec![0.0; n_freqs];
    for s in 0..n_segments {
        let seg = &signal[s * step..s * step + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        for ((b, &x), &w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((x - mean) * w, 0.0);
        }
        plan.process(&mut buf);
        for (d, c) in density.iter_mut().zip(&buf) {
            *d += c.norm_sqr();
        }
    }
    // Double everything but DC (and Nyquist, when the segment length is even).
    let last_single = if nperseg % 2 == 0 { n_freqs - 1 } else { n_freqs };
    for (k, d) in density.iter_mut().enumerate() {
        let one_sided = if k == 0 || k == last_single { 1.0 } else { 2.0 };
        *d *= scale * one_sided / n_segments as f64;
    }
    let resolution_hz = fs_hz / nperseg as f64;
    Ok(PsdEstimate {
        freqs_hz: (0..n_freqs).map(|k| k as f64 * resolution_hz).collect(),
        density,
        resolution_hz,
    })
}

/// Trapezoidal integral of the density over `[low_hz, high_hz]`, linearly
/// interpolating the density at band edges that fall between bins.
pub fn band_power(psd: &PsdEstimate, low_hz: f64, high_hz: f64) -> Result<f64> {
    if !(low_hz < high_hz) {
        return Err(Error::InvalidArgument(format!("band {low_hz}..{high_hz} Hz is empty")));
    }
    let n = psd.density.len();
    if n < 2 {
        return Err(Error::InvalidArgument("PSD has fewer than two bins".into()));
    }
    let df = psd.resolution_hz;
    let f_max = psd.freqs_hz[n - 1];
    let lo = low_hz.max(0.0);
    let hi = high_hz.min(f_max);
    if lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "band {low_hz}..{high_hz} Hz does not overlap the PSD range 0..{f_max} Hz"
        )));
    }
    let d = &psd.density;
    let at = |f: f64, k: usize| {
        let t = (f - psd.freqs_hz[k]) / df;
        d[k] + t * (d[k + 1] - d[k])
    };
    let first = ((lo / df).floor() as usize).min(n - 2);
    let last = ((hi / df).ceil() as usize).clamp(first + 1, n - 1);
    let mut total = 0.0;
    for k in first..last {
        let a = psd.freqs_hz[k].max(lo);
        let b = psd.freqs_hz[k + 1].min(hi);
        if b > a {
            total += (b - a) * (at(a, k) + at(b, k)) / 2.0;
        }
    }
    Ok(total)
}
