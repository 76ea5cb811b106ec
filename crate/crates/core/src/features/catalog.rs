use std::fmt;

use serde::Serialize;

use super::complexity::{binned_entropy, hjorth_pair, higuchi_fd, permutation_entropy, petrosian_fd};
use super::spectral::{psd_binned_entropy, spectral_feature_names, spectral_values, spectrum_stats, FFT_STATS};
use super::stats::{iqr_sorted, population_std, skew_kurt, zero_crossings};
use super::FeatureParams;
use crate::dsp::{rfft_magnitude, welch_psd};
use crate::signal::ChannelKind;
use crate::windowing::{short_signal_policy, Evaluation};

pub const BINNED_ENTROPY_BINS: [usize; 4] = [5, 10, 30, 60];
pub const FOURIER_ENTROPY_BINS: [usize; 7] = [2, 3, 5, 10, 30, 60, 100];

/// Broad family of a feature, used by the short-signal policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    /// Needs at least `n` samples.
    Time,
    /// Needs a full Welch segment and a rate that resolves the analysis band.
    Welch,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct FeatureId {
    pub function: String,
    pub parameter: Option<String>,
}

impl FeatureId {
    fn plain(function: &str) -> Self {
        FeatureId { function: function.into(), parameter: None }
    }

    fn with(function: &str, parameter: impl ToString) -> Self {
        FeatureId {
            function: function.into(),
            parameter: Some(parameter.to_string()),
        }
    }

    pub fn name(&self) -> String {
        match &self.parameter {
            Some(p) => format!("{}_{}", self.function, p),
            None => self.function.clone(),
        }
    }

    pub fn family(&self) -> FeatureFamily {
        match self.function.as_str() {
            "fourier_binned_entropy" | "abs_power" | "rel_power" | "fastdelta_theta_power"
            | "alpha_theta_ratio" | "delta_beta_ratio" | "delta_sigma_ratio" | "delta_theta_ratio" => {
                FeatureFamily::Welch
            }
            _ => FeatureFamily::Time,
        }
    }

    /// Smallest window this feature is defined on (time-domain features only).
    pub fn min_samples(&self, params: &FeatureParams) -> usize {
        match self.function.as_str() {
            "std" | "iqr" | "skewness" | "kurtosis" | "zero_crossings" => 2,
            "hjorth_mobility" | "hjorth_complexity" | "petrosian_fd" => 3,
            "higuchi_fd" => 2 * params.higuchi_kmax,
            "permutation_entropy" => params.perm_order * params.perm_delay + 1,
            "binned_entropy" => 1,
            "fft" => 4,
            _ => 0,
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Ordered feature list for one channel kind.
pub fn feature_catalog(kind: ChannelKind) -> Vec<FeatureId> {
    let mut out: Vec<FeatureId> = ["std", "iqr", "skewness", "kurtosis", "zero_crossings"]
        .into_iter()
        .chain(["hjorth_mobility", "hjorth_complexity", "higuchi_fd", "petrosian_fd"])
        .chain(["permutation_entropy"])
        .map(FeatureId::plain)
        .collect();
    out.extend(BINNED_ENTROPY_BINS.iter().map(|b| FeatureId::with("binned_entropy", b)));
    out.extend(FFT_STATS.iter().map(|s| FeatureId::with("fft", s)));
    out.extend(FOURIER_ENTROPY_BINS.iter().map(|b| FeatureId::with("fourier_binned_entropy", b)));
    for name in spectral_feature_names(kind) {
        out.push(match name.strip_prefix("rel_power_") {
            Some(band) => FeatureId::with("rel_power", band),
            None => FeatureId::plain(&name),
        });
    }
    out
}

/// Evaluate the whole catalog for one window. Values follow
/// [`feature_catalog`] order; infeasible or undefined features are 0.0 and
/// no non-finite value is ever returned.
pub fn compute_window_features(window: &[f64], fs_hz: f64, kind: ChannelKind, params: &FeatureParams) -> Vec<f64> {
    let catalog = feature_catalog(kind);
    let ok = |id: &FeatureId| short_signal_policy(id, window.len(), fs_hz, params) == Evaluation::Evaluate;
    let mut values = Vec::with_capacity(catalog.len());
    let mut i = 0;

    // Shared intermediate results are computed lazily and only once.
    let stat_ok = ok(&catalog[0]);
    let (skew, kurt) = if stat_ok { skew_kurt(window) } else { (0.0, 0.0) };
    values.push(if stat_ok { population_std(window) } else { 0.0 });
    values.push(if stat_ok {
        let mut sorted = window.to_vec();
        sorted.sort_by(f64::total_cmp);
        iqr_sorted(&sorted)
    } else {
        0.0
    });
    values.push(skew);
    values.push(kurt);
    values.push(if ok(&catalog[4]) { zero_crossings(window).unwrap_or(0.0) } else { 0.0 });
    let (mob, comp) = if ok(&catalog[5]) { hjorth_pair(window) } else { (0.0, 0.0) };
    values.push(mob);
    values.push(comp);
    values.push(if ok(&catalog[7]) { higuchi_fd(window, params.higuchi_kmax).unwrap_or(0.0) } else { 0.0 });
    values.push(if ok(&catalog[8]) { petrosian_fd(window).unwrap_or(0.0) } else { 0.0 });
    values.push(if ok(&catalog[9]) {
        permutation_entropy(window, params.perm_order, params.perm_delay).unwrap_or(0.0)
    } else {
        0.0
    });
    i += 10;
    for &bins in &BINNED_ENTROPY_BINS {
        values.push(if ok(&catalog[i]) { binned_entropy(window, bins).unwrap_or(0.0) } else { 0.0 });
        i += 1;
    }
    if ok(&catalog[i]) {
        values.extend(spectrum_stats(&rfft_magnitude(window)));
    } else {
        values.extend([0.0; 4]);
    }
    i += 4;

    let psd = if ok(&catalog[i]) { welch_psd(window, fs_hz, params.welch_segment_s).ok() } else { None };
    for &bins in &FOURIER_ENTROPY_BINS {
        values.push(
            psd.as_ref()
                .and_then(|p| psd_binned_entropy(p, bins).ok())
                .unwrap_or(0.0),
        );
    }
    i += FOURIER_ENTROPY_BINS.len();
    let n_spectral = catalog.len() - i;
    match psd.as_ref().and_then(|p| spectral_values(p, kind).ok()) {
        Some(v) => values.extend(v),
        None => values.extend(std::iter::repeat_n(0.0, n_spectral)),
    }

    debug_assert_eq!(values.len(), catalog.len());
    for v in values.iter_mut() {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    values
}
