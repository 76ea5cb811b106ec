//! Per-window feature functions and the per-kind feature catalog.

mod catalog;
pub mod complexity;
pub mod spectral;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use catalog::{
    compute_window_features, feature_catalog, FeatureFamily, FeatureId, BINNED_ENTROPY_BINS,
    FOURIER_ENTROPY_BINS,
};
pub use complexity::{binned_entropy, higuchi_fd, hjorth_complexity, hjorth_mobility, permutation_entropy, petrosian_fd};
pub use spectral::{
    fft_aggregated_stats, fourier_binned_entropy, spectral_feature_names, spectral_features, BandName, FrequencyBand,
    BANDS, TOTAL_HIGH_HZ, TOTAL_LOW_HZ,
};
pub use stats::{stat_iqr, stat_kurtosis, stat_skewness, stat_std, zero_crossings};

/// Tunable feature parameters. Defaults are the values the column schema
/// is published with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    pub higuchi_kmax: usize,
    pub perm_order: usize,
    pub perm_delay: usize,
    pub welch_segment_s: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            higuchi_kmax: 10,
            perm_order: 3,
            perm_delay: 1,
            welch_segment_s: 5.0,
        }
    }
}
