//! Signal-processing kernels: zero-phase band-pass filtering, rational
//! resampling and Welch spectral estimation.

mod fft;
pub mod filter;
pub mod resample;
pub mod welch;

pub use fft::rfft_magnitude;
pub use filter::{bandpass_zero_phase, butterworth_bandpass, BandpassSpec, Biquad};
pub use resample::resample_rational;
pub use welch::{band_power, welch_psd, PsdEstimate};
