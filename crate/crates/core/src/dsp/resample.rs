//! Rational polyphase resampling (upsample, Kaiser-windowed sinc low-pass,
//! downsample) evaluated directly on the polyphase branches.

use std::f64::consts::PI;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::signal::SampleRate;

/// Largest up or down factor accepted after reduction.
pub const MAX_FACTOR: u64 = 1024;
const KAISER_BETA: f64 = 5.0;
const HALF_LEN_PER_RATE: usize = 10;

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Windowed-sinc low-pass with cutoff `cutoff` (fraction of Nyquist), unit DC gain.
pub fn kaiser_lowpass(taps: usize, cutoff: f64, beta: f64) -> Vec<f64> {
    let m = (taps - 1) as f64;
    let i0_beta = bessel_i0(beta);
    let mut h: Vec<f64> = (0..taps)
        .map(|n| {
            let x = n as f64 - m / 2.0;
            let r = 2.0 * n as f64 / m - 1.0;
            let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            cutoff * sinc(cutoff * x) * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    for v in h.iter_mut() {
        *v /= sum;
    }
    h
}

/// `(up, down)` in lowest terms such that `fs_out = fs_in * up / down`.
pub fn rational_factors(fs_in: SampleRate, fs_out: SampleRate) -> Result<(u64, u64)> {
    let r = fs_out.ratio() / fs_in.ratio();
    let (up, down) = (*r.numer(), *r.denom());
    let g = up.gcd(&down);
    let (up, down) = (up / g, down / g);
    if up > MAX_FACTOR || down > MAX_FACTOR {
        return Err(Error::Resample(format!(
            "{fs_in} -> {fs_out} reduces to {up}/{down}; factors above {MAX_FACTOR} are not supported"
        )));
    }
    Ok((up, down))
}

/// Resample `signal` from `fs_in` to `fs_out`. Output length is
/// `round(len * fs_out / fs_in)`; equal rates return the input unchanged.
pub fn resample_rational(signal: &[f64], fs_in: SampleRate, fs_out: SampleRate) -> Result<Vec<f64>> {
    if fs_in == fs_out {
        return Ok(signal.to_vec());
    }
    let (up, down) = rational_factors(fs_in, fs_out)?;
    let (up, down) = (up as usize, down as usize);
    let max_rate = up.max(down);
    let half_len = HALF_LEN_PER_RATE * max_rate;
    let taps = 2 * half_len + 1;
    let mut h = kaiser_lowpass(taps, 1.0 / max_rate as f64, KAISER_BETA);
    for v in h.iter_mut() {
        *v *= up as f64;
    }

    let n_in = signal.len();
    let n_out = (n_in * up + down / 2) / down;
    let mut out = Vec::with_capacity(n_out);
    for m in 0..n_out {
        // Position in the upsampled grid, shifted by the filter's group delay.
        let t = m * down + half_len;
        let j_max = (t / up).min(n_in.saturating_sub(1));
        let j_min = if t + 1 > taps { (t + 1 - taps).div_ceil(up) } else { 0 };
        let mut acc = 0.0;
        if n_in > 0 && j_min <= j_max {
            for j in j_min..=j_max {
                acc += signal[j] * h[t - j * up];
            }
        }
        out.push(acc);
    }
    Ok(out)
}
