//! Butterworth band-pass design as second-order sections and zero-phase
//! (forward-backward) application.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub low_hz: f64,
    pub high_hz: f64,
    /// Order of the low-pass prototype; the band-pass has `2 * order` poles.
    pub order: usize,
}

impl BandpassSpec {
    pub fn new(low_hz: f64, high_hz: f64, order: usize) -> Self {
        BandpassSpec { low_hz, high_hz, order }
    }

    pub fn validate(&self, fs_hz: f64) -> Result<()> {
        let nyquist = fs_hz / 2.0;
        if self.order == 0 {
            return Err(Error::Filter("order must be >= 1".into()));
        }
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz) {
            return Err(Error::Filter(format!(
                "band edges must satisfy 0 < low < high, got {}..{} Hz",
                self.low_hz, self.high_hz
            )));
        }
        if self.high_hz >= nyquist {
            return Err(Error::Filter(format!(
                "band edge {} Hz is not below the Nyquist frequency {nyquist} Hz",
                self.high_hz
            )));
        }
        Ok(())
    }

    /// Odd-reflection padding used at both ends by [`bandpass_zero_phase`].
    pub fn pad_len(&self) -> usize {
        3 * (self.order + 1)
    }
}

/// One biquad, `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// State after an infinitely long unit-step input (direct form II transposed).
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }

    fn run(&self, x: &mut [f64], mut state: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let xin = *v;
            let y = b0 * xin + state[0];
            state[0] = b1 * xin - a1 * y + state[1];
            state[1] = b2 * xin - a2 * y;
            *v = y;
        }
    }
}

/// Digital Butterworth band-pass: analog prototype, band-pass transform,
/// bilinear transform with pre-warped edges.
pub fn butterworth_bandpass(spec: &BandpassSpec, fs_hz: f64) -> Result<Vec<Biquad>> {
    spec.validate(fs_hz)?;
    let n = spec.order;
    let fs2 = 2.0 * fs_hz;
    let w1 = fs2 * (PI * spec.low_hz / fs_hz).tan();
    let w2 = fs2 * (PI * spec.high_hz / fs_hz).tan();
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    let mut poles = Vec::with_capacity(2 * n);
    for k in 0..n {
        let theta = PI * (2 * k + 1 + n) as f64 / (2 * n) as f64;
        let p = Complex64::from_polar(1.0, theta);
        let a = p * (bw / 2.0);
        let disc = (a * a - w0 * w0).sqrt();
        for s in [a + disc, a - disc] {
            poles.push((fs2 + s) / (fs2 - s));
        }
    }

    // Conjugate pairs become one section each; leftover real poles pair up.
    let eps = 1e-12;
    let mut sections = Vec::with_capacity(n);
    let mut reals = Vec::new();
    let mut upper: Vec<Complex64> = Vec::new();
    for p in &poles {
        if p.im > eps {
            upper.push(*p);
        } else if p.im.abs() <= eps {
            reals.push(p.re);
        }
    }
    upper.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    for p in upper {
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -2.0 * p.re, p.norm_sqr()],
        });
    }
    reals.sort_by(f64::total_cmp);
    for pair in reals.chunks(2) {
        let (r1, r2) = (pair[0], *pair.get(1).unwrap_or(&0.0));
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [1.0, -(r1 + r2), r1 * r2],
        });
    }
    if sections.len() != n {
        return Err(Error::Filter(format!(
            "pole pairing produced {} sections for order {n}",
            sections.len()
        )));
    }

    // Unit gain at the digital image of the analog centre frequency.
    let omega = 2.0 * (w0 / fs2).atan();
    let z_inv = Complex64::from_polar(1.0, -omega);
    let gain = sections
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
        .norm();
    for b in sections[0].b.iter_mut() {
        *b /= gain;
    }
    Ok(sections)
}

/// Magnitude response of a cascade at `freq_hz`.
pub fn magnitude_response(sections: &[Biquad], freq_hz: f64, fs_hz: f64) -> f64 {
    let z_inv = Complex64::from_polar(1.0, -2.0 * PI * freq_hz / fs_hz);
    sections
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
        .norm()
}

fn run_cascade(sections: &[Biquad], x: &mut [f64]) {
    let Some(&first) = x.first() else { return };
    let mut scale = first;
    for s in sections {
        let zi = s.step_state();
        s.run(x, [zi[0] * scale, zi[1] * scale]);
        scale *= s.dc_gain();
    }
}

/// Apply the cascade forward then backward. Both ends are extended by odd
/// reflection and each pass starts from the step-response steady state scaled
/// to its first sample. Output length equals input length.
pub fn filtfilt(sections: &[Biquad], signal: &[f64], pad: usize) -> Result<Vec<f64>> {
    let n = signal.len();
    if n <= pad {
        return Err(Error::TooShort { needed: pad + 1, got: n });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (x0, xn) = (signal[0], signal[n - 1]);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x0 - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * xn - signal[n - 1 - i]));

    run_cascade(sections, &mut ext);
    ext.reverse();
    run_cascade(sections, &mut ext);
    ext.reverse();
    Ok(ext[pad..pad + n].to_vec())
}

/// Zero-phase Butterworth band-pass.
pub fn bandpass_zero_phase(signal: &[f64], fs_hz: f64, spec: &BandpassSpec) -> Result<Vec<f64>> {
    let sections = butterworth_bandpass(spec, fs_hz)?;
    filtfilt(&sections, signal, spec.pad_len())
}
