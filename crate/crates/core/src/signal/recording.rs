use std::fmt;

use chrono::NaiveDateTime;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling rate kept as an exact rational (`samples_per_record / record_duration`)
/// so that sample indices over long recordings never drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SampleRate(Ratio<u64>);

impl SampleRate {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if numer == 0 || denom == 0 {
            return Err(Error::InvalidArgument(format!(
                "sampling rate {numer}/{denom} must be positive"
            )));
        }
        Ok(SampleRate(Ratio::new(numer, denom)))
    }

    pub fn from_hz(hz: u64) -> Self {
        assert!(hz > 0, "sampling rate must be positive");
        SampleRate(Ratio::from_integer(hz))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn hz(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Number of whole samples in `seconds` (floored), computed exactly.
    pub fn samples_in(&self, seconds: u64) -> usize {
        ((self.0 * seconds).to_integer()) as usize
    }

    /// Sample index at `seconds` from the start, floored (negative before the start).
    pub fn index_at(&self, seconds: i64) -> i64 {
        if seconds >= 0 {
            (self.0 * seconds as u64).to_integer() as i64
        } else {
            -((self.0 * seconds.unsigned_abs()).ceil().to_integer() as i64)
        }
    }
}

impl fmt::Display for SampleRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{} Hz", self.0.numer())
        } else {
            write!(f, "{}/{} Hz", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for SampleRate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.hz())
    }
}

impl<'de> Deserialize<'de> for SampleRate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let hz = f64::deserialize(d)?;
        if !(hz > 0.0) || hz.fract() != 0.0 {
            return Err(serde::de::Error::custom(format!(
                "sampling rate {hz} must be a positive integer number of Hz"
            )));
        }
        Ok(SampleRate::from_hz(hz as u64))
    }
}

/// One physical-unit channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub label: String,
    pub rate: SampleRate,
    pub samples: Vec<f64>,
}

impl Channel {
    pub fn new(label: impl Into<String>, rate: SampleRate, samples: Vec<f64>) -> Self {
        Channel {
            label: label.into(),
            rate,
            samples,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.rate.hz()
    }
}

/// Multichannel recording in physical units. Immutable once built; channels
/// keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub channels: Vec<Channel>,
    pub start_datetime: Option<NaiveDateTime>,
    pub source_path: Option<String>,
    pub subject_id: String,
    pub recording_id: String,
}

impl Recording {
    pub fn new(
        subject_id: impl Into<String>,
        recording_id: impl Into<String>,
        channels: Vec<Channel>,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        if subject_id.trim().is_empty() {
            return Err(Error::InvalidArgument("subject_id must be non-empty".into()));
        }
        Ok(Recording {
            channels,
            start_datetime: None,
            source_path: None,
            subject_id,
            recording_id: recording_id.into(),
        })
    }

    pub fn channel(&self, label: &str) -> Result<&Channel> {
        self.channels
            .iter()
            .find(|c| c.label == label)
            .ok_or_else(|| Error::MissingChannel(label.to_string()))
    }

    /// Duration covered by every channel, in seconds.
    pub fn duration_s(&self) -> f64 {
        if self.channels.is_empty() {
            return 0.0;
        }
        self.channels
            .iter()
            .map(Channel::duration_s)
            .fold(f64::INFINITY, f64::min)
    }
}
