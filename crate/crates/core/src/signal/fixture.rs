//! Minimal EDF/EDF+ writer used to build test fixtures and synthetic
//! recordings. It formats every header field itself and shares no code with
//! the reader or [`EdfHeader::to_bytes`](super::EdfHeader::to_bytes).

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FixtureSignal {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    /// Raw 16-bit samples, all records concatenated.
    pub digital: Vec<i16>,
}

impl FixtureSignal {
    /// Quantise physical samples onto the full 16-bit range spanning `[physical_min, physical_max]`.
    pub fn from_physical(
        label: &str,
        samples: &[f64],
        samples_per_record: usize,
        physical_min: f64,
        physical_max: f64,
    ) -> Self {
        let (dmin, dmax) = (-32768i32, 32767i32);
        let scale = f64::from(dmax - dmin) / (physical_max - physical_min);
        let digital = samples
            .iter()
            .map(|&x| {
                let d = ((x - physical_min) * scale).round() + f64::from(dmin);
                d.clamp(f64::from(dmin), f64::from(dmax)) as i16
            })
            .collect();
        FixtureSignal {
            label: label.into(),
            transducer: String::new(),
            physical_dimension: "uV".into(),
            physical_min,
            physical_max,
            digital_min: dmin,
            digital_max: dmax,
            prefiltering: String::new(),
            samples_per_record,
            digital,
        }
    }

    /// An `EDF Annotations` signal. `records[i]` holds the TAL bytes of data
    /// record `i`; each is zero-padded to `samples_per_record * 2` bytes.
    pub fn annotations(records: &[Vec<u8>], samples_per_record: usize) -> Self {
        let width = samples_per_record * 2;
        let mut bytes = Vec::with_capacity(records.len() * width);
        for r in records {
            assert!(r.len() <= width, "TAL bytes exceed the annotation record size");
            bytes.extend_from_slice(r);
            bytes.extend(std::iter::repeat_n(0u8, width - r.len()));
        }
        let digital = bytes
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        FixtureSignal {
            label: "EDF Annotations".into(),
            transducer: String::new(),
            physical_dimension: String::new(),
            physical_min: -1.0,
            physical_max: 1.0,
            digital_min: -32768,
            digital_max: 32767,
            prefiltering: String::new(),
            samples_per_record,
            digital,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EdfFixture {
    pub patient_id: String,
    pub recording_id: String,
    /// `dd.mm.yy`
    pub start_date: String,
    /// `hh.mm.ss`
    pub start_time: String,
    /// `EDF+C`, `EDF+D` or empty.
    pub reserved: String,
    /// Written verbatim into the duration field, e.g. `1` or `0.5`.
    pub record_duration: String,
    /// Overrides the record count field (e.g. `-1`); defaults to the real count.
    pub n_records_field: Option<i64>,
    pub signals: Vec<FixtureSignal>,
}

impl Default for EdfFixture {
    fn default() -> Self {
        EdfFixture {
            patient_id: "X X X X".into(),
            recording_id: "Startdate X X X X".into(),
            start_date: "01.01.20".into(),
            start_time: "22.00.00".into(),
            reserved: String::new(),
            record_duration: "1".into(),
            n_records_field: None,
            signals: Vec::new(),
        }
    }
}

fn field(out: &mut Vec<u8>, value: impl std::fmt::Display, width: usize) {
    let s = format!("{value:<width$}");
    assert!(s.len() == width, "fixture field {s:?} wider than {width}");
    out.extend_from_slice(s.as_bytes());
}

impl EdfFixture {
    pub fn n_records(&self) -> usize {
        self.signals
            .iter()
            .map(|s| s.digital.len() / s.samples_per_record)
            .min()
            .unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let ns = self.signals.len();
        let n_records = self.n_records();
        let mut out = Vec::new();
        field(&mut out, "0", 8);
        field(&mut out, &self.patient_id, 80);
        field(&mut out, &self.recording_id, 80);
        field(&mut out, &self.start_date, 8);
        field(&mut out, &self.start_time, 8);
        field(&mut out, 256 * (ns + 1), 8);
        field(&mut out, &self.reserved, 44);
        field(&mut out, self.n_records_field.unwrap_or(n_records as i64), 8);
        field(&mut out, &self.record_duration, 8);
        field(&mut out, ns, 4);
        for s in &self.signals {
            field(&mut out, &s.label, 16);
        }
        for s in &self.signals {
            field(&mut out, &s.transducer, 80);
        }
        for s in &self.signals {
            field(&mut out, &s.physical_dimension, 8);
        }
        for s in &self.signals {
            field(&mut out, s.physical_min, 8);
        }
        for s in &self.signals {
            field(&mut out, s.physical_max, 8);
        }
        for s in &self.signals {
            field(&mut out, s.digital_min, 8);
        }
        for s in &self.signals {
            field(&mut out, s.digital_max, 8);
        }
        for s in &self.signals {
            field(&mut out, &s.prefiltering, 80);
        }
        for s in &self.signals {
            field(&mut out, s.samples_per_record, 8);
        }
        for _ in &self.signals {
            field(&mut out, "", 32);
        }
        for r in 0..n_records {
            for s in &self.signals {
                let spr = s.samples_per_record;
                for d in &s.digital[r * spr..(r + 1) * spr] {
                    out.extend_from_slice(&d.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// TAL bytes for a list of `(onset, duration, text)` triples, preceded by the
/// mandatory time-keeping TAL for `record_onset`.
pub fn tal_bytes(record_onset: f64, annotations: &[(f64, Option<f64>, &str)]) -> Vec<u8> {
    let mut out = format!("+{record_onset}\x14\x14\x00").into_bytes();
    for (onset, duration, text) in annotations {
        out.extend_from_slice(format!("+{onset}").as_bytes());
        if let Some(d) = duration {
            out.push(0x15);
            out.extend_from_slice(format!("{d}").as_bytes());
        }
        out.push(0x14);
        out.extend_from_slice(text.as_bytes());
        out.push(0x14);
        out.push(0x00);
    }
    out
}
