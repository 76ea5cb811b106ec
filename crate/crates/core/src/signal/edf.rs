//! EDF / EDF+ reader.
//!
//! Layout: a 256-byte fixed header, then 256 bytes per signal stored
//! field-major (all labels, then all transducers, ...), then the data records.
//! Each data record holds `samples_per_record` 16-bit little-endian
//! two's-complement samples for every signal in header order.
//!
//! EDF+ annotations live in a signal labelled `EDF Annotations` whose bytes
//! carry Timestamped Annotation Lists (TALs):
//! `+onset[\x15duration]\x14text\x14[text\x14...]\x00`.

use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use num_rational::Ratio;
use serde::Serialize;

use super::recording::{Channel, Recording, SampleRate};
use crate::error::{Error, Result};

pub const FIXED_HEADER_BYTES: usize = 256;
pub const SIGNAL_HEADER_BYTES: usize = 256;
pub const ANNOTATION_LABEL: &str = "EDF Annotations";

const TAL_DURATION: u8 = 0x15;
const TAL_SEPARATOR: u8 = 0x14;

/// Per-signal field widths in the order they appear in the header.
const SIGNAL_FIELDS: [(&str, usize); 10] = [
    ("label", 16),
    ("transducer", 80),
    ("physical_dimension", 8),
    ("physical_min", 8),
    ("physical_max", 8),
    ("digital_min", 8),
    ("digital_max", 8),
    ("prefiltering", 80),
    ("samples_per_record", 8),
    ("reserved", 32),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdfKind {
    Edf,
    EdfPlusContinuous,
    EdfPlusDiscontinuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalSpec {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalSpec {
    pub fn is_annotation(&self) -> bool {
        self.label == ANNOTATION_LABEL
    }

    /// Affine digital→physical map. Written as a two-sided interpolation so
    /// that `digital_min` and `digital_max` land exactly on the physical bounds.
    #[inline]
    pub fn to_physical(&self, digital: i32) -> f64 {
        let t = f64::from(digital - self.digital_min)
            / f64::from(self.digital_max - self.digital_min);
        self.physical_min * (1.0 - t) + self.physical_max * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start_datetime: NaiveDateTime,
    pub header_bytes: usize,
    pub reserved: String,
    /// `-1` when the writer did not know the record count.
    pub n_data_records: i64,
    #[serde(serialize_with = "serialize_ratio")]
    pub record_duration_s: Ratio<u64>,
    pub n_signals: usize,
    pub signal_specs: Vec<SignalSpec>,
}

fn serialize_ratio<S: serde::Serializer>(
    r: &Ratio<u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(*r.numer() as f64 / *r.denom() as f64)
}

impl EdfHeader {
    pub fn kind(&self) -> EdfKind {
        if self.reserved.starts_with("EDF+D") {
            EdfKind::EdfPlusDiscontinuous
        } else if self.reserved.starts_with("EDF+C") {
            EdfKind::EdfPlusContinuous
        } else {
            EdfKind::Edf
        }
    }

    pub fn record_duration_secs(&self) -> f64 {
        *self.record_duration_s.numer() as f64 / *self.record_duration_s.denom() as f64
    }

    /// Bytes occupied by one data record.
    pub fn record_bytes(&self) -> usize {
        self.signal_specs
            .iter()
            .map(|s| s.samples_per_record * 2)
            .sum()
    }

    pub fn signal_index(&self, label: &str) -> Option<usize> {
        self.signal_specs.iter().position(|s| s.label == label)
    }

    /// `samples_per_record / record_duration`, exact. `None` for annotation
    /// signals and zero-duration records.
    pub fn sampling_rate(&self, index: usize) -> Option<SampleRate> {
        let spec = self.signal_specs.get(index)?;
        if spec.is_annotation() || *self.record_duration_s.numer() == 0 {
            return None;
        }
        let rate = Ratio::from_integer(spec.samples_per_record as u64) / self.record_duration_s;
        SampleRate::new(*rate.numer(), *rate.denom()).ok()
    }

    /// Number of complete data records present in a file of `file_len` bytes.
    pub fn records_in_file(&self, file_len: usize) -> Result<usize> {
        let record = self.record_bytes();
        if record == 0 {
            return Err(Error::EdfData("data records have zero size".into()));
        }
        let available = file_len.saturating_sub(self.header_bytes);
        if self.n_data_records < 0 {
            return Ok(available / record);
        }
        let declared = self.n_data_records as usize;
        let needed = declared * record;
        if available < needed {
            return Err(Error::EdfData(format!(
                "header declares {declared} data records ({needed} bytes) but the file holds only {available} bytes after the header"
            )));
        }
        if available > needed {
            log::warn!(
                "{} trailing bytes after the last declared data record ignored",
                available - needed
            );
        }
        Ok(declared)
    }

    /// Re-serialise the header to its fixed-width ASCII form.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header_bytes);
        push_field(&mut out, &self.version, 8);
        push_field(&mut out, &self.patient_id, 80);
        push_field(&mut out, &self.recording_id, 80);
        push_field(&mut out, &self.start_datetime.format("%d.%m.%y").to_string(), 8);
        push_field(&mut out, &self.start_datetime.format("%H.%M.%S").to_string(), 8);
        push_field(&mut out, &self.header_bytes.to_string(), 8);
        push_field(&mut out, &self.reserved, 44);
        push_field(&mut out, &self.n_data_records.to_string(), 8);
        push_field(&mut out, &format_rational(self.record_duration_s), 8);
        push_field(&mut out, &self.n_signals.to_string(), 4);
        let specs = &self.signal_specs;
        for s in specs {
            push_field(&mut out, &s.label, 16);
        }
        for s in specs {
            push_field(&mut out, &s.transducer, 80);
        }
        for s in specs {
            push_field(&mut out, &s.physical_dimension, 8);
        }
        for s in specs {
            push_field(&mut out, &format_real(s.physical_min), 8);
        }
        for s in specs {
            push_field(&mut out, &format_real(s.physical_max), 8);
        }
        for s in specs {
            push_field(&mut out, &s.digital_min.to_string(), 8);
        }
        for s in specs {
            push_field(&mut out, &s.digital_max.to_string(), 8);
        }
        for s in specs {
            push_field(&mut out, &s.prefiltering, 80);
        }
        for s in specs {
            push_field(&mut out, &s.samples_per_record.to_string(), 8);
        }
        for s in specs {
            push_field(&mut out, &s.reserved, 32);
        }
        out
    }
}

fn push_field(out: &mut Vec<u8>, value: &str, width: usize) {
    let bytes = value.as_bytes();
    let n = bytes.len().min(width);
    out.extend_from_slice(&bytes[..n]);
    out.extend(std::iter::repeat_n(b' ', width - n));
}

fn format_real(v: f64) -> String {
    let s = format!("{v}");
    if s.len() <= 8 {
        return s;
    }
    for precision in (0..8).rev() {
        let s = format!("{v:.precision$}");
        if s.len() <= 8 {
            return s;
        }
    }
    s
}

fn format_rational(r: Ratio<u64>) -> String {
    if *r.denom() == 1 {
        return r.numer().to_string();
    }
    // Durations are parsed from finite decimals, so the expansion terminates.
    let int = r.to_integer();
    let mut frac = r.fract();
    let mut digits = String::new();
    while *frac.numer() != 0 && digits.len() < 16 {
        frac = frac * 10;
        digits.push(char::from(b'0' + frac.to_integer() as u8));
        frac = frac.fract();
    }
    format!("{int}.{digits}")
}

/// Printable ASCII is kept; every other byte becomes `?`.
fn decode_ascii(bytes: &[u8]) -> String {
    bytes
        .iter()
        .map(|&b| if (0x20..0x7f).contains(&b) { b as char } else { '?' })
        .collect::<String>()
        .trim()
        .to_string()
}

struct FieldReader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> FieldReader<'a> {
    fn take(&mut self, width: usize) -> Result<(usize, &'a [u8])> {
        let start = self.offset;
        let end = start + width;
        if end > self.bytes.len() {
            return Err(Error::EdfHeader {
                offset: start,
                message: format!(
                    "truncated header: field needs bytes {start}..{end}, input has {}",
                    self.bytes.len()
                ),
            });
        }
        self.offset = end;
        Ok((start, &self.bytes[start..end]))
    }

    fn text(&mut self, width: usize) -> Result<String> {
        self.take(width).map(|(_, b)| decode_ascii(b))
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize, name: &str) -> Result<T> {
        let (offset, raw) = self.take(width)?;
        parse_number(raw, offset, name)
    }
}

fn parse_number<T: std::str::FromStr>(raw: &[u8], offset: usize, name: &str) -> Result<T> {
    let text = decode_ascii(raw);
    text.parse::<T>().map_err(|_| Error::EdfHeader {
        offset,
        message: format!("field {name} is not numeric: {text:?}"),
    })
}

/// Exact rational from a non-negative decimal such as `30`, `0.5` or `1.000`.
fn parse_decimal(text: &str, offset: usize, name: &str) -> Result<Ratio<u64>> {
    let bad = || Error::EdfHeader {
        offset,
        message: format!("field {name} is not a non-negative decimal: {text:?}"),
    };
    let text = text.strip_prefix('+').unwrap_or(text);
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if (int.is_empty() && frac.is_empty())
        || !int.bytes().all(|b| b.is_ascii_digit())
        || !frac.bytes().all(|b| b.is_ascii_digit())
        || frac.len() > 12
    {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let scale = 10u64.pow(frac.len() as u32);
    let frac_val: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let numer = int
        .checked_mul(scale)
        .and_then(|v| v.checked_add(frac_val))
        .ok_or_else(bad)?;
    Ok(Ratio::new(numer, scale))
}

fn parse_start(date: &str, time: &str, offset: usize) -> Result<NaiveDateTime> {
    let bad = |what: &str, text: &str, off: usize| Error::EdfHeader {
        offset: off,
        message: format!("invalid start {what} {text:?}"),
    };
    let parts = |s: &str| -> Option<[u32; 3]> {
        let v: Vec<u32> = s.split(['.', ':']).map(|p| p.parse().ok()).collect::<Option<_>>()?;
        <[u32; 3]>::try_from(v).ok()
    };
    let [day, month, yy] = parts(date).ok_or_else(|| bad("date", date, offset))?;
    let [h, m, s] = parts(time).ok_or_else(|| bad("time", time, offset + 8))?;
    // EDF clipping date: two-digit years 85..99 are 19xx, the rest 20xx.
    let year = if yy >= 100 {
        yy as i32
    } else if yy >= 85 {
        1900 + yy as i32
    } else {
        2000 + yy as i32
    };
    NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| bad("date", date, offset))?
        .and_hms_opt(h, m, s)
        .ok_or_else(|| bad("time", time, offset + 8))
}

/// Parse the fixed header plus all signal headers from the start of an EDF file.
pub fn parse_edf_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.len() < FIXED_HEADER_BYTES {
        return Err(Error::EdfHeader {
            offset: bytes.len(),
            message: format!(
                "truncated header: {} bytes, the fixed header alone needs {FIXED_HEADER_BYTES}",
                bytes.len()
            ),
        });
    }
    let mut r = FieldReader { bytes, offset: 0 };
    let version = r.text(8)?;
    let patient_id = r.text(80)?;
    let recording_id = r.text(80)?;
    let date_offset = r.offset;
    let date = r.text(8)?;
    let time = r.text(8)?;
    let start_datetime = parse_start(&date, &time, date_offset)?;
    let header_bytes_offset = r.offset;
    let header_bytes: usize = r.number(8, "header_bytes")?;
    let reserved = r.text(44)?;
    let n_data_records: i64 = r.number(8, "n_data_records")?;
    if n_data_records < -1 {
        return Err(Error::EdfHeader {
            offset: 236,
            message: format!("invalid data record count {n_data_records}"),
        });
    }
    let duration_offset = r.offset;
    let duration_text = r.text(8)?;
    let record_duration_s = parse_decimal(&duration_text, duration_offset, "record_duration")?;
    let ns_offset = r.offset;
    let n_signals: usize = r.number(4, "n_signals")?;
    if n_signals == 0 {
        return Err(Error::EdfHeader {
            offset: ns_offset,
            message: "file declares zero signals".into(),
        });
    }
    let expected = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * n_signals;
    if header_bytes != expected {
        return Err(Error::EdfHeader {
            offset: header_bytes_offset,
            message: format!(
                "header_bytes field says {header_bytes} but {n_signals} signals need {expected}"
            ),
        });
    }
    if bytes.len() < expected {
        return Err(Error::EdfHeader {
            offset: bytes.len(),
            message: format!(
                "truncated header: {n_signals} signals need {expected} bytes, input has {}",
                bytes.len()
            ),
        });
    }

    // Signal headers are stored field-major.
    let mut columns: Vec<Vec<(usize, &[u8])>> = Vec::with_capacity(SIGNAL_FIELDS.len());
    for (_, width) in SIGNAL_FIELDS {
        let mut col = Vec::with_capacity(n_signals);
        for _ in 0..n_signals {
            col.push(r.take(width)?);
        }
        columns.push(col);
    }
    let text = |field: usize, i: usize| decode_ascii(columns[field][i].1);
    let num = |field: usize, i: usize| -> Result<f64> {
        let (off, raw) = columns[field][i];
        parse_number(raw, off, SIGNAL_FIELDS[field].0)
    };
    let int = |field: usize, i: usize| -> Result<i64> {
        let (off, raw) = columns[field][i];
        parse_number(raw, off, SIGNAL_FIELDS[field].0)
    };

    let mut signal_specs = Vec::with_capacity(n_signals);
    for i in 0..n_signals {
        let spec = SignalSpec {
            label: text(0, i),
            transducer: text(1, i),
            physical_dimension: text(2, i),
            physical_min: num(3, i)?,
            physical_max: num(4, i)?,
            digital_min: int(5, i)? as i32,
            digital_max: int(6, i)? as i32,
            prefiltering: text(7, i),
            samples_per_record: int(8, i)?.max(0) as usize,
            reserved: text(9, i),
        };
        if spec.digital_min >= spec.digital_max {
            return Err(Error::EdfHeader {
                offset: columns[5][i].0,
                message: format!(
                    "signal {i} ({}): digital_min {} must be below digital_max {}",
                    spec.label, spec.digital_min, spec.digital_max
                ),
            });
        }
        if spec.physical_min == spec.physical_max {
            return Err(Error::EdfHeader {
                offset: columns[3][i].0,
                message: format!("signal {i} ({}): physical_min equals physical_max", spec.label),
            });
        }
        if spec.samples_per_record == 0 {
            return Err(Error::EdfHeader {
                offset: columns[8][i].0,
                message: format!("signal {i} ({}): samples_per_record must be >= 1", spec.label),
            });
        }
        signal_specs.push(spec);
    }

    let header = EdfHeader {
        version,
        patient_id,
        recording_id,
        start_datetime,
        header_bytes,
        reserved,
        n_data_records,
        record_duration_s,
        n_signals,
        signal_specs,
    };
    let annotation_only = header.signal_specs.iter().all(SignalSpec::is_annotation);
    if *header.record_duration_s.numer() == 0 && !annotation_only {
        return Err(Error::EdfHeader {
            offset: duration_offset,
            message: "record duration must be positive".into(),
        });
    }
    if header.kind() == EdfKind::EdfPlusDiscontinuous {
        return Err(Error::Unsupported(
            "EDF+D (discontinuous) recordings are not supported".into(),
        ));
    }
    Ok(header)
}

/// Decode the selected signals to physical units.
pub fn read_edf_signals(data: &[u8], header: &EdfHeader, selection: &[&str]) -> Result<Vec<Channel>> {
    let indices = selection
        .iter()
        .map(|label| {
            header
                .signal_index(label)
                .filter(|&i| !header.signal_specs[i].is_annotation())
                .ok_or_else(|| Error::MissingChannel((*label).to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let n_records = header.records_in_file(data.len())?;
    let record_bytes = header.record_bytes();

    // Byte offset of every signal inside one data record.
    let mut offsets = Vec::with_capacity(header.n_signals);
    let mut acc = 0usize;
    for s in &header.signal_specs {
        offsets.push(acc);
        acc += s.samples_per_record * 2;
    }

    indices
        .iter()
        .map(|&i| {
            let spec = &header.signal_specs[i];
            let rate = header
                .sampling_rate(i)
                .ok_or_else(|| Error::EdfData(format!("signal {} has no sampling rate", spec.label)))?;
            let spr = spec.samples_per_record;
            let mut samples = Vec::with_capacity(spr * n_records);
            for rec in 0..n_records {
                let start = header.header_bytes + rec * record_bytes + offsets[i];
                let chunk = &data[start..start + spr * 2];
                samples.extend(
                    chunk
                        .chunks_exact(2)
                        .map(|b| spec.to_physical(i32::from(i16::from_le_bytes([b[0], b[1]])))),
                );
            }
            Ok(Channel::new(spec.label.clone(), rate, samples))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Annotation {
    pub onset_s: f64,
    pub duration_s: Option<f64>,
    pub text: String,
}

/// Decode every TAL in one data record's annotation bytes. Time-keeping TALs
/// without text are skipped.
pub fn parse_tal_record(bytes: &[u8], record: usize) -> Result<Vec<Annotation>> {
    let err = |message: String| Error::Annotation { record, message };
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            0 => {
                i += 1;
            }
            b'+' | b'-' => {
                let end = bytes[i..]
                    .iter()
                    .position(|&b| b == 0)
                    .map(|p| i + p)
                    .ok_or_else(|| err(format!("TAL starting at byte {i} is not terminated by 0x00")))?;
                let tal = &bytes[i..end];
                let first_sep = tal
                    .iter()
                    .position(|&b| b == TAL_SEPARATOR)
                    .ok_or_else(|| err(format!("TAL starting at byte {i} has no 0x14 after its onset")))?;
                let (onset_part, rest) = (&tal[..first_sep], &tal[first_sep + 1..]);
                let (onset_raw, duration_raw) = match onset_part.iter().position(|&b| b == TAL_DURATION) {
                    Some(p) => (&onset_part[..p], Some(&onset_part[p + 1..])),
                    None => (onset_part, None),
                };
                let onset_s = parse_tal_number(onset_raw)
                    .ok_or_else(|| err(format!("bad TAL onset {:?}", String::from_utf8_lossy(onset_raw))))?;
                let duration_s = match duration_raw {
                    Some(raw) => Some(parse_tal_duration(raw).ok_or_else(|| {
                        err(format!("bad TAL duration {:?}", String::from_utf8_lossy(raw)))
                    })?),
                    None => None,
                };
                if !rest.is_empty() && rest.last() != Some(&TAL_SEPARATOR) {
                    return Err(err(format!("TAL starting at byte {i} does not end with 0x14")));
                }
                for text in rest.split(|&b| b == TAL_SEPARATOR) {
                    if !text.is_empty() {
                        out.push(Annotation {
                            onset_s,
                            duration_s,
                            text: String::from_utf8_lossy(text).into_owned(),
                        });
                    }
                }
                i = end + 1;
            }
            other => {
                return Err(err(format!("unexpected byte 0x{other:02x} at {i}, expected a TAL onset sign")));
            }
        }
    }
    Ok(out)
}

fn parse_tal_number(raw: &[u8]) -> Option<f64> {
    let text = std::str::from_utf8(raw).ok()?;
    let digits = text.strip_prefix(['+', '-'])?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return None;
    }
    let v: f64 = text.parse().ok()?;
    Some(v)
}

/// Durations are unsigned decimals.
fn parse_tal_duration(raw: &[u8]) -> Option<f64> {
    let text = std::str::from_utf8(raw).ok()?;
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit() || b == b'.') {
        return None;
    }
    text.parse().ok()
}

/// Collect all annotations from every `EDF Annotations` signal, ordered by onset.
pub fn parse_edfplus_annotations(data: &[u8], header: &EdfHeader) -> Result<Vec<Annotation>> {
    let annotation_signals: Vec<usize> = header
        .signal_specs
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_annotation())
        .map(|(i, _)| i)
        .collect();
    if annotation_signals.is_empty() {
        return Err(Error::Unsupported(format!(
            "file has no '{ANNOTATION_LABEL}' signal"
        )));
    }
    let n_records = header.records_in_file(data.len())?;
    let record_bytes = header.record_bytes();
    let mut offsets = Vec::with_capacity(header.n_signals);
    let mut acc = 0usize;
    for s in &header.signal_specs {
        offsets.push(acc);
        acc += s.samples_per_record * 2;
    }
    let mut out = Vec::new();
    for rec in 0..n_records {
        for &i in &annotation_signals {
            let start = header.header_bytes + rec * record_bytes + offsets[i];
            let len = header.signal_specs[i].samples_per_record * 2;
            out.extend(parse_tal_record(&data[start..start + len], rec)?);
        }
    }
    out.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    Ok(out)
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Load the selected channels of an EDF file as a [`Recording`].
pub fn load_recording(
    path: &Path,
    selection: &[&str],
    subject_id: &str,
    recording_id: &str,
) -> Result<Recording> {
    let data = read_file(path)?;
    let header = parse_edf_header(&data)?;
    let channels = read_edf_signals(&data, &header, selection)?;
    let mut recording = Recording::new(subject_id, recording_id, channels)?;
    recording.start_datetime = Some(header.start_datetime);
    recording.source_path = Some(path.display().to_string());
    Ok(recording)
}
