use serde::{Deserialize, Serialize};

use super::recording::{Channel, Recording};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ChannelKind {
    Eeg,
    Eog,
    Emg,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::Eeg => "EEG",
            ChannelKind::Eog => "EOG",
            ChannelKind::Emg => "EMG",
        }
    }
}

/// How one analysis channel is built from recorded signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Derivation {
    Pick { label: String },
    Difference { a: String, b: String },
    Average { labels: Vec<String> },
}

impl Derivation {
    pub fn inputs(&self) -> Vec<&str> {
        match self {
            Derivation::Pick { label } => vec![label.as_str()],
            Derivation::Difference { a, b } => vec![a.as_str(), b.as_str()],
            Derivation::Average { labels } => labels.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MontageOutput {
    pub name: String,
    pub kind: ChannelKind,
    pub derivation: Derivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Montage {
    pub outputs: Vec<MontageOutput>,
}

impl Montage {
    /// Sleep-EDF (cassette and telemetry) layout.
    pub fn sleep_edf() -> Self {
        let pick = |name: &str, kind, label: &str| MontageOutput {
            name: name.into(),
            kind,
            derivation: Derivation::Pick { label: label.into() },
        };
        Montage {
            outputs: vec![
                pick("EEG1", ChannelKind::Eeg, "EEG Fpz-Cz"),
                pick("EEG2", ChannelKind::Eeg, "EEG Pz-Oz"),
                pick("EOG", ChannelKind::Eog, "EOG horizontal"),
                pick("EMG", ChannelKind::Emg, "EMG submental"),
            ],
        }
    }

    /// MASS SS3 layout: two EEG derivations, averaged EOGs and averaged chin EMGs.
    pub fn mass_ss3() -> Self {
        Montage {
            outputs: vec![
                MontageOutput {
                    name: "EEG1".into(),
                    kind: ChannelKind::Eeg,
                    derivation: Derivation::Difference {
                        a: "EEG F4-CLE".into(),
                        b: "EOG Left Horiz".into(),
                    },
                },
                MontageOutput {
                    name: "EEG2".into(),
                    kind: ChannelKind::Eeg,
                    derivation: Derivation::Difference {
                        a: "EEG F8-CLE".into(),
                        b: "EEG Cz-CLE".into(),
                    },
                },
                MontageOutput {
                    name: "EOG".into(),
                    kind: ChannelKind::Eog,
                    derivation: Derivation::Average {
                        labels: vec!["EOG Left Horiz".into(), "EOG Right Horiz".into()],
                    },
                },
                MontageOutput {
                    name: "EMG".into(),
                    kind: ChannelKind::Emg,
                    derivation: Derivation::Average {
                        labels: vec!["EMG Chin1".into(), "EMG Chin2".into()],
                    },
                },
            ],
        }
    }

    /// Every recorded label the montage reads, deduplicated, in first-use order.
    pub fn input_labels(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for out in &self.outputs {
            for label in out.derivation.inputs() {
                if !seen.contains(&label) {
                    seen.push(label);
                }
            }
        }
        seen
    }

    pub fn kinds(&self) -> Vec<(String, ChannelKind)> {
        self.outputs.iter().map(|o| (o.name.clone(), o.kind)).collect()
    }

    /// The standard two-EEG, one-EOG, one-EMG arrangement.
    pub fn is_standard(&self) -> bool {
        let count = |k| self.outputs.iter().filter(|o| o.kind == k).count();
        count(ChannelKind::Eeg) == 2 && count(ChannelKind::Eog) == 1 && count(ChannelKind::Emg) == 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.outputs.is_empty() {
            return Err(Error::Montage("montage has no outputs".into()));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].iter().any(|p| p.name == o.name) {
                return Err(Error::Montage(format!("duplicate output name {}", o.name)));
            }
            if o.name.contains("__") || o.name.contains(',') {
                return Err(Error::Montage(format!(
                    "output name {:?} may not contain '__' or ','",
                    o.name
                )));
            }
            if let Derivation::Average { labels } = &o.derivation {
                if labels.is_empty() {
                    return Err(Error::Montage(format!("{}: average of zero channels", o.name)));
                }
            }
        }
        Ok(())
    }
}

fn combine<'a>(name: &str, inputs: &[&'a Channel]) -> Result<(&'a Channel, usize)> {
    let first = inputs[0];
    for c in &inputs[1..] {
        if c.rate != first.rate {
            return Err(Error::Montage(format!(
                "{name}: {} is sampled at {} but {} at {}",
                first.label, first.rate, c.label, c.rate
            )));
        }
        if c.samples.len() != first.samples.len() {
            return Err(Error::Montage(format!(
                "{name}: {} has {} samples but {} has {}",
                first.label,
                first.samples.len(),
                c.label,
                c.samples.len()
            )));
        }
    }
    Ok((first, first.samples.len()))
}

/// Build the montage outputs from a recording. The result holds exactly the
/// montage outputs, in montage order.
pub fn derive_channels(recording: &Recording, montage: &Montage) -> Result<Recording> {
    montage.validate()?;
    let mut channels = Vec::with_capacity(montage.outputs.len());
    for out in &montage.outputs {
        let inputs = out
            .derivation
            .inputs()
            .iter()
            .map(|l| recording.channel(l))
            .collect::<Result<Vec<_>>>()?;
        let (first, n) = combine(&out.name, &inputs)?;
        let samples = match &out.derivation {
            Derivation::Pick { .. } => first.samples.clone(),
            Derivation::Difference { .. } => inputs[0]
                .samples
                .iter()
                .zip(&inputs[1].samples)
                .map(|(a, b)| a - b)
                .collect(),
            Derivation::Average { .. } => {
                let k = inputs.len() as f64;
                (0..n)
                    .map(|i| inputs.iter().map(|c| c.samples[i]).sum::<f64>() / k)
                    .collect()
            }
        };
        channels.push(Channel::new(out.name.clone(), first.rate, samples));
    }
    Ok(Recording {
        channels,
        start_datetime: recording.start_datetime,
        source_path: recording.source_path.clone(),
        subject_id: recording.subject_id.clone(),
        recording_id: recording.recording_id.clone(),
    })
}
