//! Signal ingestion: EDF/EDF+ parsing, the in-memory [`Recording`] container
//! and montage derivation.

pub mod edf;
pub mod fixture;
pub mod synth;
mod montage;
mod recording;

pub use edf::{
    parse_edf_header, parse_edfplus_annotations, read_edf_signals, Annotation, EdfHeader,
    EdfKind, SignalSpec,
};
pub use montage::{derive_channels, ChannelKind, Derivation, Montage, MontageOutput};
pub use recording::{Channel, Recording, SampleRate};
