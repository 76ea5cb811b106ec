use hypnos_core::features::feature_catalog;
use hypnos_core::signal::synth::{stage_sequence, synth_recording};
use hypnos_core::windowing::{extract_features, extract_features_range};
use hypnos_core::{Channel, ChannelKind, FeatureParams, FeatureSchema, Montage, Recording, SampleRate};
use sha2::{Digest, Sha256};

const LAYOUT: [(&str, ChannelKind, u64); 4] = [
    ("EEG1", ChannelKind::Eeg, 100),
    ("EEG2", ChannelKind::Eeg, 100),
    ("EOG", ChannelKind::Eog, 100),
    ("EMG", ChannelKind::Emg, 1),
];

fn schema() -> FeatureSchema {
    FeatureSchema::new(&Montage::sleep_edf().kinds()).unwrap()
}

#[test]
fn schema_hash_matches_golden_file() {
    let golden = include_str!("data/schema_hash.txt").trim();
    assert_eq!(schema().hash(), golden);
}

#[test]
fn schema_names_follow_the_documented_layout() {
    // Rebuilt here from the catalog, independent of the schema code.
    let mut names = Vec::new();
    for (ch, kind) in [("EEG1", ChannelKind::Eeg), ("EEG2", ChannelKind::Eeg), ("EOG", ChannelKind::Eog), ("EMG", ChannelKind::Emg)] {
        for f in feature_catalog(kind) {
            let f = f.name();
            for p in ["w30", "w60_left", "w60_right", "w90"] {
                names.push(format!("{ch}__{f}__{p}__s0"));
            }
            for s in [-2, -1, 1, 2] {
                names.push(format!("{ch}__{f}__w30__s{s}"));
            }
        }
    }
    assert_eq!(schema().names(), names);
    let hash = hex::encode(Sha256::digest(names.join("\n").as_bytes()));
    assert_eq!(schema().hash(), hash);
}

fn recording(stages_seed: u64, n: usize) -> Recording {
    let stages = stage_sequence(n, stages_seed);
    synth_recording(&stages, &LAYOUT, stages_seed, "s", "r").unwrap()
}

/// The same signal with `k` extra epochs in front.
fn shifted(rec: &Recording, prefix: &Recording, k: usize) -> Recording {
    let channels = rec
        .channels
        .iter()
        .zip(&prefix.channels)
        .map(|(c, p)| {
            let per_epoch = (c.rate.hz() * 30.0) as usize;
            let mut s = p.samples[..k * per_epoch].to_vec();
            s.extend_from_slice(&c.samples);
            Channel::new(c.label.clone(), c.rate, s)
        })
        .collect();
    Recording::new("s", "r", channels).unwrap()
}

#[test]
fn interior_rows_are_translation_equivariant() {
    let schema = schema();
    let params = FeatureParams::default();
    let base = recording(1, 12);
    let moved = shifted(&base, &recording(2, 12), 3);
    let a = extract_features(&base, &schema, &params).unwrap();
    let b = extract_features(&moved, &schema, &params).unwrap();
    assert_eq!(b.n_rows(), 15);
    // Rows two or more epochs from either end see only real data.
    for r in 2..10 {
        let ra: Vec<u64> = a.values.row(r).iter().map(|v| v.to_bits()).collect();
        let rb: Vec<u64> = b.values.row(r + 3).iter().map(|v| v.to_bits()).collect();
        assert_eq!(ra, rb, "row {r}");
    }
}

#[test]
fn range_extraction_matches_full_extraction() {
    let schema = schema();
    let params = FeatureParams::default();
    let rec = recording(3, 14);
    let full = extract_features(&rec, &schema, &params).unwrap();
    let part = extract_features_range(&rec, &schema, &params, 4..9).unwrap();
    assert_eq!(part.epoch_index, (4..9).collect::<Vec<_>>());
    assert_eq!(part.values, full.values.slice(ndarray::s![4..9, ..]));
}

#[test]
fn thread_count_does_not_change_results() {
    let schema = schema();
    let params = FeatureParams::default();
    let rec = recording(4, 8);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| extract_features(&rec, &schema, &params).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert!(a.values.iter().zip(b.values.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn constant_and_flat_signals_stay_finite() {
    let schema = schema();
    for value in [0.0, 12.5] {
        let channels = LAYOUT
            .iter()
            .map(|&(l, _, r)| Channel::new(l, SampleRate::from_hz(r), vec![value; 30 * r as usize * 6]))
            .collect();
        let rec = Recording::new("s", "r", channels).unwrap();
        let m = extract_features(&rec, &schema, &FeatureParams::default()).unwrap();
        assert_eq!(m.values.dim(), (6, 1048));
        assert!(m.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn single_epoch_recording_uses_truncated_and_copied_windows() {
    let rec = recording(5, 1);
    let m = extract_features(&rec, &schema(), &FeatureParams::default()).unwrap();
    assert_eq!(m.n_rows(), 1);
    assert!(m.values.iter().all(|v| v.is_finite()));
    // All shifts clamp onto the only epoch.
    let names = schema().names();
    let at = |n: &str| m.values[[0, names.iter().position(|x| x == n).unwrap()]];
    assert_eq!(at("EEG1__std__w30__s-2"), at("EEG1__std__w30__s0"));
    assert_eq!(at("EEG1__std__w30__s2"), at("EEG1__std__w30__s0"));
}
