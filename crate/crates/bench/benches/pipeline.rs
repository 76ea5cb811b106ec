use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hypnos_core::dsp::{bandpass_zero_phase, resample_rational, BandpassSpec};
use hypnos_core::features::compute_window_features;
use hypnos_core::model::{fit_logistic, LogisticOptions};
use hypnos_core::signal::synth::{stage_sequence, synth_channel, synth_recording, SLEEP_EDF_LAYOUT};
use hypnos_core::windowing::{extract_features, FeatureSchema};
use hypnos_core::{ChannelKind, FeatureParams, Montage, SampleRate};
use ndarray::Array2;

fn dsp(c: &mut Criterion) {
    let stages = stage_sequence(120, 1);
    let x = synth_channel(&stages, ChannelKind::Eeg, 256, 2);
    let spec = BandpassSpec { low_hz: 0.4, high_hz: 30.0, order: 4 };
    c.bench_function("bandpass_1h_256hz", |b| b.iter(|| bandpass_zero_phase(&x, 256.0, &spec).unwrap()));
    c.bench_function("resample_1h_256_to_100", |b| {
        b.iter(|| resample_rational(&x, SampleRate::from_hz(256), SampleRate::from_hz(100)).unwrap())
    });
}

fn window_features(c: &mut Criterion) {
    let params = FeatureParams::default();
    let mut group = c.benchmark_group("window_features");
    for (kind, span) in [(ChannelKind::Eeg, 30), (ChannelKind::Eeg, 90), (ChannelKind::Emg, 30)] {
        let stages = stage_sequence(span / 30, 3);
        let x = synth_channel(&stages, kind, 100, 4);
        group.bench_with_input(BenchmarkId::new(kind.as_str(), span), &x, |b, x| {
            b.iter(|| compute_window_features(x, 100.0, kind, &params))
        });
    }
    group.finish();
}

fn extraction(c: &mut Criterion) {
    let stages = stage_sequence(120, 5);
    let rec = synth_recording(&stages, &SLEEP_EDF_LAYOUT, 5, "s", "r").unwrap();
    let montage = Montage::sleep_edf();
    let derived = hypnos_core::signal::derive_channels(&rec, &montage).unwrap();
    let schema = FeatureSchema::new(&montage.kinds()).unwrap();
    let params = FeatureParams::default();
    let mut group = c.benchmark_group("extraction");
    group.sample_size(10);
    group.bench_function("1h_sleep_edf", |b| b.iter(|| extract_features(&derived, &schema, &params).unwrap()));
    group.finish();
}

fn logistic(c: &mut Criterion) {
    let (n, d, k) = (5000, 100, 5);
    let y: Vec<usize> = (0..n).map(|i| i % k).collect();
    let x = Array2::from_shape_fn((n, d), |(r, j)| {
        let h = ((r * 7919 + j * 104_729) % 1000) as f64 / 1000.0;
        h + if j % k == y[r] { 0.5 } else { 0.0 }
    });
    let opts = LogisticOptions::default();
    let mut group = c.benchmark_group("logistic");
    group.sample_size(10);
    group.bench_function("fit_5000x100x5", |b| b.iter(|| fit_logistic(x.view(), &y, k, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, dsp, window_features, extraction, logistic);
criterion_main!(benches);
