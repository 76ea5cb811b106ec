#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypnos_core::signal::synth::{stage_sequence, write_sleep_edf_pair, SLEEP_EDF_LAYOUT};
use serde_json::{json, Value};

pub fn hypnos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypnos"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Sleep-EDF style recordings, one per subject number, with seeded stages.
pub fn write_dataset(dir: &Path, subjects: &[u32], n_epochs: usize) -> Vec<PathBuf> {
    subjects
        .iter()
        .map(|&s| {
            let stem = format!("SC4{s:02}1E0");
            let hyp = format!("SC4{s:02}1EC");
            let stages = stage_sequence(n_epochs, 1000 + s as u64);
            write_sleep_edf_pair(dir, &stem, &hyp, &stages, &SLEEP_EDF_LAYOUT, 2000 + s as u64)
                .unwrap()
                .0
        })
        .collect()
}

pub fn base_config() -> Value {
    json!({
        "dataset": {"name": "synthetic", "psg_globs": ["data/*-PSG.edf"]},
        "output_dir": "out",
        "parallelism": 2
    })
}

pub fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

/// `<dir>/data` holding the recordings and `<dir>/config.json`.
pub fn setup(dir: &Path, subjects: &[u32], n_epochs: usize) -> PathBuf {
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    write_dataset(&data, subjects, n_epochs);
    write_config(dir, &base_config())
}
