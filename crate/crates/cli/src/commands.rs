//! Subcommand implementations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hypnos_core::eval::{
    grouped_kfold, run_dt, run_lfs_cv, write_confusion_csv, write_predictions_csv, EvalOutcome,
};
use hypnos_core::labels::{
    annotations_to_hypnogram, exclude_invalid, map_rk_to_aasm, read_hypnogram_csv, trim_wake,
};
use hypnos_core::model::{fit_pca, fit_pipeline, fit_quantile, TrainingMeta};
use hypnos_core::preprocess::preprocess;
use hypnos_core::signal::edf::{load_recording, read_file};
use hypnos_core::signal::{derive_channels, parse_edf_header, parse_edfplus_annotations};
use hypnos_core::windowing::{
    extract_features, extract_features_range, read_sidecar, segment_epochs, write_matrix_binary,
    write_matrix_csv, EpochFeatureMatrix,
};
use hypnos_core::{
    Dataset, EvalReport, Hypnogram, LabelReport, LinearPipeline, Protocol, Recording, CLASSES,
};
use ndarray::{concatenate, Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Overrides, ProtocolChoice, RunConfig};
use crate::dataset::{load_configured, load_directory, matrix_path, resolve_recordings, HypnogramRef, ResolvedRecording};
use crate::logging::StageTimer;
use crate::{PartialFailure, UsageError};

/// Load the config, set up the worker pool, and run `f` inside it.
pub fn with_config<F>(path: &Path, overrides: &Overrides, f: F) -> Result<()>
where
    F: FnOnce(&RunConfig, &Path) -> Result<()> + Send,
{
    let (cfg, base) = RunConfig::load(path, overrides).map_err(UsageError::wrap)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .context("building worker pool")?;
    pool.install(|| f(&cfg, &base))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn inspect(path: &Path) -> Result<()> {
    let data = read_file(path).map_err(|e| UsageError::msg(e.to_string()))?;
    let header = parse_edf_header(&data).map_err(|e| UsageError::msg(format!("{}: {e}", path.display())))?;
    let rates: Vec<Value> = (0..header.n_signals)
        .map(|i| json!(header.sampling_rate(i).map(|r| r.hz())))
        .collect();
    let mut report = serde_json::to_value(&header)?;
    report["kind"] = serde_json::to_value(header.kind())?;
    report["sample_rates_hz"] = Value::Array(rates);
    report["records_in_file"] = json!(header.records_in_file(data.len()).ok());
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn load_hypnogram(r: &ResolvedRecording, duration_s: f64) -> Result<Hypnogram> {
    let h = match &r.hypnogram {
        HypnogramRef::Csv(p) => read_hypnogram_csv(p, &r.subject_id, &r.recording_id)?,
        HypnogramRef::Annotations(p) => {
            let data = read_file(p)?;
            let header = parse_edf_header(&data)?;
            let anns = parse_edfplus_annotations(&data, &header)?;
            annotations_to_hypnogram(&anns, duration_s, &r.subject_id, &r.recording_id)?
        }
    };
    Ok(h)
}

fn input_digest(r: &ResolvedRecording, extraction_digest: &str) -> Result<String> {
    let mut h = Sha256::new();
    let hyp = match &r.hypnogram {
        HypnogramRef::Csv(p) | HypnogramRef::Annotations(p) => p,
    };
    for p in [&r.psg, hyp] {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    h.update(extraction_digest.as_bytes());
    Ok(hex::encode(h.finalize()))
}

fn conditioned(cfg: &RunConfig, psg: &Path, subject_id: &str, recording_id: &str) -> Result<Recording> {
    let montage = cfg.dataset.montage.resolve()?;
    let raw = load_recording(psg, &montage.input_labels(), subject_id, recording_id)?;
    let derived = derive_channels(&raw, &montage)?;
    let timer = StageTimer::start("preprocess", Some(recording_id));
    let (rec, reports) = preprocess(&derived, &montage.kinds(), &cfg.preprocessing)?;
    timer.finish();
    for rep in reports {
        log::debug!("{recording_id}: {}", serde_json::to_string(&rep)?);
    }
    Ok(rec)
}

enum ExtractStatus {
    Written,
    Current,
}

fn extract_one(cfg: &RunConfig, r: &ResolvedRecording, dir: &Path) -> Result<ExtractStatus> {
    let extraction_digest = cfg.extraction_digest()?;
    let digest = input_digest(r, &extraction_digest)?;
    let bin = matrix_path(dir, &r.recording_id);
    if bin.exists() {
        if let Ok(side) = read_sidecar(&bin) {
            if side.provenance.get("input_digest").and_then(Value::as_str) == Some(digest.as_str()) {
                return Ok(ExtractStatus::Current);
            }
        }
    }

    let rec = conditioned(cfg, &r.psg, &r.subject_id, &r.recording_id)?;
    let n_epochs = segment_epochs(&rec)?.n_epochs;
    let mut hyp = map_rk_to_aasm(&load_hypnogram(r, rec.duration_s())?);
    if hyp.len() != n_epochs {
        log::debug!("{}: hypnogram has {} epochs, signal {n_epochs}", r.recording_id, hyp.len());
    }
    hyp.fit_to(n_epochs);
    let raw_counts = hyp.counts();
    let range = if cfg.dataset.trim_wake { trim_wake(&hyp)? } else { 0..n_epochs };

    let schema = cfg.schema()?;
    let timer = StageTimer::start("extract", Some(&r.recording_id));
    let matrix = extract_features_range(&rec, &schema, &cfg.features, range.clone())?;
    timer.finish();
    let mut in_range = hyp.clone();
    in_range.stages = hyp.stages[range.clone()].to_vec();
    let (kept, matrix) = exclude_invalid(&in_range, &matrix)?;

    let stages: Vec<String> = kept.stages.iter().map(|s| s.as_str().to_string()).collect();
    let provenance: BTreeMap<String, Value> = [
        ("dataset", json!(cfg.dataset.name)),
        ("config_digest", json!(cfg.config_digest())),
        ("extraction_digest", json!(extraction_digest)),
        ("input_digest", json!(digest)),
        ("psg", json!(r.psg.file_name().map(|s| s.to_string_lossy()))),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    write_matrix_binary(&matrix, &stages, provenance, &bin)?;
    if cfg.write_csv {
        write_matrix_csv(&matrix, &stages, &bin.with_extension("csv"))?;
    }
    let report = LabelReport {
        subject_id: r.subject_id.clone(),
        recording_id: r.recording_id.clone(),
        n_epochs,
        raw_counts,
        kept_counts: kept.counts(),
        excluded: in_range.len() - kept.len(),
        trim_range: cfg.dataset.trim_wake.then_some([range.start, range.end]),
    };
    write_json(
        &dir.join(format!("{}.labels.json", r.recording_id)),
        &json!({
            "report": report,
            "config_digest": cfg.config_digest(),
            "schema_hash": schema.hash(),
        }),
    )?;
    Ok(ExtractStatus::Written)
}

pub fn extract(cfg: &RunConfig, base: &Path) -> Result<()> {
    let recordings = resolve_recordings(&cfg.dataset, base).map_err(UsageError::wrap)?;
    let dir = cfg.features_dir();
    create_dir(&dir)?;
    let outcomes: Vec<(String, Result<ExtractStatus>)> = recordings
        .par_iter()
        .map(|r| (r.recording_id.clone(), extract_one(cfg, r, &dir)))
        .collect();
    let mut failed = 0;
    for (id, outcome) in outcomes {
        match outcome {
            Ok(ExtractStatus::Written) => log::info!("{id}: written"),
            Ok(ExtractStatus::Current) => log::info!("{id}: up to date, skipped"),
            Err(e) => {
                failed += 1;
                log::error!("{id}: {e:#}");
            }
        }
    }
    if failed > 0 {
        return Err(PartialFailure(failed).into());
    }
    Ok(())
}

fn stack(dataset: &Dataset) -> Result<(Array2<f64>, Vec<hypnos_core::SleepStage>)> {
    let views: Vec<ArrayView2<f64>> = dataset.recordings.iter().map(|r| r.features.view()).collect();
    if views.is_empty() {
        return Err(UsageError::msg("no recordings selected"));
    }
    let x = concatenate(Axis(0), &views)?;
    let y = dataset.recordings.iter().flat_map(|r| r.stages.iter().copied()).collect();
    Ok((x, y))
}

fn model_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("model.json")
}

pub fn train(cfg: &RunConfig, base: &Path) -> Result<()> {
    let dataset = load_configured(cfg, base, &cfg.eval.exclude_subjects)?;
    let (x, y) = stack(&dataset)?;
    let meta = TrainingMeta {
        dataset: dataset.name.clone(),
        subjects: dataset.subjects(),
        config_digest: Some(cfg.config_digest()),
        ..TrainingMeta::default()
    };
    let timer = StageTimer::start("train", None);
    let model = fit_pipeline(x.view(), &y, &dataset.schema_hash, &cfg.model, meta)?;
    timer.finish();
    create_dir(&cfg.output_dir)?;
    let path = model_path(cfg);
    model.save(&path)?;
    log::info!("model written to {}", path.display());
    Ok(())
}

fn write_eval_outputs(cfg: &RunConfig, report: &EvalReport, outcome: &EvalOutcome) -> Result<()> {
    let dir = cfg.output_dir.join("reports");
    create_dir(&dir)?;
    write_json(&dir.join("eval_report.json"), report)?;
    write_confusion_csv(&outcome.pooled.confusion, &dir.join("confusion_pooled.csv"))?;
    for m in &report.per_fold {
        if let Some(f) = m.fold_id {
            write_confusion_csv(&m.confusion, &dir.join(format!("confusion_fold{f}.csv")))?;
        }
    }
    write_predictions_csv(&outcome.predictions, &dir.join("predictions.csv"))?;
    log::info!(
        "pooled mf1 {:.4} acc {:.4} kappa {:.4} over {} epochs",
        report.pooled.mf1,
        report.pooled.acc,
        report.pooled.kappa,
        report.pooled.n_epochs
    );
    Ok(())
}

pub fn evaluate(cfg: &RunConfig, base: &Path) -> Result<()> {
    let mut wall_times = BTreeMap::new();
    let timer = StageTimer::start("load", None);
    let (outcome, protocol, k, schema_hash) = match cfg.eval.protocol {
        ProtocolChoice::Lfs => {
            let dataset = load_configured(cfg, base, &[])?;
            wall_times.insert("load".to_string(), timer.finish());
            let subjects = dataset.subjects();
            let k = cfg.eval.k.unwrap_or(subjects.len());
            let plan = grouped_kfold(&subjects, k).map_err(|e| UsageError::msg(e.to_string()))?;
            let timer = StageTimer::start("cross_validate", None);
            let outcome = run_lfs_cv(&dataset, &plan, &cfg.model)?;
            wall_times.insert("cross_validate".to_string(), timer.finish());
            (outcome, Protocol::Lfs, Some(k), dataset.schema_hash)
        }
        ProtocolChoice::Dt => {
            let Some(train_dir) = &cfg.eval.train_features else {
                return Err(UsageError::msg("DT evaluation needs eval.train_features"));
            };
            let train_dir = if train_dir.is_relative() { base.join(train_dir) } else { train_dir.clone() };
            let eval_set = load_configured(cfg, base, &[])?;
            let train_set = load_directory(&train_dir, &eval_set.schema_hash)?;
            wall_times.insert("load".to_string(), timer.finish());
            let timer = StageTimer::start("transfer", None);
            let (outcome, _) = run_dt(
                &train_set,
                &eval_set,
                &cfg.model,
                &cfg.eval.exclude_subjects,
                cfg.eval.allow_subject_overlap,
            )?;
            wall_times.insert("transfer".to_string(), timer.finish());
            (outcome, Protocol::Dt, None, eval_set.schema_hash)
        }
    };
    let report = EvalReport {
        dataset: cfg.dataset.name.clone(),
        protocol,
        k,
        per_fold: outcome.per_fold.clone(),
        pooled: outcome.pooled.clone(),
        config_digest: cfg.config_digest(),
        schema_hash,
        wall_times,
    };
    write_eval_outputs(cfg, &report, &outcome)
}

pub enum PredictTarget {
    Recording(String),
    Edf(PathBuf),
}

pub fn predict(
    cfg: &RunConfig,
    base: &Path,
    model_file: &Path,
    target: &PredictTarget,
    out: Option<&Path>,
) -> Result<()> {
    let model = LinearPipeline::load(model_file).map_err(|e| UsageError::msg(e.to_string()))?;
    let schema_hash = cfg.schema()?.hash();
    if model.schema_hash != schema_hash {
        return Err(UsageError::msg(format!(
            "model schema {} does not match the configured schema {schema_hash}",
            model.schema_hash
        )));
    }
    let (matrix, recording_id): (EpochFeatureMatrix, String) = match target {
        PredictTarget::Recording(id) => {
            let dataset = load_configured(cfg, base, &[])?;
            let Some(r) = dataset.recordings.into_iter().find(|r| &r.recording_id == id) else {
                return Err(UsageError::msg(format!("recording {id} is not part of dataset {}", cfg.dataset.name)));
            };
            let m = EpochFeatureMatrix {
                subject_id: r.subject_id,
                recording_id: r.recording_id.clone(),
                epoch_index: r.epoch_index,
                values: r.features,
                schema: cfg.schema()?,
            };
            (m, r.recording_id)
        }
        PredictTarget::Edf(path) => {
            if !path.exists() {
                return Err(UsageError::msg(format!("{} does not exist", path.display())));
            }
            let id = crate::dataset::recording_id_for(path);
            let rec = conditioned(cfg, path, &id, &id)?;
            let timer = StageTimer::start("extract", Some(&id));
            let m = extract_features(&rec, &cfg.schema()?, &cfg.features)?;
            timer.finish();
            (m, id)
        }
    };
    let timer = StageTimer::start("predict", Some(&recording_id));
    let proba = model.predict_proba(matrix.values.view(), &schema_hash)?;
    let stages = model.predict(matrix.values.view(), &schema_hash)?;
    timer.finish();

    let mut csv = String::from("epoch_index,stage");
    for c in CLASSES {
        csv.push_str(&format!(",p_{}", c.as_str()));
    }
    csv.push('\n');
    for (i, row) in proba.axis_iter(Axis(0)).enumerate() {
        csv.push_str(&format!("{},{}", matrix.epoch_index[i], stages[i]));
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    let out = match out {
        Some(p) => p.to_path_buf(),
        None => cfg.output_dir.join("predictions").join(format!("{recording_id}.csv")),
    };
    if let Some(dir) = out.parent() {
        create_dir(dir)?;
    }
    std::fs::write(&out, csv).with_context(|| format!("writing {}", out.display()))?;
    write_json(
        &out.with_extension("meta.json"),
        &json!({
            "recording_id": recording_id,
            "n_epochs": matrix.n_rows(),
            "config_digest": cfg.config_digest(),
            "schema_hash": schema_hash,
            "model_config_digest": model.meta.config_digest,
        }),
    )?;
    log::info!("{} epochs scored, written to {}", matrix.n_rows(), out.display());
    Ok(())
}

pub fn project(cfg: &RunConfig, base: &Path) -> Result<()> {
    let dataset = load_configured(cfg, base, &[])?;
    let (x, y) = stack(&dataset)?;
    if x.nrows() < 3 {
        bail!("projection needs at least 3 epochs, got {}", x.nrows());
    }
    let timer = StageTimer::start("project", None);
    let xt = fit_quantile(x.view())?.apply(x.view())?;
    let pca = fit_pca(xt.view())?;
    let coords = pca.project(xt.view())?;
    timer.finish();

    let dir = cfg.output_dir.join("projection");
    create_dir(&dir)?;
    let mut csv = String::from("subject_id,recording_id,epoch_index,pc1,pc2,stage\n");
    let mut row = 0;
    for r in &dataset.recordings {
        for (i, &e) in r.epoch_index.iter().enumerate() {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.subject_id,
                r.recording_id,
                e,
                coords[[row, 0]],
                coords[[row, 1]],
                r.stages[i]
            ));
            row += 1;
        }
    }
    debug_assert_eq!(row, y.len());
    std::fs::write(dir.join("pca.csv"), csv).context("writing pca.csv")?;
    write_json(
        &dir.join("pca.json"),
        &json!({
            "explained_variance": pca.explained_variance,
            "explained_variance_ratio": pca.explained_variance_ratio,
            "n_rows": x.nrows(),
            "config_digest": cfg.config_digest(),
            "schema_hash": dataset.schema_hash,
        }),
    )?;
    Ok(())
}
