//! Turning the dataset section of a config into concrete recordings, and
//! loading extracted feature matrices back.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hypnos_core::eval::{Dataset, LabeledRecording};
use hypnos_core::windowing::{read_matrix, MatrixSidecar};
use hypnos_core::SleepStage;

use crate::config::{DatasetConfig, HypnogramSource, RunConfig, SubjectRule};
use crate::UsageError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypnogramRef {
    Csv(PathBuf),
    /// EDF+ file carrying stage annotations (possibly the PSG itself).
    Annotations(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRecording {
    pub psg: PathBuf,
    pub hypnogram: HypnogramRef,
    pub subject_id: String,
    pub recording_id: String,
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// File name without extension and without a trailing `-PSG`.
pub fn recording_id_for(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_suffix("-PSG").map(str::to_string).unwrap_or(stem)
}

pub fn subject_id_for(path: &Path, rule: &SubjectRule) -> Result<String> {
    let name = file_name(path);
    let id = match rule {
        SubjectRule::SleepEdf => {
            let chars: Vec<char> = name.chars().collect();
            if chars.len() < 6 || !chars[3..5].iter().all(char::is_ascii_digit) {
                bail!("{name}: not a Sleep-EDF style name (expected e.g. SC4001E0-PSG.edf)");
            }
            format!("{}{}", chars[..2].iter().collect::<String>(), chars[3..5].iter().collect::<String>())
        }
        SubjectRule::FileStem => recording_id_for(path),
        SubjectRule::Prefix { len } => name.chars().take(*len).collect(),
    };
    if id.is_empty() {
        bail!("{name}: empty subject id");
    }
    Ok(id)
}

fn hypnogram_for(psg: &Path, source: &HypnogramSource) -> Result<HypnogramRef> {
    let dir = psg.parent().unwrap_or(Path::new("."));
    match source {
        HypnogramSource::CsvSidecar { suffix } => {
            Ok(HypnogramRef::Csv(dir.join(format!("{}{suffix}", recording_id_for(psg)))))
        }
        HypnogramSource::EdfAnnotations => Ok(HypnogramRef::Annotations(psg.to_path_buf())),
        HypnogramSource::SleepEdfPair => {
            let name = file_name(psg);
            let prefix: String = name.chars().take(6).collect();
            let pattern = dir.join(format!("{}*-Hypnogram.edf", glob::Pattern::escape(&prefix)));
            let matches: Vec<PathBuf> = glob::glob(&pattern.to_string_lossy())?.filter_map(|p| p.ok()).collect();
            match matches.as_slice() {
                [one] => Ok(HypnogramRef::Annotations(one.clone())),
                [] => bail!("no hypnogram matching {}", pattern.display()),
                _ => bail!("several hypnograms match {}", pattern.display()),
            }
        }
    }
}

/// Recordings named by the config, explicit entries first, then glob
/// matches in sorted order. Relative paths are taken from `base`.
pub fn resolve_recordings(ds: &DatasetConfig, base: &Path) -> Result<Vec<ResolvedRecording>> {
    let abs = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
    let mut out = Vec::new();
    for e in &ds.recordings {
        let psg = abs(&e.psg);
        let hypnogram = match &e.hypnogram {
            Some(h) if h.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")) => HypnogramRef::Csv(abs(h)),
            Some(h) => HypnogramRef::Annotations(abs(h)),
            None => hypnogram_for(&psg, &ds.hypnogram)?,
        };
        let subject_id = match &e.subject_id {
            Some(s) => s.clone(),
            None => subject_id_for(&psg, &ds.subject_id)?,
        };
        let recording_id = e.recording_id.clone().unwrap_or_else(|| recording_id_for(&psg));
        out.push(ResolvedRecording { psg, hypnogram, subject_id, recording_id });
    }
    for pattern in &ds.psg_globs {
        let full = abs(Path::new(pattern));
        let mut paths: Vec<PathBuf> = glob::glob(&full.to_string_lossy())
            .with_context(|| format!("bad glob {pattern:?}"))?
            .filter_map(|p| p.ok())
            .collect();
        paths.sort();
        for psg in paths {
            out.push(ResolvedRecording {
                hypnogram: hypnogram_for(&psg, &ds.hypnogram)?,
                subject_id: subject_id_for(&psg, &ds.subject_id)?,
                recording_id: recording_id_for(&psg),
                psg,
            });
        }
    }
    let mut seen = BTreeSet::new();
    for r in &out {
        if !seen.insert(&r.recording_id) {
            bail!("recording id {} appears twice in the dataset", r.recording_id);
        }
    }
    if out.is_empty() {
        bail!("dataset {} lists no recordings", ds.name);
    }
    Ok(out)
}

pub fn matrix_path(dir: &Path, recording_id: &str) -> PathBuf {
    dir.join(format!("{recording_id}.bin"))
}

fn to_labeled(path: &Path) -> Result<(LabeledRecording, MatrixSidecar)> {
    let (m, side) = read_matrix(path).with_context(|| format!("loading {}", path.display()))?;
    let stages = side
        .stages
        .iter()
        .map(|s| s.parse::<SleepStage>())
        .collect::<hypnos_core::Result<Vec<_>>>()?;
    let rec = LabeledRecording {
        subject_id: m.subject_id,
        recording_id: m.recording_id,
        epoch_index: m.epoch_index,
        features: m.values,
        stages,
    };
    Ok((rec, side))
}

fn provenance_str<'a>(side: &'a MatrixSidecar, key: &str) -> &'a str {
    side.provenance.get(key).and_then(|v| v.as_str()).unwrap_or("")
}

/// Matrices for every recording in the config, checked to come from the
/// current extraction settings.
pub fn load_configured(cfg: &RunConfig, base: &Path, exclude: &[String]) -> Result<Dataset> {
    let expected = cfg.extraction_digest()?;
    let schema_hash = cfg.schema()?.hash();
    let dir = cfg.features_dir();
    let mut recordings = Vec::new();
    for r in resolve_recordings(&cfg.dataset, base).map_err(UsageError::wrap)? {
        if exclude.contains(&r.subject_id) {
            continue;
        }
        let path = matrix_path(&dir, &r.recording_id);
        if !path.exists() {
            return Err(UsageError::msg(format!(
                "{} has no feature matrix at {}; run `extract` first",
                r.recording_id,
                path.display()
            )));
        }
        let (rec, side) = to_labeled(&path)?;
        if provenance_str(&side, "extraction_digest") != expected || side.schema_hash != schema_hash {
            return Err(UsageError::msg(format!(
                "{} was extracted with different settings; re-run `extract`",
                path.display()
            )));
        }
        recordings.push(rec);
    }
    Ok(Dataset { name: cfg.dataset.name.clone(), schema_hash, recordings })
}

/// Every matrix in `dir`, sorted by file name. All must share one
/// extraction digest and the expected schema hash.
pub fn load_directory(dir: &Path, schema_hash: &str) -> Result<Dataset> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .map_err(UsageError::wrap)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "bin"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(UsageError::msg(format!("no feature matrices in {}", dir.display())));
    }
    let mut recordings = Vec::new();
    let mut digest: Option<String> = None;
    let mut name = String::new();
    for p in &paths {
        let (rec, side) = to_labeled(p)?;
        let d = provenance_str(&side, "extraction_digest").to_string();
        match &digest {
            None => {
                digest = Some(d);
                name = provenance_str(&side, "dataset").to_string();
            }
            Some(first) if *first != d => {
                return Err(UsageError::msg(format!("{} mixes extraction settings", dir.display())));
            }
            _ => {}
        }
        if side.schema_hash != schema_hash {
            return Err(anyhow!(UsageError(format!(
                "{}: schema {} does not match {}",
                p.display(),
                side.schema_hash,
                schema_hash
            ))));
        }
        recordings.push(rec);
    }
    Ok(Dataset { name, schema_hash: schema_hash.to_string(), recordings })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sleep_edf_names() {
        let p = Path::new("/data/SC4012E0-PSG.edf");
        assert_eq!(recording_id_for(p), "SC4012E0");
        assert_eq!(subject_id_for(p, &SubjectRule::SleepEdf).unwrap(), "SC01");
        assert_eq!(subject_id_for(Path::new("ST7022J0-PSG.edf"), &SubjectRule::SleepEdf).unwrap(), "ST02");
        assert_eq!(subject_id_for(p, &SubjectRule::Prefix { len: 5 }).unwrap(), "SC401");
        assert!(subject_id_for(Path::new("night.edf"), &SubjectRule::SleepEdf).is_err());
    }

    #[test]
    fn sleep_edf_pairing() {
        let dir = tempfile::tempdir().unwrap();
        let psg = dir.path().join("SC4001E0-PSG.edf");
        std::fs::write(&psg, b"").unwrap();
        assert!(hypnogram_for(&psg, &HypnogramSource::SleepEdfPair).is_err());
        let hyp = dir.path().join("SC4001EC-Hypnogram.edf");
        std::fs::write(&hyp, b"").unwrap();
        assert_eq!(hypnogram_for(&psg, &HypnogramSource::SleepEdfPair).unwrap(), HypnogramRef::Annotations(hyp));
    }
}
