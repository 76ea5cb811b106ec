//! Feature matrix persistence: a raw little-endian f64 row-major file with
//! a JSON sidecar, and an optional CSV view.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{EpochFeatureMatrix, FeatureSchema};
use crate::error::{Error, Result};

pub const MATRIX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub format_version: u32,
    pub subject_id: String,
    pub recording_id: String,
    pub n_rows: usize,
    pub n_cols: usize,
    pub schema_hash: String,
    pub epoch_index: Vec<usize>,
    /// Stage label per row.
    pub stages: Vec<String>,
    /// Free-form provenance (config digest, input digests, ...).
    pub provenance: BTreeMap<String, serde_json::Value>,
    pub schema: FeatureSchema,
}

pub fn sidecar_path(bin_path: &Path) -> PathBuf {
    bin_path.with_extension("json")
}

pub fn write_matrix_binary(
    matrix: &EpochFeatureMatrix,
    stages: &[String],
    provenance: BTreeMap<String, serde_json::Value>,
    bin_path: &Path,
) -> Result<MatrixSidecar> {
    if stages.len() != matrix.n_rows() {
        return Err(Error::InvalidArgument(format!(
            "{} stage labels for {} rows",
            stages.len(),
            matrix.n_rows()
        )));
    }
    let mut bytes = Vec::with_capacity(matrix.values.len() * 8);
    for v in matrix.values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(bin_path, bytes).map_err(|e| Error::io(bin_path, e))?;
    let sidecar = MatrixSidecar {
        format_version: MATRIX_FORMAT_VERSION,
        subject_id: matrix.subject_id.clone(),
        recording_id: matrix.recording_id.clone(),
        n_rows: matrix.n_rows(),
        n_cols: matrix.values.ncols(),
        schema_hash: matrix.schema.hash(),
        epoch_index: matrix.epoch_index.clone(),
        stages: stages.to_vec(),
        provenance,
        schema: matrix.schema.clone(),
    };
    let json_path = sidecar_path(bin_path);
    let json = serde_json::to_vec_pretty(&sidecar)?;
    std::fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))?;
    Ok(sidecar)
}

pub fn read_sidecar(bin_path: &Path) -> Result<MatrixSidecar> {
    let json_path = sidecar_path(bin_path);
    let text = std::fs::read(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: MatrixSidecar = serde_json::from_slice(&text)?;
    if sidecar.format_version != MATRIX_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported matrix format version {}",
            json_path.display(),
            sidecar.format_version
        )));
    }
    Ok(sidecar)
}

/// Load a matrix written by [`write_matrix_binary`], checking its size and
/// schema hash against the sidecar.
pub fn read_matrix(bin_path: &Path) -> Result<(EpochFeatureMatrix, MatrixSidecar)> {
    let sidecar = read_sidecar(bin_path)?;
    let hash = sidecar.schema.hash();
    if hash != sidecar.schema_hash {
        return Err(Error::SchemaMismatch { expected: sidecar.schema_hash.clone(), found: hash });
    }
    if sidecar.schema.len() != sidecar.n_cols
        || sidecar.epoch_index.len() != sidecar.n_rows
        || sidecar.stages.len() != sidecar.n_rows
    {
        return Err(Error::Format(format!("{}: inconsistent sidecar dimensions", bin_path.display())));
    }
    let bytes = std::fs::read(bin_path).map_err(|e| Error::io(bin_path, e))?;
    if bytes.len() != sidecar.n_rows * sidecar.n_cols * 8 {
        return Err(Error::Format(format!(
            "{}: {} bytes, expected {} x {} doubles",
            bin_path.display(),
            bytes.len(),
            sidecar.n_rows,
            sidecar.n_cols
        )));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let values = Array2::from_shape_vec((sidecar.n_rows, sidecar.n_cols), data)
        .map_err(|e| Error::Format(e.to_string()))?;
    let matrix = EpochFeatureMatrix {
        subject_id: sidecar.subject_id.clone(),
        recording_id: sidecar.recording_id.clone(),
        epoch_index: sidecar.epoch_index.clone(),
        values,
        schema: sidecar.schema.clone(),
    };
    Ok((matrix, sidecar))
}

pub fn write_matrix_csv(matrix: &EpochFeatureMatrix, stages: &[String], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        write!(w, "subject_id,recording_id,epoch_index,stage")?;
        for name in matrix.schema.names() {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (r, row) in matrix.values.rows().into_iter().enumerate() {
            write!(
                w,
                "{},{},{},{}",
                matrix.subject_id, matrix.recording_id, matrix.epoch_index[r], stages[r]
            )?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
