//! File formats for group probabilities and precomputed embeddings.
//!
//! Group probabilities: CSV `index,q0,...,q{G-1}`; row sums are validated on
//! load. Embeddings: an inputs CSV `index,e0,...` plus a prototypes CSV
//! `env,e0,...` with one row per environment, in environment order.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grouping::{EmbeddingSet, GroupProbabilities};
use crate::numerics::Matrix;

/// Writes group probabilities with full round-trip float precision.
pub fn save_group_probs(q: &GroupProbabilities, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["index".to_string()];
    header.extend((0..q.num_groups()).map(|g| format!("q{g}")));
    writer.write_record(&header)?;
    for i in 0..q.rows() {
        let mut record = vec![i.to_string()];
        record.extend(q.row(i).iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Loads group probabilities, validating the index column and that every row
/// is a distribution.
pub fn load_group_probs(path: &Path) -> Result<GroupProbabilities> {
    let (indices, matrix) = load_indexed_matrix(path, "index")?;
    for (row, idx) in indices.iter().enumerate() {
        if *idx != row {
            return Err(Error::ParseCell {
                row,
                column: "index".into(),
                value: idx.to_string(),
            });
        }
    }
    GroupProbabilities::from_matrix(matrix)
}

/// Loads an embedding set from an inputs file and a prototypes file.
pub fn load_embeddings(
    inputs_path: &Path,
    prototypes_path: &Path,
    temperature: f64,
) -> Result<EmbeddingSet> {
    let (_, inputs) = load_indexed_matrix(inputs_path, "index")?;
    let (envs, prototypes) = load_indexed_matrix(prototypes_path, "env")?;
    for (row, env) in envs.iter().enumerate() {
        if *env != row {
            return Err(Error::ParseCell {
                row,
                column: "env".into(),
                value: env.to_string(),
            });
        }
    }
    EmbeddingSet::new(inputs, prototypes, temperature)
}

/// Reads a CSV whose first column is an integer key and whose remaining
/// columns are floats. Returns the keys and the value matrix.
fn load_indexed_matrix(path: &Path, key_column: &str) -> Result<(Vec<usize>, Matrix)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some(key_column) {
        return Err(Error::MissingColumn {
            column: key_column.into(),
            path: path.display().to_string(),
        });
    }
    let cols = headers.len() - 1;
    let names: Vec<String> = headers.iter().map(str::to_string).collect();

    let mut keys = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let raw = record.get(0).unwrap_or("");
        keys.push(raw.parse().map_err(|_| Error::ParseCell {
            row,
            column: names[0].clone(),
            value: raw.to_string(),
        })?);
        for c in 1..=cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::ParseCell {
                row,
                column: names.get(c).cloned().unwrap_or_default(),
                value: raw.to_string(),
            })?;
            data.push(v);
        }
    }
    let n = keys.len();
    Ok((keys, Matrix::from_vec(n, cols, data)?))
}
