//! Dataset CSV format.
//!
//! Header is `f0,...,f{d-1},label[,env][,split]`. Features are written with
//! Rust's shortest round-trip float formatting, so save followed by load
//! reproduces the exact bit pattern. Labels and environments are bare
//! non-negative integers; split tags are `train`/`val`/`test`.

use std::path::Path;

use crate::data::{Dataset, SplitTag};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Declared layout of a dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetSchema {
    pub num_classes: usize,
    pub num_envs: usize,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            num_classes: 2,
            num_envs: 2,
        }
    }
}

/// Writes a dataset; see the module doc for the format.
pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.dim()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    if dataset.env().is_some() {
        header.push("env".into());
    }
    if dataset.split_tags().is_some() {
        header.push("split".into());
    }
    writer.write_record(&header)?;

    for i in 0..dataset.len() {
        let mut record: Vec<String> = dataset
            .features()
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        record.push(dataset.labels()[i].to_string());
        if let Some(env) = dataset.env() {
            record.push(env[i].to_string());
        }
        if let Some(tags) = dataset.split_tags() {
            record.push(tags[i].as_str().into());
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_csv`] (or any file matching the format).
/// Every column before `label` is a feature; `env` and `split` are optional.
/// Row order is preserved.
pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<Dataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();

    let label_col = names.iter().position(|n| *n == "label").ok_or_else(|| {
        Error::MissingColumn {
            column: "label".into(),
            path: path.display().to_string(),
        }
    })?;
    let env_col = names.iter().position(|n| *n == "env");
    let split_col = names.iter().position(|n| *n == "split");
    let feature_cols: Vec<usize> = (0..names.len())
        .filter(|i| *i != label_col && Some(*i) != env_col && Some(*i) != split_col)
        .collect();

    let parse_cell = |row: usize, col: usize, value: &str| Error::ParseCell {
        row,
        column: names[col].to_string(),
        value: value.to_string(),
    };

    let mut features: Vec<f64> = Vec::new();
    let mut y = Vec::new();
    let mut env: Vec<usize> = Vec::new();
    let mut split: Vec<SplitTag> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for &c in &feature_cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| parse_cell(row, c, raw))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("feature `{}` at data row {row}", names[c]),
                });
            }
            features.push(v);
        }
        let raw = record.get(label_col).unwrap_or("");
        let label: usize = raw.parse().map_err(|_| parse_cell(row, label_col, raw))?;
        if label >= schema.num_classes {
            return Err(Error::LabelOutOfRange {
                row,
                label,
                num_classes: schema.num_classes,
            });
        }
        y.push(label);
        if let Some(c) = env_col {
            let raw = record.get(c).unwrap_or("");
            let e: usize = raw.parse().map_err(|_| parse_cell(row, c, raw))?;
            if e >= schema.num_envs {
                return Err(Error::EnvOutOfRange {
                    row,
                    env: e,
                    num_envs: schema.num_envs,
                });
            }
            env.push(e);
        }
        if let Some(c) = split_col {
            let raw = record.get(c).unwrap_or("");
            split.push(SplitTag::parse(raw).ok_or_else(|| parse_cell(row, c, raw))?);
        }
    }

    let n = y.len();
    let x = Matrix::from_vec(n, feature_cols.len(), features)?;
    Dataset::new(
        x,
        y,
        env_col.map(|_| env),
        split_col.map(|_| split),
    )
}
