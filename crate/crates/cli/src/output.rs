//! Output helpers: atomic file writes and human-readable tables.
//!
//! Every artifact is written to a temporary file in the target directory and
//! renamed into place, so a failing command never leaves a partial file at
//! its final path.

use std::path::Path;

use anyhow::{Context, Result};
use pgdro_core::training::MetricsReport;

/// Writes bytes atomically (temp file plus rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new(),
    }
    .with_context(|| format!("cannot create temp file for {}", path.display()))?;
    std::fs::write(tmp.path(), contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot move output into place at {}", path.display()))?;
    Ok(())
}

/// Runs a writer against a temporary path, then renames the result into
/// place. Used for writers that insist on owning the file (CSV writers).
pub fn write_atomic_with<F>(path: &Path, writer: F) -> Result<()>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new(),
    }
    .with_context(|| format!("cannot create temp file for {}", path.display()))?;
    let tmp_path = tmp.into_temp_path();
    writer(&tmp_path)?;
    tmp_path
        .persist(path)
        .with_context(|| format!("cannot move output into place at {}", path.display()))?;
    Ok(())
}

/// Serializes a value as pretty JSON with a trailing newline.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// One aligned row of a metrics table.
pub fn metrics_row(name: &str, metrics: &MetricsReport) -> String {
    let per_group = metrics
        .per_group_acc
        .iter()
        .map(|a| format!("{a:.4}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "{name:<10} {:>8.4} {:>10.4}   [{per_group}]",
        metrics.avg_acc, metrics.worst_group_acc
    )
}

pub fn metrics_header() -> String {
    format!(
        "{:<10} {:>8} {:>10}   {}",
        "run", "avg_acc", "worst_acc", "per-group accuracies"
    )
}
