//! Plain-text artifacts: CSV tables with a JSON sidecar of the same stem.

use crate::error::Result;
use serde::Serialize;
use std::path::{Path, PathBuf};

/// Writes `<dir>/<stem>.csv` and `<dir>/<stem>.json`, returning both paths.
pub fn write_csv_with_sidecar<M: Serialize>(dir: &Path, stem: &str, csv: &str, sidecar: &M) -> Result<[PathBuf; 2]> {
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    std::fs::write(&csv_path, csv)?;
    write_json(&json_path, sidecar)?;
    Ok([csv_path, json_path])
}

/// Creates the parent directory if needed.
pub fn write_json<M: Serialize>(path: &Path, value: &M) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
