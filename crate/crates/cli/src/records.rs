//! Locating and loading record files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use nopress::record::GameRecord;

/// Expands files, directories (their `*.json` entries) and glob patterns.
pub fn expand(inputs: &[String]) -> anyhow::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for input in inputs {
        let path = Path::new(input);
        if path.is_dir() {
            let pattern = path.join("*.json");
            out.extend(matches(&pattern.to_string_lossy())?);
        } else if path.is_file() {
            out.push(path.to_path_buf());
        } else {
            out.extend(matches(input)?);
        }
    }
    out.sort();
    out.dedup();
    if out.is_empty() {
        bail!("no records match {}", inputs.join(" "));
    }
    Ok(out)
}

fn matches(pattern: &str) -> anyhow::Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).with_context(|| format!("bad pattern `{pattern}`"))?;
    Ok(paths
        .filter_map(Result::ok)
        .filter(|p| p.is_file())
        .collect())
}

pub fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Loads every record that parses; the others are reported and skipped.
pub fn load_all(paths: &[PathBuf]) -> anyhow::Result<Vec<GameRecord>> {
    let mut out = Vec::with_capacity(paths.len());
    for p in paths {
        match GameRecord::from_json(&read(p)?) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("skipping {}: {e}", p.display()),
        }
    }
    Ok(out)
}
