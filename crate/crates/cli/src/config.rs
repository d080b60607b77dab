//! Option defaults read from a TOML file. Command-line flags override them.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub games: Option<u64>,
    pub agents: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub year_cap: Option<u16>,
    pub solo_centers: Option<usize>,
    pub format: Option<String>,
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
