//! Optional TOML key-value config. Precedence: flags, then file, then defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threshold: Option<f64>,
    pub nn_mode: Option<String>,
    pub variant: Option<Vec<String>>,
    pub merge_runs: Option<bool>,
    #[serde(default)]
    pub filter_label: Vec<String>,
    pub format: Option<String>,
    pub window_ms: Option<i64>,
    pub seed: Option<u64>,
    pub sigma_deg: Option<f64>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c: FileConfig = toml::from_str(
            "threshold = 0.1\nnn_mode = \"paper-literal\"\nvariant = [\"nn\"]\nfilter_label = [\"Book\"]\n",
        )
        .unwrap();
        assert_eq!(c.threshold, Some(0.1));
        assert_eq!(c.variant.as_deref(), Some(&["nn".to_string()][..]));
        assert_eq!(c.filter_label, vec!["Book"]);
    }

    #[test]
    fn unknown_keys_fail() {
        assert!(toml::from_str::<FileConfig>("thresold = 0.1").is_err());
    }
}
