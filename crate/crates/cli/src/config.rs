use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use entangle::measurement::NoiseConfig;
use entangle::tomography::{read_scheme_csv, table1_scheme, TomographyScheme};
use entangle::SourceConfig;
use serde::{Deserialize, Serialize};

/// Built-in scheme name; anything else is read as a settings CSV path.
pub const TABLE1_SCHEME: &str = "table1";

/// Pairs per setting when a config does not say; the size of the shipped
/// tomography data set.
const DEFAULT_PAIRS: f64 = 71322.0;

/// Everything a run needs besides its command-line arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub scheme: String,
    pub pairs_per_setting: f64,
    pub noise: NoiseConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            scheme: TABLE1_SCHEME.to_string(),
            pairs_per_setting: DEFAULT_PAIRS,
            noise: NoiseConfig::default(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text)
            .map_err(entangle::Error::from)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }
}

pub fn load_scheme(name: &str) -> Result<TomographyScheme> {
    if name == TABLE1_SCHEME {
        return Ok(table1_scheme());
    }
    let file = fs::File::open(name).with_context(|| format!("opening scheme file {name}"))?;
    read_scheme_csv(file).with_context(|| format!("reading scheme file {name}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn unknown_field_is_named() {
        let err = serde_json::from_str::<RunConfig>(r#"{"source": {"chi": 3}}"#).unwrap_err();
        assert!(err.to_string().contains("chi"));
        assert_eq!(err.line(), 1);
    }

    #[test]
    fn roundtrips() {
        let mut cfg = RunConfig::default();
        cfg.source.chi_deg = 25.17;
        cfg.noise.rng_seed = 9;
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
