//! Experiment configuration: one JSON document, overridden field by field
//! from the command line.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::profiles::Profile;
use crate::xsb::{BilinearForm, Ensemble};

/// Every tunable of every subcommand; a subcommand reads the fields it needs
/// and fills the rest with its defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run directory name; defaults to the config file stem, then the
    /// subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dealias: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_list: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoffs: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_identity: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1_range: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub windows: Option<Vec<u64>>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_time: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_window: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<Ensemble>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<BilinearForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// A config together with where each field came from, for error messages.
#[derive(Debug, Clone, Default)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub path: Option<String>,
    text: Option<String>,
    flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{shown}: cannot read config: {e}")))?;
        Self::from_text(&text, Some(shown))
    }

    pub fn from_text(text: &str, path: Option<String>) -> Result<Self, ConfigError> {
        let shown = path.clone().unwrap_or_else(|| "<config>".into());
        if text.trim().is_empty() {
            return Err(ConfigError(format!("{shown}:1: config is empty")));
        }
        let config: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError(format!("{shown}:{}: {e}", e.line())))?;
        Ok(Self {
            config,
            path,
            text: Some(text.to_string()),
            flags: Vec::new(),
        })
    }

    /// Replaces every field present in `overrides`.
    pub fn apply_overrides(&mut self, overrides: &ExperimentConfig) -> Result<(), ConfigError> {
        let mut base = to_map(&self.config);
        for (key, value) in to_map(overrides) {
            self.flags.push(key.clone());
            base.insert(key, value);
        }
        self.config = serde_json::from_value(Value::Object(base))
            .map_err(|e| ConfigError(format!("command-line overrides: {e}")))?;
        Ok(())
    }

    /// Where `field` was set: a flag, a config line, or the default.
    pub fn locate(&self, field: &str) -> String {
        if self.flags.iter().any(|f| f == field) {
            return format!("--{}", field.replace('_', "-"));
        }
        if let (Some(text), Some(path)) = (&self.text, &self.path) {
            let needle = format!("\"{field}\"");
            if let Some(i) = text.lines().position(|l| l.contains(&needle)) {
                return format!("{path}:{}", i + 1);
            }
        }
        "default".into()
    }

    /// Validation failure for `field`, prefixed with its origin.
    pub fn error(&self, field: &str, msg: impl std::fmt::Display) -> ConfigError {
        ConfigError(format!("{}: {field}: {msg}", self.locate(field)))
    }

    pub fn run_name(&self, command: &str) -> String {
        if let Some(n) = &self.config.name {
            return n.clone();
        }
        self.path
            .as_deref()
            .and_then(|p| Path::new(p).file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| command.to_string())
    }

    pub fn profile(&self, default: &str) -> Result<Profile, ConfigError> {
        self.config
            .profile
            .as_deref()
            .unwrap_or(default)
            .parse()
            .map_err(|e| self.error("profile", e))
    }
}

fn to_map(c: &ExperimentConfig) -> Map<String, Value> {
    match serde_json::to_value(c).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!("config is a struct"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_malformed_configs_are_rejected() {
        assert!(LoadedConfig::from_text("  \n", None).is_err());
        let e = LoadedConfig::from_text("{\n  \"j\": 1,\n  \"bogus\": 2\n}", Some("a.json".into()))
            .unwrap_err();
        assert!(e.0.starts_with("a.json:3:"), "{}", e.0);
    }

    #[test]
    fn flags_override_and_are_located() {
        let text = "{\n  \"j\": 2,\n  \"dt\": 0.001\n}";
        let mut c = LoadedConfig::from_text(text, Some("cfg.json".into())).unwrap();
        let o = ExperimentConfig {
            j: Some(3),
            ..Default::default()
        };
        c.apply_overrides(&o).unwrap();
        assert_eq!(c.config.j, Some(3));
        assert_eq!(c.config.dt, Some(0.001));
        assert_eq!(c.locate("j"), "--j");
        assert_eq!(c.locate("dt"), "cfg.json:3");
        assert_eq!(c.locate("seed"), "default");
        assert_eq!(c.run_name("simulate"), "cfg");
    }
}
