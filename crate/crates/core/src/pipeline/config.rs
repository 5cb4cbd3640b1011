use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::response::RbeKind;

pub const DEFAULT_RERANK_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config field `{field}`: {detail}")]
pub struct ConfigError {
    pub field: String,
    pub detail: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, detail: impl fmt::Display) -> Self {
        Self { field: field.into(), detail: detail.to_string() }
    }
}

/// Controller position of the exercise. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Position {
    Ground,
    Tower,
    #[default]
    Approach,
    Area,
}

impl std::str::FromStr for Position {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GROUND" => Ok(Position::Ground),
            "TOWER" => Ok(Position::Tower),
            "APPROACH" => Ok(Position::Approach),
            "AREA" => Ok(Position::Area),
            other => Err(format!("unknown position {other:?}")),
        }
    }
}

fn default_kinds() -> Vec<RbeKind> {
    RbeKind::ALL.to_vec()
}

fn default_threshold() -> f64 {
    DEFAULT_RERANK_THRESHOLD
}

/// One training exercise. Omitted rules, grammar and designator paths
/// fall back to the bundled assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExerciseConfig {
    pub surveillance_path: PathBuf,
    #[serde(default)]
    pub rules_path: Option<PathBuf>,
    #[serde(default)]
    pub grammar_path: Option<PathBuf>,
    #[serde(default)]
    pub designator_table_path: Option<PathBuf>,
    #[serde(default)]
    pub rbe_probability: f64,
    #[serde(default = "default_kinds")]
    pub rbe_kinds: Vec<RbeKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub rerank_threshold: f64,
    #[serde(default)]
    pub position: Position,
}

impl ExerciseConfig {
    pub fn new(surveillance_path: impl Into<PathBuf>) -> Self {
        Self {
            surveillance_path: surveillance_path.into(),
            rules_path: None,
            grammar_path: None,
            designator_table_path: None,
            rbe_probability: 0.0,
            rbe_kinds: default_kinds(),
            seed: 0,
            rerank_threshold: DEFAULT_RERANK_THRESHOLD,
            position: Position::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.rbe_probability) {
            return Err(ConfigError::new("rbe_probability", format!("{} not in [0, 1]", self.rbe_probability)));
        }
        if !(0.0..=1.0).contains(&self.rerank_threshold) {
            return Err(ConfigError::new("rerank_threshold", format!("{} not in [0, 1]", self.rerank_threshold)));
        }
        Ok(())
    }

    /// JSON when the text starts with `{`, otherwise `key = value` lines.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ConfigError::new(json_field(&e.to_string()), e))?
        } else {
            Self::parse_key_values(text)?
        };
        config.validate()?;
        Ok(config)
    }

    fn parse_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut config: Option<Self> = None;
        let mut pending = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::new(format!("line {}", i + 1), "expected key = value"))?;
            if key == "surveillance_path" {
                config = Some(Self::new(value));
            } else {
                pending.push((key.to_string(), value.to_string()));
            }
        }
        let mut config = config.ok_or_else(|| ConfigError::new("surveillance_path", "missing"))?;
        for (key, value) in pending {
            let bad = |e: &dyn fmt::Display| ConfigError::new(&key, e);
            match key.as_str() {
                "rules_path" => config.rules_path = Some(value.into()),
                "grammar_path" => config.grammar_path = Some(value.into()),
                "designator_table_path" => config.designator_table_path = Some(value.into()),
                "rbe_probability" => config.rbe_probability = value.parse().map_err(|e| bad(&e))?,
                "seed" => config.seed = value.parse().map_err(|e| bad(&e))?,
                "rerank_threshold" => config.rerank_threshold = value.parse().map_err(|e| bad(&e))?,
                "position" => config.position = value.parse().map_err(|e: String| bad(&e))?,
                "rbe_kinds" => {
                    config.rbe_kinds = value
                        .split(',')
                        .filter(|k| !k.trim().is_empty())
                        .map(str::parse)
                        .collect::<Result<_, String>>()
                        .map_err(|e| bad(&e))?
                }
                _ => return Err(ConfigError::new(&key, "unknown field")),
            }
        }
        Ok(config)
    }

    /// Loads a config file; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_relative_to(base);
        }
        Ok(config)
    }

    pub fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.surveillance_path);
        for p in [&mut self.rules_path, &mut self.grammar_path, &mut self.designator_table_path].into_iter().flatten() {
            fix(p);
        }
    }
}

/// Best-effort field name out of a serde_json error message.
fn json_field(message: &str) -> String {
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".to_string())
}
