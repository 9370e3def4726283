use std::path::{Path, PathBuf};
use std::time::Duration;

use pacepath_core::llm::{ExtractDefaults, PipelineConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {}: {source}", path.display())]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Service configuration, read from a TOML file. Relative paths resolve
/// against the file's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data_dir: PathBuf,
    pub catalog_dir: PathBuf,
    /// Directory of `<video id>.vtt|.srt|.json` caption files.
    pub transcripts_dir: Option<PathBuf>,
    /// Base URL of an HTTP caption service, used when no directory is set.
    pub transcript_endpoint: Option<String>,
    pub bind: String,
    /// Refuse all outbound network calls.
    pub offline: bool,
    pub chunk_seconds: f64,
    pub provider: Option<ProviderConfig>,
    pub extract: ExtractDefaults,
    pub pipeline: PipelineConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("data"),
            catalog_dir: PathBuf::from("crates/core/fixtures/catalog"),
            transcripts_dir: Some(PathBuf::from("crates/core/fixtures/transcripts")),
            transcript_endpoint: None,
            bind: "127.0.0.1:8080".into(),
            offline: false,
            chunk_seconds: pacepath_core::transcripts::DEFAULT_CHUNK_SECONDS,
            provider: None,
            extract: ExtractDefaults::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

/// An OpenAI-compatible chat endpoint, or a recorded session to replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Answer from this JSONL recording instead of calling the provider.
    pub replay_file: Option<PathBuf>,
    /// Append every exchange with the provider to this JSONL file.
    pub record_file: Option<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:11434/v1".into(),
            model: "llama3".into(),
            api_key_env: "PACEPATH_API_KEY".into(),
            timeout_secs: 60,
            replay_file: None,
            record_file: None,
        }
    }
}

impl ProviderConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn api_key(&self) -> Option<String> {
        std::env::var(&self.api_key_env).ok().filter(|k| !k.is_empty())
    }
}

impl Config {
    /// Loads `path` (or defaults when `None`) and applies `PACEPATH_*`
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.to_path_buf(),
                    source,
                })?;
                let mut config: Config = toml::from_str(&text).map_err(|source| ConfigError::Parse {
                    path: path.to_path_buf(),
                    source,
                })?;
                config.rebase(path.parent().unwrap_or(Path::new(".")));
                config
            }
            None => Config::default(),
        };
        config.apply_env(|k| std::env::var(k).ok());
        config.validate()?;
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data_dir);
        fix(&mut self.catalog_dir);
        if let Some(p) = self.transcripts_dir.as_mut() {
            fix(p);
        }
        if let Some(provider) = self.provider.as_mut() {
            if let Some(p) = provider.replay_file.as_mut() {
                fix(p);
            }
            if let Some(p) = provider.record_file.as_mut() {
                fix(p);
            }
        }
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(v) = var("PACEPATH_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("PACEPATH_CATALOG_DIR") {
            self.catalog_dir = v.into();
        }
        if let Some(v) = var("PACEPATH_BIND") {
            self.bind = v;
        }
        if let Some(v) = var("PACEPATH_OFFLINE") {
            self.offline = matches!(v.as_str(), "1" | "true" | "yes");
        }
        if let Some(v) = var("PACEPATH_PROVIDER_URL") {
            self.provider.get_or_insert_with(ProviderConfig::default).base_url = v;
        }
        if let Some(v) = var("PACEPATH_PROVIDER_MODEL") {
            self.provider.get_or_insert_with(ProviderConfig::default).model = v;
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.pipeline.validate().map_err(ConfigError::Invalid)?;
        if self.chunk_seconds.is_nan() || self.chunk_seconds <= 0.0 {
            return Err(ConfigError::Invalid("chunk_seconds must be positive".into()));
        }
        Ok(())
    }
}
