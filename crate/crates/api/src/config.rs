//! Service configuration file.
//!
//! Relative paths are resolved against the directory holding the config file.
//! `VTOPS_PORT` overrides `port`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::auth::Role;

pub const PORT_ENV: &str = "VTOPS_PORT";
pub const CONFIG_ENV: &str = "VTOPS_CONFIG";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoggerCredential {
    pub id: String,
    pub token: String,
}

/// An account created at startup when no account with that id exists yet.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedUser {
    pub user_id: String,
    pub display_name: String,
    pub role: Role,
    pub password: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    #[serde(default = "default_port")]
    pub port: u16,
    pub store_dir: PathBuf,
    pub site: PathBuf,
    /// `file:<path>`, `stdout` or `memory`.
    #[serde(default = "default_sink")]
    pub notification_sink: String,
    #[serde(default = "default_threshold")]
    pub watchdog_threshold_s: u64,
    #[serde(default = "default_interval")]
    pub watchdog_interval_s: u64,
    #[serde(default = "default_session_ttl")]
    pub session_ttl_s: i64,
    #[serde(default)]
    pub loggers: Vec<LoggerCredential>,
    #[serde(default)]
    pub users: Vec<SeedUser>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_bind() -> String {
    "127.0.0.1".into()
}
fn default_port() -> u16 {
    8080
}
fn default_sink() -> String {
    "file:notifications.log".into()
}
fn default_threshold() -> u64 {
    900
}
fn default_interval() -> u64 {
    60
}
fn default_session_ttl() -> i64 {
    12 * 3600
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl ServiceConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig = toml::from_str(text)?;
        if cfg.session_ttl_s <= 0 {
            return Err(ConfigError::Invalid("session_ttl_s must be positive".into()));
        }
        if cfg.watchdog_interval_s == 0 {
            return Err(ConfigError::Invalid("watchdog_interval_s must be positive".into()));
        }
        Ok(cfg)
    }

    /// Applies `VTOPS_PORT` if set.
    pub fn with_env(mut self) -> Result<Self, ConfigError> {
        if let Ok(port) = std::env::var(PORT_ENV) {
            self.port = port.parse().map_err(|_| ConfigError::Invalid(format!("{PORT_ENV}={port} is not a port")))?;
        }
        Ok(self)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn store_path(&self) -> PathBuf {
        self.resolve(&self.store_dir)
    }

    pub fn site_path(&self) -> PathBuf {
        self.resolve(&self.site)
    }
}
