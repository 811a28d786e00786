//! Service settings from a TOML file with environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const DEFAULT_TTL_SECONDS: u64 = 120;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("environment variable {name}={value:?}: {message}")]
    Env { name: String, value: String, message: String },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Instances generated at startup when no dataset is given.
    pub pool_size: usize,
    pub ttl_seconds: u64,
    pub dataset_dir: Option<PathBuf>,
    /// Admin endpoints are disabled without a token.
    pub admin_token: Option<String>,
    /// Pilot log and session snapshots; in memory only when unset.
    pub state_dir: Option<PathBuf>,
    /// Installed at startup for bin filtering when present.
    pub model: Option<PathBuf>,
    /// Seed for pool and on-demand generation.
    pub seed: u64,
    /// Salt for respondent hashes; random per process when unset.
    pub respondent_salt: Option<String>,
    pub snapshot_seconds: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 8080,
            pool_size: 64,
            ttl_seconds: DEFAULT_TTL_SECONDS,
            dataset_dir: None,
            admin_token: None,
            state_dir: None,
            model: None,
            seed: 0,
            respondent_salt: None,
            snapshot_seconds: 30,
        }
    }
}

/// Variables read by [`ServiceConfig::apply_env`].
pub const ENV_VARS: [&str; 5] = ["PORT", "POOL_SIZE", "TTL_SECONDS", "DATASET_DIR", "ADMIN_TOKEN"];

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let c: ServiceConfig = toml::from_str(text)?;
        c.check()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Overlay environment variables, looked up through `get`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(name: &str, v: &str) -> Result<T, ConfigError> {
            v.trim().parse().map_err(|_| ConfigError::Env {
                name: name.into(),
                value: v.into(),
                message: "not a non-negative integer".into(),
            })
        }
        if let Some(v) = get("PORT") {
            self.port = num("PORT", &v)?;
        }
        if let Some(v) = get("POOL_SIZE") {
            self.pool_size = num("POOL_SIZE", &v)?;
        }
        if let Some(v) = get("TTL_SECONDS") {
            self.ttl_seconds = num("TTL_SECONDS", &v)?;
        }
        if let Some(v) = get("DATASET_DIR") {
            self.dataset_dir = Some(v.into());
        }
        if let Some(v) = get("ADMIN_TOKEN") {
            self.admin_token = (!v.is_empty()).then_some(v);
        }
        self.check()
    }

    /// File (when given) then process environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut c = match path {
            Some(p) => Self::from_file(p)?,
            None => Self::default(),
        };
        c.apply_env(|k| std::env::var(k).ok())?;
        Ok(c)
    }

    fn check(&self) -> Result<(), ConfigError> {
        if self.ttl_seconds == 0 {
            return Err(ConfigError::Invalid("ttl_seconds must be positive".into()));
        }
        if self.admin_token.as_deref().is_some_and(|t| t.len() < 8) {
            return Err(ConfigError::Invalid("admin_token must have at least 8 characters".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_environment() {
        let mut c = ServiceConfig::from_toml("port = 9000\npool_size = 5\nadmin_token = \"secret-token\"\n").unwrap();
        assert_eq!((c.port, c.pool_size, c.ttl_seconds), (9000, 5, DEFAULT_TTL_SECONDS));
        let env = |k: &str| match k {
            "PORT" => Some("7000".to_owned()),
            "TTL_SECONDS" => Some("30".to_owned()),
            "DATASET_DIR" => Some("/data".to_owned()),
            _ => None,
        };
        c.apply_env(env).unwrap();
        assert_eq!((c.port, c.ttl_seconds), (7000, 30));
        assert_eq!(c.dataset_dir, Some(PathBuf::from("/data")));
        assert_eq!(c.admin_token.as_deref(), Some("secret-token"));
    }

    #[test]
    fn bad_values_are_refused() {
        assert!(ServiceConfig::from_toml("prot = 1").is_err());
        assert!(ServiceConfig::from_toml("ttl_seconds = 0").is_err());
        let mut c = ServiceConfig::default();
        let err = c.apply_env(|k| (k == "POOL_SIZE").then(|| "many".to_owned())).unwrap_err();
        assert!(matches!(err, ConfigError::Env { .. }));
    }
}
