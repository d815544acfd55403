//! Server configuration, read from a JSON file.
//!
//! ```json
//! {
//!   "storage": {"path": "/var/lib/triagebase"},
//!   "server": {"port": 8080},
//!   "tokens": {
//!     "ci": ["ci-secret"],
//!     "users": [{"token": "t-alice", "name": "alice", "role": "developer"}]
//!   },
//!   "dedup": {"similarity_threshold": 0.75},
//!   "lifecycle": {"in_work_absent_reports": 3},
//!   "enrichment": {"rules_path": "rules.json"}
//! }
//! ```
//!
//! Every section is optional. Without `storage.path` projects live in memory.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use triagebase::dedup::DedupConfig;
use triagebase::lifecycle::StatusPolicy;
use triagebase::project::ProjectSettings;
use triagebase::views::Role;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub storage: StorageConfig,
    pub server: ServerConfig,
    pub tokens: TokenConfig,
    pub dedup: DedupConfig,
    pub lifecycle: StatusPolicy,
    pub enrichment: EnrichmentConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageConfig {
    /// One subdirectory per project.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerConfig {
    pub bind: IpAddr,
    pub port: u16,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
        }
    }
}

impl ServerConfig {
    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.bind, self.port)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenConfig {
    /// Tokens that may upload reports.
    pub ci: Vec<String>,
    pub users: Vec<UserToken>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserToken {
    pub token: String,
    /// Recorded as the actor of status and priority changes.
    pub name: String,
    pub role: Role,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentConfig {
    pub rules_path: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: Config = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        // Relative paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = config.storage.path.as_mut() {
            *p = base.join(&*p);
        }
        if let Some(p) = config.enrichment.rules_path.as_mut() {
            *p = base.join(&*p);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut seen = std::collections::BTreeSet::new();
        let all = self.tokens.ci.iter().chain(self.tokens.users.iter().map(|u| &u.token));
        for t in all {
            if t.is_empty() {
                return Err(ConfigError::Invalid("empty token".into()));
            }
            if !seen.insert(t) {
                return Err(ConfigError::Invalid("token listed twice".into()));
            }
        }
        let threshold = self.dedup.similarity_threshold;
        if !(0.0..=1.0).contains(&threshold) {
            return Err(ConfigError::Invalid(format!("dedup.similarity_threshold {threshold} outside [0, 1]")));
        }
        if self.dedup.lsi_rank == 0 {
            return Err(ConfigError::Invalid("dedup.lsi_rank must be positive".into()));
        }
        Ok(())
    }

    pub fn project_settings(&self) -> ProjectSettings {
        ProjectSettings {
            dedup: self.dedup,
            lifecycle: self.lifecycle.clone(),
            enrichment_rules: self.enrichment.rules_path.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_a_valid_config() {
        let c: Config = serde_json::from_str("{}").unwrap();
        assert_eq!(c.server.port, 8080);
        assert!(c.storage.path.is_none());
        c.validate().unwrap();
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(
            &path,
            r#"{"storage": {"path": "data"}, "tokens": {"users": [{"token": "a", "name": "al", "role": "manager"}]}}"#,
        )
        .unwrap();
        let c = Config::load(&path).unwrap();
        assert_eq!(c.storage.path.unwrap(), dir.path().join("data"));
        assert_eq!(c.tokens.users[0].role, Role::Manager);
    }

    #[test]
    fn duplicate_tokens_are_rejected() {
        let c: Config = serde_json::from_str(r#"{"tokens": {"ci": ["x", "x"]}}"#).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"storge": {}}"#).is_err());
    }
}
