//! Node configuration, read from TOML. Every field has a default so a
//! config file only needs what differs.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use stated_core::Domain;
use thiserror::Error;

use crate::fetcher::FetchConfig;
use crate::gossip::GossipConfig;
use crate::reputation::ReputationConfig;

pub const TOKEN_ENV: &str = "STATED_OPERATOR_TOKEN";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeConfig {
    pub listen: SocketAddr,
    /// SQLite database file.
    pub database: PathBuf,
    /// Domain this node publishes its own statements under.
    pub own_domain: Option<Domain>,
    /// Base URLs of peer node APIs.
    pub peers: Vec<String>,
    /// Domains whose `statements.txt` is polled.
    pub seed_domains: Vec<Domain>,
    /// Also poll publishing domains learned from peers.
    pub poll_learned_domains: bool,
    pub gossip_interval_secs: u64,
    pub seed: Option<u64>,
    /// Re-fetch each peer-delivered statement from its claimed domain
    /// before marking it confirmed.
    pub strict: bool,
    /// Look up `stated.<domain>` TXT records and mark statements whose hash
    /// is listed there as DNS-confirmed.
    pub dns_check: bool,
    /// Bearer token for `POST /api/publish`; the environment variable
    /// `STATED_OPERATOR_TOKEN` takes precedence.
    pub operator_token: Option<String>,
    /// Directory with the built web console, served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
    pub gossip: GossipConfig,
    pub reputation: ReputationConfig,
    pub fetch: FetchConfig,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            listen: "127.0.0.1:7766".parse().expect("static address"),
            database: PathBuf::from("stated.sqlite"),
            own_domain: None,
            peers: Vec::new(),
            seed_domains: Vec::new(),
            poll_learned_domains: true,
            gossip_interval_secs: 60,
            seed: None,
            strict: false,
            dns_check: false,
            operator_token: None,
            ui_dir: None,
            gossip: GossipConfig::default(),
            reputation: ReputationConfig::default(),
            fetch: FetchConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("parsing {0}: {1}")]
    Parse(PathBuf, toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl NodeConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.into(), e))?;
        let config: NodeConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(path.into(), e))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let r = &self.reputation;
        if !(0.0..=1.0).contains(&r.alpha)
            || !(0.0..=1.0).contains(&r.initial)
            || !(0.0..=1.0).contains(&r.threshold)
        {
            return Err(ConfigError::Invalid(
                "reputation parameters must lie in [0, 1]".into(),
            ));
        }
        if self.gossip.pull_limit == 0 {
            return Err(ConfigError::Invalid(
                "gossip.pull_limit must be positive".into(),
            ));
        }
        for p in &self.peers {
            url::Url::parse(p).map_err(|e| ConfigError::Invalid(format!("peer {p}: {e}")))?;
        }
        Ok(())
    }

    pub fn gossip_interval(&self) -> Duration {
        Duration::from_secs(self.gossip_interval_secs)
    }

    /// The operator token, preferring the environment.
    pub fn token(&self) -> Option<String> {
        std::env::var(TOKEN_ENV)
            .ok()
            .filter(|t| !t.is_empty())
            .or_else(|| self.operator_token.clone())
    }
}
