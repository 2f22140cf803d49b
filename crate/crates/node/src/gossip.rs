//! Pull gossip: each round a node pulls from a random subset of eligible
//! peers, starting at the per-peer cursor, until a peer has nothing new.

use std::collections::HashMap;
use std::sync::Arc;

use async_trait::async_trait;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::node::{Node, NodeError, PullBatch};
use crate::reputation::RoundStats;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PeerError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

#[async_trait]
pub trait PeerClient: Send + Sync {
    async fn pull(&self, peer_id: &str, min_id: u64, limit: usize) -> Result<PullBatch, PeerError>;
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct GossipConfig {
    pub fanout: usize,
    pub pull_limit: usize,
    /// Safety valve: batches pulled from one peer in one round.
    pub max_batches: usize,
}

impl Default for GossipConfig {
    fn default() -> Self {
        GossipConfig {
            fanout: 3,
            pull_limit: 500,
            max_batches: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeerReport {
    pub peer_id: String,
    pub batches: u64,
    pub stored: u64,
    pub duplicates: u64,
    pub invalid: u64,
    pub cursor: u64,
    pub reputation_before: f64,
    pub reputation_after: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundReport {
    pub eligible: usize,
    pub peers: Vec<PeerReport>,
}

impl RoundReport {
    pub fn stored(&self) -> u64 {
        self.peers.iter().map(|p| p.stored).sum()
    }
}

/// One round. Transport failures are recorded per peer and never abort the
/// round; store failures do.
pub async fn gossip_round<R: Rng + Send>(
    node: &Node,
    client: &dyn PeerClient,
    config: &GossipConfig,
    rng: &mut R,
) -> Result<RoundReport, NodeError> {
    let rep = node.settings().reputation;
    let mut eligible: Vec<_> = node
        .peers()?
        .into_iter()
        .filter(|p| rep.is_eligible(p.reputation))
        .collect();
    eligible.sort_by(|a, b| a.peer_id.cmp(&b.peer_id));
    let chosen: Vec<_> = eligible
        .choose_multiple(rng, config.fanout.min(eligible.len()))
        .cloned()
        .collect();

    let mut reports = Vec::with_capacity(chosen.len());
    for peer in chosen {
        let mut report = PeerReport {
            peer_id: peer.peer_id.clone(),
            batches: 0,
            stored: 0,
            duplicates: 0,
            invalid: 0,
            cursor: peer.cursor,
            reputation_before: peer.reputation,
            reputation_after: peer.reputation,
            error: None,
        };
        let mut cursor = peer.cursor;
        while (report.batches as usize) < config.max_batches {
            let batch = match client.pull(&peer.peer_id, cursor, config.pull_limit).await {
                Ok(b) => b,
                Err(e) => {
                    report.error = Some(e.to_string());
                    break;
                }
            };
            if batch.statements.is_empty() {
                break;
            }
            let ascending = batch.statements.windows(2).all(|w| w[0].id < w[1].id);
            if !ascending || batch.statements[0].id <= cursor {
                report.error =
                    Some(PeerError::Protocol("ids not ascending past cursor".into()).to_string());
                break;
            }
            let outcome = node.ingest_peer_batch(&peer.peer_id, &batch.statements)?;
            report.batches += 1;
            report.stored += outcome.stored;
            report.duplicates += outcome.duplicates;
            report.invalid += outcome.invalid;
            cursor = outcome.cursor;
        }
        report.cursor = cursor;

        let stats = RoundStats {
            delivered_valid: report.stored + report.duplicates,
            delivered_total: report.stored + report.duplicates + report.invalid,
        };
        let mut state = node
            .peers()?
            .into_iter()
            .find(|p| p.peer_id == peer.peer_id)
            .expect("peer selected from the store");
        state.reputation = rep.update(state.reputation, stats);
        report.reputation_after = state.reputation;
        node.update_peer(state)?;
        reports.push(report);
    }
    Ok(RoundReport {
        eligible: eligible.len(),
        peers: reports,
    })
}

/// Pulls over HTTP from `<peer_id>/api/statements`.
pub struct HttpPeerClient {
    client: reqwest::Client,
}

impl HttpPeerClient {
    pub fn new(timeout: std::time::Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("static client configuration");
        HttpPeerClient { client }
    }
}

#[async_trait]
impl PeerClient for HttpPeerClient {
    async fn pull(&self, peer_id: &str, min_id: u64, limit: usize) -> Result<PullBatch, PeerError> {
        let url = format!("{}/api/statements", peer_id.trim_end_matches('/'));
        let resp = self
            .client
            .get(url)
            .query(&[("min_id", min_id), ("limit", limit as u64)])
            .send()
            .await
            .map_err(|e| PeerError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(PeerError::Transport(format!("status {}", resp.status())));
        }
        resp.json()
            .await
            .map_err(|e| PeerError::Protocol(e.to_string()))
    }
}

/// Peers living in the same process, addressed by id.
#[derive(Default, Clone)]
pub struct LocalPeers {
    peers: HashMap<String, Arc<dyn PeerSource>>,
}

/// Anything that can answer a pull.
pub trait PeerSource: Send + Sync {
    fn serve(&self, min_id: u64, limit: usize) -> Result<PullBatch, PeerError>;
}

impl PeerSource for Node {
    fn serve(&self, min_id: u64, limit: usize) -> Result<PullBatch, PeerError> {
        self.serve_pull(min_id, limit)
            .map_err(|e| PeerError::Transport(e.to_string()))
    }
}

impl LocalPeers {
    pub fn insert(&mut self, id: impl Into<String>, source: Arc<dyn PeerSource>) {
        self.peers.insert(id.into(), source);
    }
}

#[async_trait]
impl PeerClient for LocalPeers {
    async fn pull(&self, peer_id: &str, min_id: u64, limit: usize) -> Result<PullBatch, PeerError> {
        match self.peers.get(peer_id) {
            Some(p) => p.serve(min_id, limit),
            None => Err(PeerError::Transport(format!("unreachable peer {peer_id}"))),
        }
    }
}
