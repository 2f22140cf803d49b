//! Deterministic in-process gossip simulation over logical rounds.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stated_core::{ContentHash, Statement, Timestamp};

use crate::gossip::{gossip_round, GossipConfig, LocalPeers, PeerError, PeerSource};
use crate::node::{Clock, Node, NodeError, NodeSettings, PullBatch, PulledStatement};
use crate::reputation::ReputationConfig;
use crate::store::{MemoryStore, Source};

pub const SCHEMA_VERSION: u32 = 1;

/// 2027-01-01T00:00:00Z, the logical epoch of simulated clocks.
const EPOCH: i64 = 1_798_761_600;

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub nodes: usize,
    pub statements: usize,
    pub rounds: u32,
    pub seed: u64,
    /// Probability of each non-tree edge in the peer graph.
    pub extra_edge_probability: f64,
    pub gossip: GossipConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            nodes: 8,
            statements: 100,
            rounds: 50,
            seed: 0,
            extra_edge_probability: 0.2,
            gossip: GossipConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub schema_version: u32,
    pub nodes: usize,
    pub statements: usize,
    pub seed: u64,
    pub edges: Vec<(usize, usize)>,
    /// First round after which every node held the union of all injected
    /// statements.
    pub converged_at_round: Option<u32>,
    pub rounds_run: u32,
    pub final_counts: Vec<usize>,
    /// Hash over the sorted union of statement hashes.
    pub union_digest: ContentHash,
}

fn peer_id(i: usize) -> String {
    format!("sim://node{i}")
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// A random spanning tree plus independent extra edges, so the graph is
/// always connected.
pub fn random_connected_graph(n: usize, p: f64, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.insert((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.insert((i, j));
            }
        }
    }
    edges.into_iter().collect()
}

/// Canonical text of the `i`-th simulated statement.
pub fn simulated_statement(seed: u64, i: usize) -> String {
    let domain = format!("org{}.example", i % 17)
        .parse()
        .expect("valid domain");
    Statement::new(
        domain,
        format!("Simulated Organisation {}", i % 17),
        Timestamp::from_unix(EPOCH + i as i64).expect("in range"),
        format!("Simulated statement {i} for seed {seed}."),
    )
    .to_text()
    .expect("canonical")
}

fn logical_clock(round: &Arc<AtomicI64>) -> Clock {
    let round = Arc::clone(round);
    Arc::new(move || Timestamp::from_unix(EPOCH + round.load(Ordering::Relaxed)).expect("in range"))
}

pub async fn simulate(config: &SimConfig) -> Result<SimReport, NodeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let edges = random_connected_graph(config.nodes, config.extra_edge_probability, &mut rng);
    let round = Arc::new(AtomicI64::new(0));
    let nodes: Vec<Arc<Node>> = (0..config.nodes)
        .map(|_| {
            Arc::new(Node::new(
                MemoryStore::new(),
                NodeSettings::default(),
                logical_clock(&round),
            ))
        })
        .collect();
    let mut peers = LocalPeers::default();
    for (i, n) in nodes.iter().enumerate() {
        peers.insert(peer_id(i), Arc::clone(n) as Arc<dyn PeerSource>);
    }
    for &(a, b) in &edges {
        nodes[a].add_peer(&peer_id(b))?;
        nodes[b].add_peer(&peer_id(a))?;
    }

    let mut union = BTreeSet::new();
    for i in 0..config.statements {
        let text = simulated_statement(config.seed, i);
        let at = rng.random_range(0..config.nodes.max(1));
        nodes[at].ingest(&text, Source::Local)?;
        union.insert(ContentHash::of_bytes(text.as_bytes()));
    }

    let converged = |nodes: &[Arc<Node>]| -> Result<bool, NodeError> {
        for n in nodes {
            if n.hashes()? != union {
                return Ok(false);
            }
        }
        Ok(true)
    };

    let mut converged_at = converged(&nodes)?.then_some(0);
    let mut rounds_run = 0;
    while converged_at.is_none() && rounds_run < config.rounds {
        rounds_run += 1;
        round.store(i64::from(rounds_run), Ordering::Relaxed);
        for (i, node) in nodes.iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(mix(config.seed, u64::from(rounds_run), i as u64));
            gossip_round(node, &peers, &config.gossip, &mut rng).await?;
        }
        if converged(&nodes)? {
            converged_at = Some(rounds_run);
        }
    }

    let digest_input: String = union.iter().map(|h| format!("{h}\n")).collect();
    Ok(SimReport {
        schema_version: SCHEMA_VERSION,
        nodes: config.nodes,
        statements: config.statements,
        seed: config.seed,
        edges,
        converged_at_round: converged_at,
        rounds_run,
        final_counts: nodes
            .iter()
            .map(|n| n.len().map(|l| l as usize))
            .collect::<Result<_, _>>()?,
        union_digest: ContentHash::of_bytes(digest_input.as_bytes()),
    })
}

/// A peer that grows by `per_round` statements each round, a fixed fraction
/// of them malformed.
pub struct SpamPeer {
    available: AtomicU64,
    per_round: u64,
    /// Out of every ten statements, how many are malformed.
    invalid_per_ten: u64,
    salt: u64,
}

impl SpamPeer {
    pub fn new(per_round: u64, invalid_per_ten: u64, salt: u64) -> Self {
        SpamPeer {
            available: AtomicU64::new(0),
            per_round,
            invalid_per_ten: invalid_per_ten.min(10),
            salt,
        }
    }

    pub fn grow(&self) {
        self.available.fetch_add(self.per_round, Ordering::Relaxed);
    }

    fn text(&self, id: u64) -> String {
        let valid = simulated_statement(self.salt, id as usize);
        if id % 10 < self.invalid_per_ten {
            // Trailing whitespace on a field value is not canonical.
            valid.replacen("Author: ", "Author:  ", 1)
        } else {
            valid
        }
    }
}

impl PeerSource for SpamPeer {
    fn serve(&self, min_id: u64, limit: usize) -> Result<PullBatch, PeerError> {
        let max = self.available.load(Ordering::Relaxed);
        let statements = (min_id + 1..=max)
            .take(limit)
            .map(|id| PulledStatement {
                id,
                text: self.text(id),
            })
            .collect();
        Ok(PullBatch {
            statements,
            max_id: max,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReputationStep {
    pub round: u32,
    pub selected: bool,
    pub reputation: f64,
    pub eligible: bool,
}

/// A node with a single peer serving `invalid_per_ten`/10 malformed
/// statements; returns the peer's reputation after each round.
pub async fn reputation_trace(
    invalid_per_ten: u64,
    rounds: u32,
    reputation: ReputationConfig,
) -> Result<Vec<ReputationStep>, NodeError> {
    let spam = Arc::new(SpamPeer::new(10, invalid_per_ten, 99));
    let mut peers = LocalPeers::default();
    peers.insert("sim://spam", Arc::clone(&spam) as Arc<dyn PeerSource>);
    let settings = NodeSettings {
        reputation,
        ..NodeSettings::default()
    };
    let round = Arc::new(AtomicI64::new(0));
    let node = Node::new(MemoryStore::new(), settings, logical_clock(&round));
    node.add_peer("sim://spam")?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut steps = Vec::new();
    for r in 1..=rounds {
        round.store(i64::from(r), Ordering::Relaxed);
        spam.grow();
        let report = gossip_round(&node, &peers, &GossipConfig::default(), &mut rng).await?;
        let rep = node.peers()?[0].reputation;
        steps.push(ReputationStep {
            round: r,
            selected: !report.peers.is_empty(),
            reputation: rep,
            eligible: reputation.is_eligible(rep),
        });
    }
    Ok(steps)
}
