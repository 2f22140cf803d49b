//! Persistence behind a storage-agnostic interface.
//!
//! Local IDs are assigned by the store inside the same atomic unit that
//! inserts the record, so they are gapless and never reused.

mod memory;
mod sqlite;

pub use memory::MemoryStore;
pub use sqlite::SqliteStore;

use serde::{Deserialize, Serialize};
use stated_core::{ContentHash, Domain, ParsedStatement, Timestamp};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "peer", rename_all = "kebab-case")]
pub enum Source {
    DomainFetch,
    Peer(String),
    Local,
}

impl Source {
    fn encode(&self) -> String {
        match self {
            Source::DomainFetch => "domain-fetch".into(),
            Source::Local => "local".into(),
            Source::Peer(p) => format!("peer:{p}"),
        }
    }

    fn decode(s: &str) -> Option<Self> {
        match s {
            "domain-fetch" => Some(Source::DomainFetch),
            "local" => Some(Source::Local),
            _ => s.strip_prefix("peer:").map(|p| Source::Peer(p.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verification {
    Unverified,
    DomainConfirmed,
    DnsConfirmed,
}

impl Verification {
    fn encode(self) -> &'static str {
        match self {
            Verification::Unverified => "unverified",
            Verification::DomainConfirmed => "domain-confirmed",
            Verification::DnsConfirmed => "dns-confirmed",
        }
    }

    fn decode(s: &str) -> Option<Self> {
        match s {
            "unverified" => Some(Verification::Unverified),
            "domain-confirmed" => Some(Verification::DomainConfirmed),
            "dns-confirmed" => Some(Verification::DnsConfirmed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub local_id: u64,
    pub parsed: ParsedStatement,
    pub text: String,
    pub source: Source,
    pub first_seen: Timestamp,
    pub verification: Verification,
}

impl NodeRecord {
    pub fn hash(&self) -> &ContentHash {
        &self.parsed.hash
    }

    pub fn content_kind(&self) -> &str {
        self.parsed.content.type_label()
    }
}

/// A validated statement waiting for an ID.
#[derive(Debug, Clone)]
pub struct NewRecord {
    pub parsed: ParsedStatement,
    pub text: String,
    pub source: Source,
    pub first_seen: Timestamp,
    pub verification: Verification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inserted {
    Stored(u64),
    Duplicate(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PeerStats {
    pub delivered: u64,
    pub duplicates: u64,
    pub invalid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerState {
    pub peer_id: String,
    pub cursor: u64,
    pub reputation: f64,
    pub last_pull: Option<Timestamp>,
    pub stats: PeerStats,
}

impl PeerState {
    pub fn new(peer_id: impl Into<String>, reputation: f64) -> Self {
        PeerState {
            peer_id: peer_id.into(),
            cursor: 0,
            reputation,
            last_pull: None,
            stats: PeerStats::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("database error: {0}")]
    Database(#[from] rusqlite::Error),
    #[error("corrupt record {0}: {1}")]
    Corrupt(u64, String),
    #[error("cursor for {peer} would move backwards ({from} -> {to})")]
    CursorRegression { peer: String, from: u64, to: u64 },
    #[error("unknown peer {0}")]
    UnknownPeer(String),
}

/// Cursor advance for the peer a batch was pulled from. The store folds the
/// insert outcomes into the peer's counters.
#[derive(Debug, Clone)]
pub struct PeerAdvance {
    pub peer_id: String,
    pub cursor: u64,
    pub at: Timestamp,
    /// Statements in the batch that failed validation and were not submitted.
    pub invalid: u64,
}

/// One atomic write: records to insert plus an optional peer advance.
#[derive(Debug, Clone, Default)]
pub struct WriteBatch {
    pub records: Vec<NewRecord>,
    pub peer: Option<PeerAdvance>,
}

impl PeerState {
    /// The state after `advance`, given the outcomes of its records.
    pub fn advanced(&self, advance: &PeerAdvance, outcomes: &[Inserted]) -> PeerState {
        let duplicates = outcomes
            .iter()
            .filter(|o| matches!(o, Inserted::Duplicate(_)))
            .count() as u64;
        let mut next = self.clone();
        next.cursor = advance.cursor;
        next.last_pull = Some(advance.at);
        next.stats.delivered += outcomes.len() as u64 + advance.invalid;
        next.stats.duplicates += duplicates;
        next.stats.invalid += advance.invalid;
        next
    }
}

pub trait Store: Send {
    /// Applies the batch atomically; returns one outcome per record.
    fn apply(&mut self, batch: WriteBatch) -> Result<Vec<Inserted>, StoreError>;

    fn get(&self, hash: &ContentHash) -> Result<Option<NodeRecord>, StoreError>;

    /// Records with `local_id > min_id`, ascending, at most `limit`.
    fn range(&self, min_id: u64, limit: usize) -> Result<Vec<NodeRecord>, StoreError>;

    fn max_id(&self) -> Result<u64, StoreError>;

    fn set_verification(&mut self, hash: &ContentHash, v: Verification) -> Result<(), StoreError>;

    fn peers(&self) -> Result<Vec<PeerState>, StoreError>;

    /// Inserts the peer if unknown; existing state is kept.
    fn add_peer(&mut self, peer: PeerState) -> Result<(), StoreError>;

    fn update_peer(&mut self, peer: PeerState) -> Result<(), StoreError>;

    /// Hashes published by this node, in publication order.
    fn own_statements(&self) -> Result<Vec<ContentHash>, StoreError>;

    fn add_own_statement(&mut self, hash: &ContentHash) -> Result<(), StoreError>;

    fn mark_fetched(&mut self, domain: &Domain, at: Timestamp) -> Result<(), StoreError>;

    fn last_fetched(&self, domain: &Domain) -> Result<Option<Timestamp>, StoreError>;

    fn all(&self) -> Result<Vec<NodeRecord>, StoreError> {
        self.range(0, usize::MAX)
    }

    /// IDs are gapless, so the count is the highest ID.
    fn len(&self) -> Result<u64, StoreError> {
        self.max_id()
    }

    fn is_empty(&self) -> Result<bool, StoreError> {
        Ok(self.len()? == 0)
    }
}

fn check_cursor(old: &PeerState, new: &PeerState) -> Result<(), StoreError> {
    if new.cursor < old.cursor {
        return Err(StoreError::CursorRegression {
            peer: new.peer_id.clone(),
            from: old.cursor,
            to: new.cursor,
        });
    }
    Ok(())
}
