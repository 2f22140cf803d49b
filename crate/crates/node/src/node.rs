//! The aggregator: validation gate, single-writer ingestion and read views.

use std::sync::{Arc, Mutex, MutexGuard};

use serde::Serialize;
use stated_core::statement::MAX_STATEMENT_BYTES;
use stated_core::supersession::Status;
use stated_core::{
    poll, resolve_supersession, ContentHash, Domain, ParsedStatement, StatementFile, Tally,
    TallyError, Timestamp, TrustAssessment, TrustGraph, TypedContent,
};
use thiserror::Error;

use crate::reputation::{ReputationConfig, RoundStats};
use crate::store::{
    Inserted, NewRecord, NodeRecord, PeerAdvance, PeerState, Source, Store, StoreError,
    Verification, WriteBatch,
};

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(Timestamp::now)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "detail", rename_all = "kebab-case")]
pub enum Rejected {
    Malformed(String),
    TooLarge(usize),
    /// A domain's file carried a statement claiming another publishing domain.
    ForeignDomain(Domain),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum IngestOutcome {
    Stored { id: u64 },
    Duplicate { id: u64 },
    Rejected(Rejected),
}

#[derive(Debug, Error)]
pub enum NodeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("statement not found: {0}")]
    NotFound(ContentHash),
    #[error(transparent)]
    Tally(#[from] TallyError),
    #[error("rejected: {0:?}")]
    Rejected(Rejected),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct PulledStatement {
    pub id: u64,
    pub text: String,
}

/// Response body of the pull endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
pub struct PullBatch {
    pub statements: Vec<PulledStatement>,
    pub max_id: u64,
}

/// Result of applying one pulled batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BatchOutcome {
    pub stored: u64,
    pub duplicates: u64,
    pub invalid: u64,
    pub cursor: u64,
}

impl BatchOutcome {
    pub fn round_stats(&self) -> RoundStats {
        RoundStats {
            delivered_valid: self.stored + self.duplicates,
            delivered_total: self.stored + self.duplicates + self.invalid,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeedFilter {
    pub type_label: Option<String>,
    pub domain: Option<Domain>,
    pub tag: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeedItem {
    pub id: u64,
    pub hash: ContentHash,
    /// Hash of the `Statement content` block alone; equal for identical
    /// statements published by different domains.
    pub content_hash: ContentHash,
    pub publishing_domain: Domain,
    pub author: String,
    pub time: Timestamp,
    pub tags: Vec<String>,
    #[serde(rename = "type")]
    pub type_label: String,
    pub verification: Verification,
    pub status: Status<ContentHash>,
    pub content: TypedContent,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct NodeSettings {
    /// Domain this node publishes under, if any.
    pub own_domain: Option<Domain>,
    pub reputation: ReputationConfig,
}

pub struct Node {
    store: Mutex<Box<dyn Store>>,
    settings: NodeSettings,
    clock: Clock,
}

fn validate(text: &str) -> Result<ParsedStatement, Rejected> {
    if text.len() > MAX_STATEMENT_BYTES {
        return Err(Rejected::TooLarge(text.len()));
    }
    ParsedStatement::from_text(text).map_err(|e| Rejected::Malformed(e.to_string()))
}

impl Node {
    pub fn new(store: impl Store + 'static, settings: NodeSettings, clock: Clock) -> Self {
        Node {
            store: Mutex::new(Box::new(store)),
            settings,
            clock,
        }
    }

    pub fn settings(&self) -> &NodeSettings {
        &self.settings
    }

    pub fn now(&self) -> Timestamp {
        (self.clock)()
    }

    fn store(&self) -> MutexGuard<'_, Box<dyn Store>> {
        // A panic while holding the lock cannot leave a half-applied write:
        // every mutation is a single `Store` call.
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn initial_verification(source: &Source) -> Verification {
        match source {
            Source::Peer(_) => Verification::Unverified,
            Source::DomainFetch | Source::Local => Verification::DomainConfirmed,
        }
    }

    pub fn ingest(&self, text: &str, source: Source) -> Result<IngestOutcome, NodeError> {
        let parsed = match validate(text) {
            Ok(p) => p,
            Err(r) => {
                if let Source::Peer(peer) = &source {
                    self.bump_invalid(peer)?;
                }
                return Ok(IngestOutcome::Rejected(r));
            }
        };
        let verification = Self::initial_verification(&source);
        let record = NewRecord {
            parsed,
            text: text.to_owned(),
            source,
            first_seen: self.now(),
            verification,
        };
        let hash = record.parsed.hash.clone();
        let mut store = self.store();
        let outcome = store.apply(WriteBatch {
            records: vec![record],
            peer: None,
        })?;
        Ok(match outcome[0] {
            Inserted::Stored(id) => IngestOutcome::Stored { id },
            Inserted::Duplicate(id) => {
                upgrade(&mut **store, &hash, verification)?;
                IngestOutcome::Duplicate { id }
            }
        })
    }

    fn bump_invalid(&self, peer: &str) -> Result<(), NodeError> {
        let mut store = self.store();
        if let Some(mut p) = store.peers()?.into_iter().find(|p| p.peer_id == peer) {
            p.stats.invalid += 1;
            store.update_peer(p)?;
        }
        Ok(())
    }

    /// Ingests everything in `domain`'s own statements file. Statements
    /// naming a different publishing domain are rejected.
    pub fn ingest_domain_file(
        &self,
        domain: &Domain,
        file: &StatementFile,
    ) -> Result<Vec<IngestOutcome>, NodeError> {
        let mut out = Vec::with_capacity(file.len());
        for text in &file.statements {
            match validate(text) {
                Ok(p) if p.domain() != domain => out.push(IngestOutcome::Rejected(
                    Rejected::ForeignDomain(p.domain().clone()),
                )),
                Ok(_) => out.push(self.ingest(text, Source::DomainFetch)?),
                Err(r) => out.push(IngestOutcome::Rejected(r)),
            }
        }
        let now = self.now();
        self.store().mark_fetched(domain, now)?;
        Ok(out)
    }

    /// Applies one pulled batch and advances the peer's cursor in the same
    /// atomic write.
    pub fn ingest_peer_batch(
        &self,
        peer_id: &str,
        batch: &[PulledStatement],
    ) -> Result<BatchOutcome, NodeError> {
        let now = self.now();
        let mut records = Vec::with_capacity(batch.len());
        let mut invalid = 0;
        for item in batch {
            match validate(&item.text) {
                Ok(parsed) => records.push(NewRecord {
                    parsed,
                    text: item.text.clone(),
                    source: Source::Peer(peer_id.to_owned()),
                    first_seen: now,
                    verification: Verification::Unverified,
                }),
                Err(_) => invalid += 1,
            }
        }
        let cursor = batch.iter().map(|s| s.id).max();
        let mut store = self.store();
        let old = store
            .peers()?
            .into_iter()
            .find(|p| p.peer_id == peer_id)
            .ok_or_else(|| StoreError::UnknownPeer(peer_id.to_owned()))?;
        let advance = PeerAdvance {
            peer_id: peer_id.to_owned(),
            cursor: cursor.unwrap_or(old.cursor).max(old.cursor),
            at: now,
            invalid,
        };
        let outcomes = store.apply(WriteBatch {
            records,
            peer: Some(advance.clone()),
        })?;
        let stored = outcomes
            .iter()
            .filter(|o| matches!(o, Inserted::Stored(_)))
            .count() as u64;
        Ok(BatchOutcome {
            stored,
            duplicates: outcomes.len() as u64 - stored,
            invalid,
            cursor: advance.cursor,
        })
    }

    pub fn serve_pull(&self, min_id: u64, limit: usize) -> Result<PullBatch, NodeError> {
        let store = self.store();
        let statements = store
            .range(min_id, limit)?
            .into_iter()
            .map(|r| PulledStatement {
                id: r.local_id,
                text: r.text,
            })
            .collect();
        Ok(PullBatch {
            statements,
            max_id: store.max_id()?,
        })
    }

    pub fn get(&self, hash: &ContentHash) -> Result<Option<NodeRecord>, NodeError> {
        Ok(self.store().get(hash)?)
    }

    pub fn records(&self) -> Result<Vec<NodeRecord>, NodeError> {
        Ok(self.store().all()?)
    }

    pub fn len(&self) -> Result<u64, NodeError> {
        Ok(self.store().len()?)
    }

    pub fn is_empty(&self) -> Result<bool, NodeError> {
        Ok(self.len()? == 0)
    }

    pub fn hashes(&self) -> Result<std::collections::BTreeSet<ContentHash>, NodeError> {
        Ok(self.records()?.into_iter().map(|r| r.parsed.hash).collect())
    }

    pub fn set_verification(&self, hash: &ContentHash, v: Verification) -> Result<(), NodeError> {
        upgrade(&mut **self.store(), hash, v)
    }

    pub fn last_fetched(&self, domain: &Domain) -> Result<Option<Timestamp>, NodeError> {
        Ok(self.store().last_fetched(domain)?)
    }

    pub fn peers(&self) -> Result<Vec<PeerState>, NodeError> {
        Ok(self.store().peers()?)
    }

    pub fn add_peer(&self, peer_id: &str) -> Result<(), NodeError> {
        let peer = PeerState::new(peer_id, self.settings.reputation.initial);
        Ok(self.store().add_peer(peer)?)
    }

    pub fn update_peer(&self, peer: PeerState) -> Result<(), NodeError> {
        Ok(self.store().update_peer(peer)?)
    }

    /// Domains seen as publishers, seeds for the fetch loop.
    pub fn known_domains(&self) -> Result<Vec<Domain>, NodeError> {
        let mut d: Vec<Domain> = self
            .records()?
            .iter()
            .map(|r| r.parsed.domain().clone())
            .collect();
        d.sort();
        d.dedup();
        Ok(d)
    }

    /// Ingests a statement authored by the operator and adds it to the
    /// node's own `statements.txt`.
    pub fn publish(&self, text: &str) -> Result<(u64, ContentHash), NodeError> {
        let parsed = validate(text).map_err(NodeError::Rejected)?;
        if let Some(own) = &self.settings.own_domain {
            if parsed.domain() != own {
                return Err(NodeError::Rejected(Rejected::ForeignDomain(
                    parsed.domain().clone(),
                )));
            }
        }
        let id = match self.ingest(text, Source::Local)? {
            IngestOutcome::Stored { id } | IngestOutcome::Duplicate { id } => id,
            IngestOutcome::Rejected(r) => return Err(NodeError::Rejected(r)),
        };
        self.store().add_own_statement(&parsed.hash)?;
        Ok((id, parsed.hash))
    }

    pub fn own_statements(&self) -> Result<StatementFile, NodeError> {
        let store = self.store();
        let mut file = StatementFile::default();
        for h in store.own_statements()? {
            let rec = store
                .get(&h)?
                .ok_or_else(|| NodeError::NotFound(h.clone()))?;
            file.statements.push(rec.text);
        }
        Ok(file)
    }

    pub fn feed(&self, filter: &FeedFilter) -> Result<Vec<FeedItem>, NodeError> {
        let records = self.records()?;
        let parsed: Vec<ParsedStatement> = records.iter().map(|r| r.parsed.clone()).collect();
        let resolution = resolve_supersession(&parsed);
        let mut out: Vec<FeedItem> = records
            .into_iter()
            .rev()
            .filter(|r| {
                let s = &r.parsed.statement;
                filter
                    .type_label
                    .as_deref()
                    .is_none_or(|t| r.content_kind() == t)
                    && filter
                        .domain
                        .as_ref()
                        .is_none_or(|d| &s.publishing_domain == d)
                    && filter.tag.as_ref().is_none_or(|t| s.tags.contains(t))
            })
            .map(|r| FeedItem {
                id: r.local_id,
                content_hash: ContentHash::of_bytes(r.parsed.statement.content.as_bytes()),
                status: resolution.status[&r.parsed.hash].clone(),
                hash: r.parsed.hash,
                publishing_domain: r.parsed.statement.publishing_domain,
                author: r.parsed.statement.author,
                time: r.parsed.statement.time,
                tags: r.parsed.statement.tags,
                type_label: r.parsed.content.type_label().to_owned(),
                verification: r.verification,
                content: r.parsed.content,
                text: r.text,
            })
            .collect();
        if let Some(limit) = filter.limit {
            out.truncate(limit);
        }
        Ok(out)
    }

    fn effective(&self) -> Result<Vec<ParsedStatement>, NodeError> {
        let parsed: Vec<ParsedStatement> = self.records()?.into_iter().map(|r| r.parsed).collect();
        Ok(stated_core::effective_statements(&parsed))
    }

    pub fn trust(&self, domain: &Domain) -> Result<TrustAssessment, NodeError> {
        let effective = self.effective()?;
        Ok(TrustGraph::from_statements(&effective).assess(domain))
    }

    pub fn tally(&self, poll_hash: &ContentHash) -> Result<Tally, NodeError> {
        let record = self
            .get(poll_hash)?
            .ok_or_else(|| NodeError::NotFound(poll_hash.clone()))?;
        let votes: Vec<ParsedStatement> = self
            .effective()?
            .into_iter()
            .filter(|s| matches!(&s.content, TypedContent::Vote(v) if &v.poll_hash == poll_hash))
            .collect();
        Ok(poll::tally(&record.parsed, &votes, None)?)
    }
}

/// Raises the verification status; never lowers it.
fn upgrade(store: &mut dyn Store, hash: &ContentHash, v: Verification) -> Result<(), NodeError> {
    if let Some(r) = store.get(hash)? {
        if v > r.verification {
            store.set_verification(hash, v)?;
        }
    }
    Ok(())
}
