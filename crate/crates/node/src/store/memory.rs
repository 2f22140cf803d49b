use std::collections::{BTreeMap, HashMap};

use stated_core::{ContentHash, Domain, Timestamp};

use super::*;

/// In-process store used by tests and the simulation harness.
#[derive(Debug, Default, Clone)]
pub struct MemoryStore {
    records: Vec<NodeRecord>,
    by_hash: HashMap<ContentHash, usize>,
    peers: BTreeMap<String, PeerState>,
    own: Vec<ContentHash>,
    fetched: HashMap<Domain, Timestamp>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Store for MemoryStore {
    fn apply(&mut self, batch: WriteBatch) -> Result<Vec<Inserted>, StoreError> {
        let next_peer = |outcomes: &[Inserted]| -> Result<Option<PeerState>, StoreError> {
            let Some(adv) = &batch.peer else {
                return Ok(None);
            };
            let old = self
                .peers
                .get(&adv.peer_id)
                .ok_or_else(|| StoreError::UnknownPeer(adv.peer_id.clone()))?;
            let new = old.advanced(adv, outcomes);
            check_cursor(old, &new)?;
            Ok(Some(new))
        };
        let mut out = Vec::with_capacity(batch.records.len());
        let mut pending: HashMap<ContentHash, u64> = HashMap::new();
        for r in &batch.records {
            let known = self
                .by_hash
                .get(&r.parsed.hash)
                .map(|&i| self.records[i].local_id);
            match known.or_else(|| pending.get(&r.parsed.hash).copied()) {
                Some(id) => out.push(Inserted::Duplicate(id)),
                None => {
                    let id = self.records.len() as u64 + 1 + pending.len() as u64;
                    pending.insert(r.parsed.hash.clone(), id);
                    out.push(Inserted::Stored(id));
                }
            }
        }
        // Nothing has been written yet, so a rejected peer update aborts cleanly.
        let peer = next_peer(&out)?;
        for (r, o) in batch.records.into_iter().zip(&out) {
            let Inserted::Stored(id) = *o else { continue };
            self.by_hash
                .insert(r.parsed.hash.clone(), self.records.len());
            self.records.push(NodeRecord {
                local_id: id,
                parsed: r.parsed,
                text: r.text,
                source: r.source,
                first_seen: r.first_seen,
                verification: r.verification,
            });
        }
        if let Some(peer) = peer {
            self.peers.insert(peer.peer_id.clone(), peer);
        }
        Ok(out)
    }

    fn get(&self, hash: &ContentHash) -> Result<Option<NodeRecord>, StoreError> {
        Ok(self.by_hash.get(hash).map(|&i| self.records[i].clone()))
    }

    fn range(&self, min_id: u64, limit: usize) -> Result<Vec<NodeRecord>, StoreError> {
        let start = usize::try_from(min_id)
            .unwrap_or(usize::MAX)
            .min(self.records.len());
        Ok(self.records[start..].iter().take(limit).cloned().collect())
    }

    fn max_id(&self) -> Result<u64, StoreError> {
        Ok(self.records.len() as u64)
    }

    fn set_verification(&mut self, hash: &ContentHash, v: Verification) -> Result<(), StoreError> {
        if let Some(&i) = self.by_hash.get(hash) {
            self.records[i].verification = v;
        }
        Ok(())
    }

    fn peers(&self) -> Result<Vec<PeerState>, StoreError> {
        Ok(self.peers.values().cloned().collect())
    }

    fn add_peer(&mut self, peer: PeerState) -> Result<(), StoreError> {
        self.peers.entry(peer.peer_id.clone()).or_insert(peer);
        Ok(())
    }

    fn update_peer(&mut self, peer: PeerState) -> Result<(), StoreError> {
        let old = self
            .peers
            .get(&peer.peer_id)
            .ok_or_else(|| StoreError::UnknownPeer(peer.peer_id.clone()))?;
        check_cursor(old, &peer)?;
        self.peers.insert(peer.peer_id.clone(), peer);
        Ok(())
    }

    fn own_statements(&self) -> Result<Vec<ContentHash>, StoreError> {
        Ok(self.own.clone())
    }

    fn add_own_statement(&mut self, hash: &ContentHash) -> Result<(), StoreError> {
        if !self.own.contains(hash) {
            self.own.push(hash.clone());
        }
        Ok(())
    }

    fn mark_fetched(&mut self, domain: &Domain, at: Timestamp) -> Result<(), StoreError> {
        self.fetched.insert(domain.clone(), at);
        Ok(())
    }

    fn last_fetched(&self, domain: &Domain) -> Result<Option<Timestamp>, StoreError> {
        Ok(self.fetched.get(domain).copied())
    }
}
