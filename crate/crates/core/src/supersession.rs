//! Same-domain revocation through the `Superseded statement` field.
//!
//! A statement is superseded when another statement from the same publishing
//! domain names its hash. References across domains are ignored. Supersession
//! is applied by reference only: the timestamps stated in the envelopes are
//! self-reported and do not participate.
//!
//! Each statement references at most one other, so the reference graph is a
//! functional graph. Any cycle in it (impossible with real hashes, but a
//! resolver must not loop on crafted input) flags every member.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::hash::ContentHash;
use crate::parsed::ParsedStatement;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status<K> {
    Effective,
    /// `by` is the smallest key among the superseding statements.
    Superseded {
        by: K,
    },
    /// Part of a supersession cycle; excluded like a superseded statement.
    CycleFlagged,
}

impl<K> Status<K> {
    pub fn is_effective(&self) -> bool {
        matches!(self, Status::Effective)
    }
}

/// One node of the reference graph.
#[derive(Debug, Clone)]
pub struct Link<K, D> {
    pub key: K,
    pub domain: D,
    pub supersedes: Option<K>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution<K> {
    pub status: BTreeMap<K, Status<K>>,
    /// `(referrer, target)` pairs dropped because the domains differ.
    pub ignored_cross_domain: Vec<(K, K)>,
    superseded_by: BTreeMap<K, K>,
}

impl<K: Ord + Clone> Resolution<K> {
    pub fn is_effective(&self, key: &K) -> bool {
        self.status.get(key).is_some_and(Status::is_effective)
    }

    pub fn effective(&self) -> impl Iterator<Item = &K> {
        self.status
            .iter()
            .filter(|(_, s)| s.is_effective())
            .map(|(k, _)| k)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &K> {
        self.status
            .iter()
            .filter(|(_, s)| matches!(s, Status::CycleFlagged))
            .map(|(k, _)| k)
    }

    /// Follow supersessions from `key` to the newest version still in
    /// effect. `None` for unknown keys and for chains ending in a cycle.
    pub fn latest(&self, key: &K) -> Option<&K> {
        let mut current = self.status.get_key_value(key)?.0;
        for _ in 0..=self.status.len() {
            match self.status.get(current)? {
                Status::Effective => return Some(current),
                Status::CycleFlagged => return None,
                Status::Superseded { .. } => current = self.superseded_by.get(current)?,
            }
        }
        None
    }
}

/// Resolve a reference graph. Duplicate keys keep their first occurrence.
pub fn resolve<K, D>(links: &[Link<K, D>]) -> Resolution<K>
where
    K: Ord + Clone,
    D: Eq,
{
    let mut index: BTreeMap<&K, usize> = BTreeMap::new();
    for (i, link) in links.iter().enumerate() {
        index.entry(&link.key).or_insert(i);
    }

    // Valid outgoing edge per node, by position.
    let mut next: Vec<Option<usize>> = vec![None; links.len()];
    let mut ignored_cross_domain = Vec::new();
    let mut superseded_by: BTreeMap<K, K> = BTreeMap::new();
    for (&key, &i) in &index {
        let link = &links[i];
        let Some(target) = &link.supersedes else {
            continue;
        };
        let Some(&t) = index.get(target) else {
            continue;
        };
        if links[t].domain != link.domain {
            tracing::debug!("ignoring cross-domain supersession");
            ignored_cross_domain.push((key.clone(), target.clone()));
            continue;
        }
        next[i] = Some(t);
        superseded_by
            .entry(target.clone())
            .and_modify(|by| {
                if key < by {
                    *by = key.clone()
                }
            })
            .or_insert_with(|| key.clone());
    }

    // Cycle detection on the functional graph: walk each unvisited node,
    // stamping nodes with the walk they were first seen on.
    let mut walk_of: Vec<Option<usize>> = vec![None; links.len()];
    let mut on_cycle = vec![false; links.len()];
    for start in index.values().copied() {
        if walk_of[start].is_some() {
            continue;
        }
        let mut path = Vec::new();
        let mut node = start;
        loop {
            match walk_of[node] {
                Some(w) if w == start => {
                    let from = path.iter().position(|&n| n == node).expect("on path");
                    for &n in &path[from..] {
                        on_cycle[n] = true;
                    }
                    break;
                }
                Some(_) => break,
                None => {
                    walk_of[node] = Some(start);
                    path.push(node);
                    match next[node] {
                        Some(t) => node = t,
                        None => break,
                    }
                }
            }
        }
    }

    let status = index
        .iter()
        .map(|(&key, &i)| {
            let status = if on_cycle[i] {
                Status::CycleFlagged
            } else if let Some(by) = superseded_by.get(key) {
                Status::Superseded { by: by.clone() }
            } else {
                Status::Effective
            };
            (key.clone(), status)
        })
        .collect();

    Resolution {
        status,
        ignored_cross_domain,
        superseded_by,
    }
}

/// Resolve supersession over parsed statements.
pub fn resolve_supersession(statements: &[ParsedStatement]) -> Resolution<ContentHash> {
    let links: Vec<_> = statements
        .iter()
        .map(|p| Link {
            key: p.hash.clone(),
            domain: p.statement.publishing_domain.clone(),
            supersedes: p.statement.superseded_statement.clone(),
        })
        .collect();
    resolve(&links)
}

/// The statements still in effect, in input order.
pub fn effective_statements(statements: &[ParsedStatement]) -> Vec<ParsedStatement> {
    let resolution = resolve_supersession(statements);
    let mut seen = std::collections::BTreeSet::new();
    statements
        .iter()
        .filter(|p| resolution.is_effective(&p.hash) && seen.insert(p.hash.clone()))
        .cloned()
        .collect()
}
