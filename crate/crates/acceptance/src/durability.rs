//! Deterministic ingestion workload for the kill/restart check.
//!
//! Each step ingests one local statement keyed by the peer cursor, then
//! pulls the next batch from a fixed synthetic peer. Re-running a step after
//! a crash is idempotent, so an interrupted run must end in exactly the
//! state of an uninterrupted one.

use std::sync::Arc;
use std::time::Duration;

use stated_core::{Statement, Timestamp};
use stated_node::node::Clock;
use stated_node::{Node, NodeError, NodeSettings, PulledStatement, Source, Store};

pub const PEER: &str = "sim://source";
pub const BATCH: u64 = 7;
const EPOCH: i64 = 1_798_761_600;

fn statement(domain: &str, i: u64, what: &str) -> String {
    Statement::new(
        domain.parse().expect("fixed domain"),
        "Durability Check",
        Timestamp::from_unix(EPOCH + i as i64).expect("in range"),
        format!("{what} {i}."),
    )
    .to_text()
    .expect("canonical")
}

/// Item `r` (1-based) served by the synthetic peer. Every 13th is malformed
/// and every 11th repeats its predecessor.
pub fn source_item(r: u64) -> String {
    if r.is_multiple_of(11) {
        return source_item(r - 1);
    }
    if r.is_multiple_of(13) {
        return statement("source.example", r, "Peer item").replace("Author: ", "Author:  ");
    }
    statement("source.example", r, "Peer item")
}

pub fn local_item(cursor: u64) -> String {
    statement("node.example", cursor, "Local item")
}

pub fn fixed_clock() -> Clock {
    Arc::new(|| Timestamp::from_unix(EPOCH).expect("in range"))
}

pub fn open(store: impl Store + 'static) -> Result<Node, NodeError> {
    let node = Node::new(store, NodeSettings::default(), fixed_clock());
    node.add_peer(PEER)?;
    Ok(node)
}

pub fn cursor(node: &Node) -> Result<u64, NodeError> {
    Ok(node
        .peers()?
        .into_iter()
        .find(|p| p.peer_id == PEER)
        .map_or(0, |p| p.cursor))
}

/// Runs one step; returns the new cursor, or `None` once `total` items are in.
pub fn step(node: &Node, total: u64, pace: Duration) -> Result<Option<u64>, NodeError> {
    let at = cursor(node)?;
    if at >= total {
        return Ok(None);
    }
    node.ingest(&local_item(at), Source::Local)?;
    if !pace.is_zero() {
        std::thread::sleep(pace);
    }
    let batch: Vec<PulledStatement> = (at + 1..=(at + BATCH).min(total))
        .map(|id| PulledStatement {
            id,
            text: source_item(id),
        })
        .collect();
    let out = node.ingest_peer_batch(PEER, &batch)?;
    if !pace.is_zero() {
        std::thread::sleep(pace);
    }
    Ok(Some(out.cursor))
}

pub fn run_to_end(node: &Node, total: u64) -> Result<(), NodeError> {
    while step(node, total, Duration::ZERO)?.is_some() {}
    Ok(())
}
