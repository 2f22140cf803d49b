//! Stated aggregator node.
//!
//! A [`Node`] ingests statements from two sources, polls of publishing
//! domains ([`fetcher`]) and pull gossip with other nodes ([`gossip`]),
//! deduplicates them by content hash and numbers them with gapless local
//! IDs. Storage sits behind [`store::Store`], with SQLite for real
//! deployments and an in-memory store for tests and [`sim`].

pub mod api;
pub mod compose;
pub mod config;
pub mod dns;
pub mod fetcher;
pub mod gossip;
pub mod node;
pub mod reputation;
pub mod service;
pub mod sim;
pub mod store;
pub mod testkit;

pub use node::{
    IngestOutcome, Node, NodeError, NodeSettings, PullBatch, PulledStatement, Rejected,
};
pub use store::{MemoryStore, NodeRecord, PeerState, Source, SqliteStore, Store, Verification};
