#![allow(dead_code)]

use std::sync::Arc;

use stated_core::{Statement, Timestamp};
use stated_node::node::Clock;
use stated_node::{Node, NodeSettings, Store};

pub fn fixed_clock() -> Clock {
    Arc::new(|| Timestamp::from_unix(1_800_000_000).unwrap())
}

pub fn node(store: impl Store + 'static) -> Node {
    Node::new(store, NodeSettings::default(), fixed_clock())
}

pub fn statement(domain: &str, i: usize) -> String {
    Statement::new(
        domain.parse().unwrap(),
        "Example Org",
        Timestamp::from_unix(1_798_761_600 + i as i64).unwrap(),
        format!("Statement number {i}."),
    )
    .to_text()
    .unwrap()
}
