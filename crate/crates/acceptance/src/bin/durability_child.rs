//! Usage: durability-child <db> <total> <pace-ms>
//!
//! Prints the cursor after every step so the parent can time its kill.

use std::io::Write;
use std::time::Duration;

use stated_acceptance::durability;
use stated_node::SqliteStore;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let [_, db, total, pace] = args.as_slice() else {
        eprintln!("usage: durability-child <db> <total> <pace-ms>");
        std::process::exit(2);
    };
    let total: u64 = total.parse().expect("total");
    let pace = Duration::from_millis(pace.parse().expect("pace"));
    let store = SqliteStore::open(db).expect("open store");
    let node = durability::open(store).expect("open node");
    let mut out = std::io::stdout().lock();
    while let Some(c) = durability::step(&node, total, pace).expect("step") {
        writeln!(out, "{c}")
            .and_then(|_| out.flush())
            .expect("stdout");
    }
    writeln!(out, "done").expect("stdout");
}
