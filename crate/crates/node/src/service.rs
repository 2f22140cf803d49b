//! Wiring for `stated serve`: the API server plus the gossip and fetch loops.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stated_core::Domain;
use tokio::net::TcpListener;

use crate::api::{router, ApiState};
use crate::config::NodeConfig;
use crate::dns::{txt_name, SystemResolver, TxtError, TxtLookup};
use crate::fetcher::Fetcher;
use crate::gossip::{gossip_round, HttpPeerClient};
use crate::node::{system_clock, Node, NodeError, NodeSettings};
use crate::store::{Source, SqliteStore, StoreError, Verification};

/// How often the fetch loop looks for domains that are due.
const FETCH_TICK: Duration = Duration::from_secs(30);
/// Unverified statements re-checked per tick in strict mode.
const STRICT_BATCH: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Node(#[from] NodeError),
    #[error("binding {0}: {1}")]
    Bind(std::net::SocketAddr, std::io::Error),
    #[error("server: {0}")]
    Server(std::io::Error),
}

pub fn open_node(config: &NodeConfig) -> Result<Arc<Node>, ServeError> {
    let store = SqliteStore::open(&config.database)?;
    let settings = NodeSettings {
        own_domain: config.own_domain.clone(),
        reputation: config.reputation,
    };
    let node = Arc::new(Node::new(store, settings, system_clock()));
    for p in &config.peers {
        node.add_peer(p.trim_end_matches('/'))?;
    }
    Ok(node)
}

pub async fn serve(config: NodeConfig) -> Result<(), ServeError> {
    let node = open_node(&config)?;
    let listener = TcpListener::bind(config.listen)
        .await
        .map_err(|e| ServeError::Bind(config.listen, e))?;
    tracing::info!(addr = %config.listen, "listening");

    let fetcher = Arc::new(Fetcher::new(config.fetch.clone()));
    tokio::spawn(gossip_loop(Arc::clone(&node), config.clone()));
    tokio::spawn(fetch_loop(Arc::clone(&node), fetcher, config.clone()));

    let app = router(
        ApiState {
            node,
            operator_token: config.token(),
            max_pull: config.gossip.pull_limit,
        },
        config.ui_dir.clone(),
    );
    axum::serve(listener, app).await.map_err(ServeError::Server)
}

async fn gossip_loop(node: Arc<Node>, config: NodeConfig) {
    let client = HttpPeerClient::new(config.fetch.timeout);
    let mut rng = match config.seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    };
    let mut tick = tokio::time::interval(config.gossip_interval());
    loop {
        tick.tick().await;
        match gossip_round(&node, &client, &config.gossip, &mut rng).await {
            Ok(report) => {
                for p in report.peers.iter().filter(|p| p.error.is_some()) {
                    tracing::warn!(peer = %p.peer_id, error = ?p.error, "pull failed");
                }
                tracing::debug!(stored = report.stored(), "gossip round");
            }
            Err(e) => tracing::error!(error = %e, "gossip round aborted"),
        }
    }
}

fn due_domains(node: &Node, config: &NodeConfig) -> Result<Vec<Domain>, NodeError> {
    let mut domains = config.seed_domains.clone();
    if config.poll_learned_domains {
        domains.extend(node.known_domains()?);
    }
    domains.sort();
    domains.dedup();
    let min = config.fetch.min_poll_interval.as_secs() as i64;
    let now = node.now().unix();
    let mut due = Vec::new();
    for d in domains {
        if node.last_fetched(&d)?.is_none_or(|t| now - t.unix() >= min) {
            due.push(d);
        }
    }
    Ok(due)
}

async fn fetch_loop(node: Arc<Node>, fetcher: Arc<Fetcher>, config: NodeConfig) {
    let resolver = if config.dns_check {
        SystemResolver::new()
            .inspect_err(|e| tracing::error!(error = %e, "no DNS resolver; DNS checks disabled"))
            .ok()
    } else {
        None
    };
    let mut tick = tokio::time::interval(FETCH_TICK);
    loop {
        tick.tick().await;
        let due = match due_domains(&node, &config) {
            Ok(d) => d,
            Err(e) => {
                tracing::error!(error = %e, "listing domains");
                continue;
            }
        };
        let mut events = fetcher.fetch_many(due);
        while let Some(ev) = events.recv().await {
            match ev.result {
                Ok((file, meta)) => match node.ingest_domain_file(&ev.domain, &file) {
                    Ok(outcomes) => {
                        tracing::info!(domain = %ev.domain, statements = outcomes.len(), bytes = meta.bytes, "fetched")
                    }
                    Err(e) => tracing::error!(domain = %ev.domain, error = %e, "ingesting"),
                },
                Err(e) => {
                    tracing::warn!(domain = %ev.domain, class = e.class(), error = %e, "fetch failed")
                }
            }
        }
        if config.strict {
            if let Err(e) = confirm_unverified(&node, &fetcher).await {
                tracing::error!(error = %e, "strict confirmation");
            }
        }
        if let Some(r) = &resolver {
            if let Err(e) = confirm_dns(&node, r).await {
                tracing::error!(error = %e, "DNS confirmation");
            }
        }
    }
}

/// Upgrades statements whose hash appears in their domain's TXT record.
/// One lookup per domain; failures leave statements as they were.
pub async fn confirm_dns(node: &Node, lookup: &dyn TxtLookup) -> Result<usize, NodeError> {
    let mut by_domain: BTreeMap<Domain, Vec<_>> = BTreeMap::new();
    for r in node.records()? {
        if r.verification < Verification::DnsConfirmed {
            by_domain
                .entry(r.parsed.domain().clone())
                .or_default()
                .push(r.parsed.hash);
        }
    }
    let mut confirmed = 0;
    for (domain, hashes) in by_domain {
        let listed: HashSet<String> = match lookup.txt(&txt_name(&domain)).await {
            Ok(strings) => strings.iter().map(|s| s.trim().to_owned()).collect(),
            Err(TxtError::NoRecords) => continue,
            Err(TxtError::Failed(e)) => {
                tracing::debug!(%domain, error = %e, "TXT lookup failed");
                continue;
            }
        };
        for h in hashes.iter().filter(|h| listed.contains(h.as_str())) {
            node.set_verification(h, Verification::DnsConfirmed)?;
            confirmed += 1;
        }
    }
    Ok(confirmed)
}

/// Strict mode: re-fetch unverified statements from their claimed domain.
pub async fn confirm_unverified(node: &Node, fetcher: &Fetcher) -> Result<usize, NodeError> {
    let pending: Vec<_> = node
        .records()?
        .into_iter()
        .filter(|r| {
            r.verification == Verification::Unverified && matches!(r.source, Source::Peer(_))
        })
        .take(STRICT_BATCH)
        .collect();
    let mut confirmed = 0;
    for r in pending {
        match fetcher
            .fetch_statement_by_hash(r.parsed.domain(), r.hash())
            .await
        {
            Ok(_) => {
                node.set_verification(r.hash(), Verification::DomainConfirmed)?;
                confirmed += 1;
            }
            Err(e) => tracing::debug!(hash = %r.hash(), class = e.class(), "not confirmed"),
        }
    }
    Ok(confirmed)
}
