//! `stated`: hash, validate, compose, fetch and inspect statements; run a
//! node or a gossip simulation.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use stated_core::{split_statement_file, ContentHash, Domain, ParsedStatement, StatementFile};
use stated_node::compose::{compose, ComposeRequest, TYPE_NAMES};
use stated_node::config::{NodeConfig, TOKEN_ENV};
use stated_node::fetcher::{FetchConfig, FetchError, Fetcher};
use stated_node::node::system_clock;
use stated_node::sim::{simulate, SimConfig};
use stated_node::{IngestOutcome, Node, NodeError, NodeSettings, SqliteStore};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "stated", version, about = "Stated protocol tool")]
struct Cli {
    /// Machine-readable output. `tally`, `trust`, `sim` and `publish`
    /// always print JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the content hash of a canonical statement (`-` reads stdin).
    Hash { file: PathBuf },
    /// Validate a statements file, a URL serving one, or a domain.
    Validate { target: String },
    /// Compose a statement and print its canonical text (no trailing newline).
    New {
        /// Statement type, e.g. `poll`, `sign-pdf`, `rating`.
        #[arg(value_name = "TYPE")]
        type_name: String,
        /// A content field as `name=value`; repeat `option=` for poll options.
        #[arg(long = "field", value_name = "NAME=VALUE")]
        fields: Vec<String>,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        author: String,
        #[arg(long)]
        representative: Option<String>,
        /// `YYYY-MM-DDTHH:MM:SSZ`; defaults to now.
        #[arg(long)]
        time: Option<String>,
        #[arg(long = "tag")]
        tags: Vec<String>,
        #[arg(long)]
        supersedes: Option<String>,
    },
    /// Fetch a domain's statements, validate them and print them with hashes.
    Fetch {
        domain: String,
        /// Also ingest valid statements into this node database.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Ingest a local statements file into a node database.
    Ingest {
        file: PathBuf,
        #[arg(long)]
        store: PathBuf,
    },
    /// Print the tally of a poll held in a node database.
    Tally {
        poll_hash: String,
        #[arg(long)]
        store: PathBuf,
    },
    /// Print the trust assessment of a domain from a node database.
    Trust {
        domain: String,
        #[arg(long)]
        store: PathBuf,
    },
    /// Publish a statement through a running node (token from STATED_OPERATOR_TOKEN).
    Publish {
        file: PathBuf,
        #[arg(long)]
        node: String,
    },
    /// Run a node.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        listen: Option<std::net::SocketAddr>,
        #[arg(long)]
        database: Option<PathBuf>,
        #[arg(long = "peer")]
        peers: Vec<String>,
        #[arg(long = "seed-domain")]
        seed_domains: Vec<String>,
    },
    /// Run a seeded gossip simulation and print the convergence report.
    Sim {
        #[arg(long, default_value_t = 8)]
        nodes: usize,
        #[arg(long, default_value_t = 50)]
        rounds: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        statements: usize,
        #[arg(long, default_value_t = 3)]
        fanout: usize,
    },
}

/// Exit codes; documented in the README.
#[derive(Debug, Clone, Copy)]
enum Code {
    Invalid = 1,
    Usage = 2,
    Io = 3,
    Network = 4,
    NotFound = 5,
    Store = 6,
    Config = 7,
    Server = 8,
    NotConverged = 9,
}

struct Failure(Code, String);

impl Failure {
    fn new(code: Code, msg: impl std::fmt::Display) -> Self {
        Failure(code, msg.to_string())
    }
}

impl From<NodeError> for Failure {
    fn from(e: NodeError) -> Self {
        let code = match &e {
            NodeError::NotFound(_) => Code::NotFound,
            NodeError::Tally(_) | NodeError::Rejected(_) => Code::Invalid,
            NodeError::Store(_) => Code::Store,
        };
        Failure::new(code, e)
    }
}

impl From<FetchError> for Failure {
    fn from(e: FetchError) -> Self {
        let code = match e {
            FetchError::File(_) | FetchError::HashMismatch { .. } | FetchError::NotCanonical => {
                Code::Invalid
            }
            _ => Code::Network,
        };
        Failure::new(code, e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command, cli.json) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new(Code::Io, e))
}

fn read_input(path: &Path) -> Result<Vec<u8>> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| Failure::new(Code::Io, e))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| Failure::new(Code::Io, format!("{}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn parse_domain(s: &str) -> Result<Domain> {
    Domain::normalize(s).map_err(|e| Failure::new(Code::Usage, e))
}

fn open_store(path: &Path, create: bool) -> Result<Node> {
    if !create && !path.exists() {
        return Err(Failure::new(
            Code::NotFound,
            format!("no database at {}", path.display()),
        ));
    }
    let store = SqliteStore::open(path).map_err(|e| Failure::new(Code::Store, e))?;
    Ok(Node::new(store, NodeSettings::default(), system_clock()))
}

fn run(command: Command, json: bool) -> Result<()> {
    match command {
        Command::Hash { file } => hash(&file, json),
        Command::Validate { target } => validate(&target, json),
        Command::New {
            type_name,
            fields,
            domain,
            author,
            representative,
            time,
            tags,
            supersedes,
        } => {
            let mut map: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for f in fields {
                let (k, v) = f.split_once('=').ok_or_else(|| {
                    Failure::new(Code::Usage, format!("--field {f:?}: expected NAME=VALUE"))
                })?;
                map.entry(k.replace('-', "_"))
                    .or_default()
                    .push(v.to_owned());
            }
            let req = ComposeRequest {
                type_name,
                domain,
                author,
                representative,
                time,
                tags,
                superseded_statement: supersedes,
                fields: map,
            };
            let composed = compose(&req).map_err(|e| {
                if e.field.as_deref() == Some("type") {
                    let names: Vec<_> = TYPE_NAMES.iter().map(|(n, _)| *n).collect();
                    Failure::new(
                        Code::Usage,
                        format!("{e}; known types: {}", names.join(", ")),
                    )
                } else {
                    Failure::new(Code::Invalid, e)
                }
            })?;
            if json {
                print_json(&serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "hash": composed.hash,
                    "text": composed.text,
                }));
            } else {
                print!("{}", composed.text);
            }
            Ok(())
        }
        Command::Fetch { domain, store } => fetch(&domain, json, store.as_deref()),
        Command::Ingest { file, store } => {
            let bytes = read_input(&file)?;
            let parsed =
                split_statement_file(&bytes).map_err(|e| Failure::new(Code::Invalid, e))?;
            let node = open_store(&store, true)?;
            let mut stored = 0;
            let mut rejected = Vec::new();
            for (index, text) in parsed.statements.iter().enumerate() {
                match node.ingest(text, stated_node::Source::Local)? {
                    IngestOutcome::Stored { .. } => stored += 1,
                    IngestOutcome::Duplicate { .. } => {}
                    IngestOutcome::Rejected(r) => {
                        if !json {
                            eprintln!("rejected #{index}: {r:?}");
                        }
                        rejected
                            .push(serde_json::json!({"index": index, "error": format!("{r:?}")}));
                    }
                }
            }
            let total = node.len()?;
            if json {
                print_json(&serde_json::json!({
                    "schema_version": SCHEMA_VERSION,
                    "stored": stored,
                    "total": total,
                    "rejected": rejected,
                }));
            } else {
                println!("{stored} stored, {total} total");
            }
            Ok(())
        }
        Command::Tally { poll_hash, store } => {
            let h: ContentHash = poll_hash
                .parse()
                .map_err(|e| Failure::new(Code::Usage, e))?;
            print_json(&open_store(&store, false)?.tally(&h)?);
            Ok(())
        }
        Command::Trust { domain, store } => {
            let d = parse_domain(&domain)?;
            print_json(&open_store(&store, false)?.trust(&d)?);
            Ok(())
        }
        Command::Publish { file, node } => publish(&file, &node),
        Command::Serve {
            config,
            listen,
            database,
            peers,
            seed_domains,
        } => {
            let mut cfg = match config {
                Some(p) => NodeConfig::load(&p).map_err(|e| Failure::new(Code::Config, e))?,
                None => NodeConfig::default(),
            };
            if let Some(l) = listen {
                cfg.listen = l;
            }
            if let Some(d) = database {
                cfg.database = d;
            }
            cfg.peers.extend(peers);
            for d in seed_domains {
                cfg.seed_domains.push(parse_domain(&d)?);
            }
            cfg.validate().map_err(|e| Failure::new(Code::Config, e))?;
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .with_writer(std::io::stderr)
                .init();
            runtime()?
                .block_on(stated_node::service::serve(cfg))
                .map_err(|e| Failure::new(Code::Server, e))
        }
        Command::Sim {
            nodes,
            rounds,
            seed,
            statements,
            fanout,
        } => {
            let mut cfg = SimConfig {
                nodes,
                rounds,
                seed,
                statements,
                ..SimConfig::default()
            };
            cfg.gossip.fanout = fanout;
            let report = runtime()?.block_on(simulate(&cfg))?;
            print_json(&report);
            match report.converged_at_round {
                Some(_) => Ok(()),
                None => Err(Failure::new(
                    Code::NotConverged,
                    format!("not converged after {rounds} rounds"),
                )),
            }
        }
    }
}

fn hash(file: &Path, json: bool) -> Result<()> {
    let bytes = read_input(file)?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::new(Code::Invalid, format!("not UTF-8: {e}")))?;
    let h = stated_core::hash_statement(text).map_err(|e| Failure::new(Code::Invalid, e))?;
    if json {
        print_json(&serde_json::json!({"schema_version": SCHEMA_VERSION, "hash": h}));
    } else {
        println!("{h}");
    }
    Ok(())
}

#[derive(Serialize)]
struct StatementReport {
    index: usize,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    hash: Option<ContentHash>,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    type_label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<String>,
}

#[derive(Serialize)]
struct Report {
    schema_version: u32,
    source: String,
    valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    statements: Vec<StatementReport>,
}

impl Report {
    fn failed(source: String, error: String) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            source,
            valid: false,
            error: Some(error),
            statements: Vec::new(),
        }
    }

    fn of_file(source: String, file: &StatementFile, with_text: bool) -> Self {
        let statements: Vec<StatementReport> = file
            .statements
            .iter()
            .enumerate()
            .map(|(index, text)| match ParsedStatement::from_text(text) {
                Ok(p) => StatementReport {
                    index,
                    valid: true,
                    hash: Some(p.hash),
                    type_label: Some(p.content.type_label().to_owned()),
                    error: None,
                    text: with_text.then(|| text.clone()),
                },
                Err(e) => StatementReport {
                    index,
                    valid: false,
                    hash: None,
                    type_label: None,
                    error: Some(e.to_string()),
                    text: with_text.then(|| text.clone()),
                },
            })
            .collect();
        Report {
            schema_version: SCHEMA_VERSION,
            source,
            valid: statements.iter().all(|s| s.valid),
            error: None,
            statements,
        }
    }

    fn emit(&self, json: bool) -> Result<()> {
        if json {
            print_json(self);
        } else {
            for s in &self.statements {
                match (&s.hash, &s.error) {
                    (Some(h), _) => println!("ok\t{h}\t{}", s.type_label.as_deref().unwrap_or("")),
                    (None, Some(e)) => println!("invalid\t#{}\t{e}", s.index),
                    _ => {}
                }
                if let Some(t) = &s.text {
                    println!("{t}\n");
                }
            }
        }
        if let Some(e) = &self.error {
            return Err(Failure::new(Code::Invalid, e));
        }
        let bad = self.statements.iter().filter(|s| !s.valid).count();
        if bad > 0 {
            return Err(Failure::new(
                Code::Invalid,
                format!("{bad} invalid statement(s)"),
            ));
        }
        Ok(())
    }
}

enum Target {
    File(PathBuf),
    Url(url::Url),
    Domain(Domain),
}

fn classify(target: &str) -> Result<Target> {
    if target == "-" || Path::new(target).exists() {
        return Ok(Target::File(target.into()));
    }
    if target.starts_with("https://") || target.starts_with("http://") {
        return url::Url::parse(target)
            .map(Target::Url)
            .map_err(|e| Failure::new(Code::Usage, e));
    }
    match Domain::normalize(target) {
        Ok(d) => Ok(Target::Domain(d)),
        Err(_) => Err(Failure::new(Code::Io, format!("{target}: no such file"))),
    }
}

fn validate(target: &str, json: bool) -> Result<()> {
    let report = match classify(target)? {
        Target::File(p) => {
            let bytes = read_input(&p)?;
            match split_statement_file(&bytes) {
                Ok(file) => Report::of_file(target.to_owned(), &file, false),
                Err(e) => Report::failed(target.to_owned(), e.to_string()),
            }
        }
        Target::Url(u) => {
            let fetcher = Fetcher::new(FetchConfig::default());
            match runtime()?.block_on(fetcher.fetch_url(u)) {
                Ok((file, _)) => Report::of_file(target.to_owned(), &file, false),
                Err(e @ FetchError::File(_)) => Report::failed(target.to_owned(), e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
        Target::Domain(d) => {
            let fetcher = Fetcher::new(FetchConfig::default());
            match runtime()?.block_on(fetcher.fetch_statement_file(&d)) {
                Ok((file, _)) => Report::of_file(target.to_owned(), &file, false),
                Err(e @ FetchError::File(_)) => Report::failed(target.to_owned(), e.to_string()),
                Err(e) => return Err(e.into()),
            }
        }
    };
    report.emit(json)
}

fn fetch(domain: &str, json: bool, store: Option<&Path>) -> Result<()> {
    let d = parse_domain(domain)?;
    let fetcher = Arc::new(Fetcher::new(FetchConfig::default()));
    let (file, _meta) = runtime()?.block_on(fetcher.fetch_statement_file(&d))?;
    if let Some(path) = store {
        let node = open_store(path, true)?;
        node.ingest_domain_file(&d, &file)?;
    }
    Report::of_file(d.to_string(), &file, true).emit(json)
}

fn publish(file: &Path, node: &str) -> Result<()> {
    let token = std::env::var(TOKEN_ENV)
        .map_err(|_| Failure::new(Code::Config, format!("{TOKEN_ENV} is not set")))?;
    let bytes = read_input(file)?;
    let text = String::from_utf8(bytes).map_err(|e| Failure::new(Code::Invalid, e))?;
    let url = format!("{}/api/publish", node.trim_end_matches('/'));
    let rt = runtime()?;
    let (status, body) = rt
        .block_on(async {
            let resp = reqwest::Client::new()
                .post(url)
                .bearer_auth(token)
                .body(text)
                .send()
                .await?;
            let status = resp.status();
            Ok::<_, reqwest::Error>((status, resp.text().await?))
        })
        .map_err(|e| Failure::new(Code::Network, e))?;
    if !status.is_success() {
        let code = if status.as_u16() == 422 {
            Code::Invalid
        } else {
            Code::Network
        };
        return Err(Failure::new(
            code,
            format!("node answered {status}: {body}"),
        ));
    }
    println!("{body}");
    Ok(())
}
