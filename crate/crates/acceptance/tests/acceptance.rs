//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fails.

// Float bounds read more naturally as `a >= b` inside `ensure!`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stated_acceptance::durability;
use stated_acceptance::oracle::{self, Ballot, Expected, Graph, Why};
use stated_core::content::{label, Poll, Vote};
use stated_core::supersession::{resolve, Link};
use stated_core::{
    aggregate_confidence, effective_statements, hash_statement, parse_content, parse_statement,
    resolve_supersession, serialize_content, tally, ContentHash, Domain, ParsedStatement,
    RejectReason, Statement, Status, Timestamp, TypedContent,
};
use stated_node::fetcher::{statement_path, FetchConfig, Fetcher, STATEMENTS_PATH};
use stated_node::reputation::ReputationConfig;
use stated_node::sim::{reputation_trace, simulate, simulated_statement, SimConfig};
use stated_node::testkit::{Fixture, FixtureServer};
use stated_node::{NodeRecord, PeerState, SqliteStore, Store};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn FnOnce() -> Outcome + 'a>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const EPOCH: i64 = 1_798_761_600;

const SIGN_PDF: &str = "Publishing domain: example.gov
Author: Ministry of Foreign Affairs
Time: 2027-01-01T10:30:00Z
Format version: 4
Statement content:
\tType: Sign PDF
\tDescription: We hereby digitally sign the referenced PDF file.
\tPDF file hash: qg51IiW3RKIXSxiaF_hVQdZdtHzKsU4YePxFuZ2YVtQ";

/// Computed with Python's hashlib and base64 before the build.
const PINNED: &[(&str, &str)] = &[
    ("Sign PDF", "5rMSms8d0xPieom7erVnHKFj2UykehiWIc0mmH48h5c"),
    ("Plain", "xryuystEqoN4DGUKTQUfoFpR4ylcnisWowqHNxVUYUY"),
    ("Plain", "ziymd0jlgNUCg3P9VtHlYV40jCtEAkQegCc5y9Bet4w"),
    (
        "Organisation verification",
        "VyzYGe8aSCZe3DqkOw9lqrs4UlRGDN8I_yVCPb1E348",
    ),
    (
        "Person verification",
        "y-QFmC_EM3dNPlKQVGKib5FjLcTpP3pty7lQANmSdXc",
    ),
    ("Poll", "Ra2ZenmKYC1dpLrHV9nW7-OJE3uPvahY5offa5ECKCQ"),
    ("Vote", "mwmP8RFIQBkFB9E9yromrCtyxOLZhRnNC6iOVzis20g"),
    ("Response", "Hq4mw63XuRdoX7a5Ekdt-iW33R1c_VoLMlKfKAD1ePE"),
    ("Bounty", "Xhc5qMUcsQXrHKn86kzQ0TK0tTui2NfpLwKrqIKhIz0"),
    ("Boycott", "Yk761NfLZSFen-ilLqDBEUTt51kasj2qVaToKGeQ4Lk"),
    (
        "Dispute statement authenticity",
        "xI-o4TJVeFw0CFAWUy6-xMslXjyLuxZ0756piA12Ax0",
    ),
    (
        "Dispute statement content",
        "VGD_i0sz44XgxQkyZdLYJZRfTuEqXY9yB4561F5wBfU",
    ),
    ("Rating", "XjQfNsWqIqFoB_TmP8Z-tV98Oo_qQY7mXSPwfqAMHnc"),
    (
        "Sign treaty draft",
        "5rnTP6CVSC00nTH4Y8YE4UJaZ_vnk4ej5bN7i1-JLuU",
    ),
];
const EMPTY_HASH: &str = "47DEQpj8HBSa-_TImW-5JCeuQeRkm5NMpJWZG3hSuFU";

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/corpus")
}

fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus dir")
        .map(|e| {
            let path = e.expect("entry").path();
            let name = path.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&path).expect("utf-8 file"))
        })
        .collect();
    files.sort();
    files
}

fn well_formed_hash(h: &str) -> bool {
    h.len() == 43
        && h.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

fn format_conformance() -> Outcome {
    let started = Instant::now();
    let files = corpus();
    ensure!(files.len() >= 13, "only {} corpus files", files.len());
    let mut labels = BTreeSet::new();
    let mut unknown = 0;
    for (name, text) in &files {
        let statement = parse_statement(text).map_err(|e| format!("{name}: {e}"))?;
        ensure!(
            &statement.to_text().map_err(|e| e.to_string())? == text,
            "{name} does not round-trip"
        );
        let content = parse_content(&statement.content).map_err(|e| format!("{name}: {e}"))?;
        ensure!(
            serialize_content(&content).map_err(|e| e.to_string())? == statement.content,
            "{name}: content does not round-trip"
        );
        let h = hash_statement(text).map_err(|e| e.to_string())?;
        ensure!(h.as_str() == name, "{name} hashes to {h}");
        if content.is_unknown() {
            unknown += 1;
        } else {
            labels.insert(content.type_label().to_owned());
        }
    }
    for l in label::KNOWN.iter().chain([&label::PLAIN]) {
        ensure!(labels.contains(*l), "no {l} statement in corpus");
    }
    ensure!(unknown > 0, "no unknown-type statement in corpus");
    ensure!(
        files.iter().any(|(_, t)| t == SIGN_PDF),
        "Sign PDF example missing or altered"
    );
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{} files round-trip, {elapsed:.0?}", files.len()))
}

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 .,";
    let n = rng.random_range(1..=max);
    let s: String = (0..n)
        .map(|_| CHARS[rng.random_range(0..CHARS.len())] as char)
        .collect();
    format!("x{}y", s.trim())
}

fn hash_oracle() -> Outcome {
    let files: BTreeMap<String, String> = corpus().into_iter().collect();
    for (l, want) in PINNED {
        let text = files
            .get(*want)
            .ok_or_else(|| format!("no corpus file for {l}"))?;
        let got = hash_statement(text).map_err(|e| e.to_string())?;
        ensure!(got.as_str() == *want, "{l}: got {got}, pinned {want}");
        ensure!(
            oracle::content_hash(text.as_bytes()) == *want,
            "oracle disagrees on {l}"
        );
    }
    ensure!(
        ContentHash::of_bytes(b"").as_str() == EMPTY_HASH,
        "empty-input vector"
    );
    ensure!(
        oracle::content_hash(b"") == EMPTY_HASH,
        "oracle empty-input vector"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = PINNED.len() + 1;
    // Lengths around the SHA-256 padding boundaries, then random ones.
    let lengths = (0..=130).chain((0..2000).map(|_| rng.random_range(0..4096)));
    for len in lengths.collect::<Vec<_>>() {
        let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        let got = ContentHash::of_bytes(&bytes);
        ensure!(well_formed_hash(got.as_str()), "malformed output {got}");
        ensure!(
            got.as_str() == oracle::content_hash(&bytes),
            "mismatch at length {len}"
        );
        checked += 1;
    }
    for i in 0..500 {
        let statement = Statement::new(
            format!("org{}.example", i % 23).parse().unwrap(),
            random_text(&mut rng, 40),
            Timestamp::from_unix(rng.random_range(0..4_000_000_000)).unwrap(),
            random_text(&mut rng, 300),
        );
        let text = statement.to_text().map_err(|e| e.to_string())?;
        let got = hash_statement(&text).map_err(|e| e.to_string())?;
        ensure!(well_formed_hash(got.as_str()), "malformed output {got}");
        ensure!(
            got.as_str() == oracle::content_hash(text.as_bytes()),
            "statement {i} mismatch"
        );
        checked += 1;
    }
    Ok(format!(
        "{checked} hashes agree with the independent SHA-256"
    ))
}

fn confidence_math() -> Outcome {
    let agg = |c: &[f64]| aggregate_confidence(c).map_err(|e| e.to_string());
    let three = agg(&[0.8, 0.8, 0.8])?;
    ensure!(
        (three - 0.992).abs() <= 1e-12,
        "aggregate of three 0.8 is {three}"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let n = rng.random_range(0..12);
        let mut list: Vec<f64> = (0..n)
            .map(|_| match rng.random_range(0..10) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random(),
            })
            .collect();
        let a = agg(&list)?;
        ensure!(
            (a - oracle::aggregate(&list)).abs() <= 1e-12,
            "list {i}: oracle mismatch"
        );
        ensure!((0.0..=1.0).contains(&a), "list {i}: {a} out of bounds");
        let max = list.iter().copied().fold(0.0, f64::max);
        ensure!(a >= max - 1e-12, "list {i}: {a} below max element {max}");

        let mut shuffled = list.clone();
        shuffled.shuffle(&mut rng);
        ensure!(
            (agg(&shuffled)? - a).abs() <= 1e-12,
            "list {i}: order changes result"
        );

        let extra: f64 = rng.random();
        list.push(extra);
        ensure!(
            agg(&list)? >= a - 1e-12,
            "list {i}: adding an edge lowered confidence"
        );
        if let Some(last) = list.last_mut() {
            *last = (extra + rng.random::<f64>() * (1.0 - extra)).min(1.0);
        }
        let raised = agg(&list)?;
        let before = {
            let mut l = list.clone();
            *l.last_mut().unwrap() = extra;
            agg(&l)?
        };
        ensure!(
            raised >= before - 1e-12,
            "list {i}: raising a confidence lowered the aggregate"
        );
    }
    Ok(format!("0.8,0.8,0.8 -> {three:.15}; 10000 random lists"))
}

fn supersession() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let domains = ["a.example", "b.example", "c.example"];
    let mut superseded = 0;
    for g in 0..500 {
        let n = rng.random_range(1..=50);
        let mut statements: Vec<ParsedStatement> = Vec::with_capacity(n);
        let mut graph = Graph {
            domains: Vec::new(),
            refs: Vec::new(),
        };
        for i in 0..n {
            let d = rng.random_range(0..domains.len());
            let target = match rng.random_range(0..10) {
                0..=5 if i > 0 => Some(rng.random_range(0..i)),
                _ => None,
            };
            let dangling = target.is_none() && rng.random_bool(0.1);
            let mut statement = Statement::new(
                domains[d].parse().unwrap(),
                "Supersession Check",
                Timestamp::from_unix(EPOCH + rng.random_range(0..1000)).unwrap(),
                format!("Graph {g} node {i}."),
            );
            statement.superseded_statement = match (target, dangling) {
                (Some(t), _) => Some(statements[t].hash.clone()),
                (None, true) => Some(ContentHash::of_bytes(format!("gone {g} {i}").as_bytes())),
                _ => None,
            };
            let text = statement.to_text().map_err(|e| e.to_string())?;
            statements.push(ParsedStatement::from_text(&text).map_err(|e| e.to_string())?);
            graph.domains.push(d as u8);
            graph.refs.push(target);
        }
        let resolution = resolve_supersession(&statements);
        let expected = oracle::supersession(&graph);
        for (i, want) in expected.iter().enumerate() {
            let got = &resolution.status[&statements[i].hash];
            let want = match want {
                Expected::Effective => Status::Effective,
                Expected::Cycle => Status::CycleFlagged,
                Expected::SupersededBy(by) => {
                    superseded += 1;
                    let by = by
                        .iter()
                        .map(|&j| statements[j].hash.clone())
                        .min()
                        .unwrap();
                    Status::Superseded { by }
                }
            };
            ensure!(got == &want, "graph {g} node {i}: {got:?}, oracle {want:?}");
        }
        let effective: Vec<_> = effective_statements(&statements)
            .into_iter()
            .map(|p| p.hash)
            .collect();
        let want: Vec<_> = expected
            .iter()
            .zip(&statements)
            .filter(|(e, _)| **e == Expected::Effective)
            .map(|(_, s)| s.hash.clone())
            .collect();
        ensure!(effective == want, "graph {g}: effective set differs");
    }

    // Content hashes cannot form cycles, so cycles are checked on the
    // reference graph directly.
    let mut flagged = 0;
    for g in 0..500 {
        let n = rng.random_range(1..=50);
        let domains: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let refs: Vec<Option<usize>> = (0..n)
            .map(|_| rng.random_bool(0.7).then(|| rng.random_range(0..n)))
            .collect();
        let links: Vec<Link<usize, u8>> = (0..n)
            .map(|i| Link {
                key: i,
                domain: domains[i],
                supersedes: refs[i],
            })
            .collect();
        let resolution = resolve(&links);
        let expected = oracle::supersession(&Graph { domains, refs });
        for (i, want) in expected.iter().enumerate() {
            let want = match want {
                Expected::Effective => Status::Effective,
                Expected::Cycle => {
                    flagged += 1;
                    Status::CycleFlagged
                }
                Expected::SupersededBy(by) => Status::Superseded {
                    by: *by.iter().min().unwrap(),
                },
            };
            ensure!(resolution.status[&i] == want, "cyclic graph {g} node {i}");
        }
    }
    ensure!(flagged > 0, "no cycles generated");
    Ok(format!(
        "500 statement DAGs ({superseded} superseded), 500 cyclic graphs ({flagged} flagged)"
    ))
}

fn vote_text(voter: u8, id: usize, poll: &ContentHash, time: i64, option: &str) -> String {
    Statement::new(
        format!("voter{voter}.example").parse().unwrap(),
        format!("Voter {id}"),
        Timestamp::from_unix(time).unwrap(),
        serialize_content(&TypedContent::Vote(Vote {
            poll_hash: poll.clone(),
            option: option.to_owned(),
        }))
        .unwrap(),
    )
    .to_text()
    .unwrap()
}

fn why_of(r: RejectReason) -> Option<Why> {
    Some(match r {
        RejectReason::WrongPoll => Why::WrongPoll,
        RejectReason::AfterDeadline => Why::AfterDeadline,
        RejectReason::UnknownOption => Why::UnknownOption,
        RejectReason::DuplicateStatement => Why::Duplicate,
        RejectReason::DuplicateOlder => Why::Older,
        RejectReason::TiedTimestamp => Why::Tied,
        RejectReason::Malformed => return None,
    })
}

fn polls() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut seen: BTreeMap<Why, usize> = BTreeMap::new();
    let mut on_deadline_counted = 0;
    for p in 0..500 {
        let k = rng.random_range(2..=5);
        let options: Vec<String> = (0..k)
            .map(|i| format!("Option {}", (b'A' + i) as char))
            .collect();
        let deadline = EPOCH + 1000;
        let poll_text = Statement::new(
            "assembly.example".parse().unwrap(),
            "Assembly",
            Timestamp::from_unix(EPOCH).unwrap(),
            serialize_content(&TypedContent::Poll(Poll {
                voting_deadline: Timestamp::from_unix(deadline).unwrap(),
                question: format!("Question {p}?"),
                options: options.clone(),
                eligibility_description: "Members".into(),
            }))
            .unwrap(),
        )
        .to_text()
        .unwrap();
        let poll = ParsedStatement::from_text(&poll_text).map_err(|e| e.to_string())?;
        let other = ContentHash::of_bytes(format!("other poll {p}").as_bytes());

        let m = rng.random_range(0..=200);
        let voters = rng.random_range(1..=40u8);
        let mut ballots: Vec<Ballot> = Vec::with_capacity(m);
        let mut texts: Vec<String> = Vec::with_capacity(m);
        for id in 0..m {
            if id > 0 && rng.random_bool(0.05) {
                let j = rng.random_range(0..id);
                let mut b = ballots[j].clone();
                b.id = id;
                b.copy_of = Some(j);
                ballots.push(b);
                texts.push(texts[j].clone());
                continue;
            }
            let option = if rng.random_bool(0.05) {
                "Option Z".to_owned()
            } else {
                options[rng.random_range(0..options.len())].clone()
            };
            let b = Ballot {
                id,
                voter: rng.random_range(0..voters),
                poll_matches: !rng.random_bool(0.05),
                // Coarse times make ties common and hit the deadline exactly.
                time: EPOCH + 100 * rng.random_range(0..12),
                option,
                copy_of: None,
            };
            let target = if b.poll_matches { &poll.hash } else { &other };
            texts.push(vote_text(b.voter, id, target, b.time, &b.option));
            ballots.push(b);
        }
        let votes: Vec<ParsedStatement> = texts
            .iter()
            .map(|t| ParsedStatement::from_text(t).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;

        let result = tally(&poll, &votes, None).map_err(|e| e.to_string())?;
        let (counts, why) = oracle::recount(&options, deadline, &ballots);
        let got_counts: BTreeMap<String, u64> = result.counts.clone().into_iter().collect();
        ensure!(
            got_counts == counts,
            "poll {p}: counts {got_counts:?}, recount {counts:?}"
        );
        ensure!(
            result.total_votes + result.rejected.len() as u64 == m as u64,
            "poll {p}: votes lost"
        );
        let mut got: Vec<(String, Why)> = Vec::new();
        for r in &result.rejected {
            let w = why_of(r.reason).ok_or_else(|| format!("poll {p}: vote seen as malformed"))?;
            got.push((r.vote_hash.to_string(), w));
        }
        let mut want: Vec<(String, Why)> = why
            .iter()
            .map(|(&id, w)| (votes[id].hash.to_string(), w.clone()))
            .collect();
        got.sort();
        want.sort();
        ensure!(got == want, "poll {p}: rejections differ from recount");
        for (_, w) in &want {
            *seen.entry(w.clone()).or_default() += 1;
        }
        let flagged: BTreeSet<String> = result
            .flagged_domains
            .iter()
            .map(|d| d.to_string())
            .collect();
        let tied: BTreeSet<String> = why
            .iter()
            .filter(|(_, w)| **w == Why::Tied)
            .map(|(&id, _)| format!("voter{}.example", ballots[id].voter))
            .collect();
        ensure!(flagged == tied, "poll {p}: flagged domains differ");
        on_deadline_counted += ballots
            .iter()
            .filter(|b| b.time == deadline && b.poll_matches && !why.contains_key(&b.id))
            .count();

        let mut shuffled = votes.clone();
        for s in 0..10 {
            shuffled.shuffle(&mut rng);
            let again = tally(&poll, &shuffled, None).map_err(|e| e.to_string())?;
            ensure!(again == result, "poll {p}: shuffle {s} changes the tally");
        }
    }
    for w in [
        Why::WrongPoll,
        Why::AfterDeadline,
        Why::UnknownOption,
        Why::Duplicate,
        Why::Older,
        Why::Tied,
    ] {
        ensure!(
            seen.get(&w).copied().unwrap_or(0) > 0,
            "generator never produced {w:?}"
        );
    }
    ensure!(
        on_deadline_counted > 0,
        "no vote cast exactly at the deadline was counted"
    );
    Ok(format!(
        "500 polls, 10 shuffles each; rejections {seen:?}; {on_deadline_counted} on-deadline votes counted"
    ))
}

fn gossip(rt: &tokio::runtime::Runtime) -> Outcome {
    let started = Instant::now();
    let mut worst = 0;
    for seed in 0..100 {
        let config = SimConfig {
            seed,
            ..SimConfig::default()
        };
        let report = rt.block_on(simulate(&config)).map_err(|e| e.to_string())?;
        let round = report
            .converged_at_round
            .ok_or_else(|| format!("seed {seed} did not converge in {} rounds", config.rounds))?;
        ensure!(round <= 50, "seed {seed} converged at round {round}");
        worst = worst.max(round);
        ensure!(
            report.final_counts.iter().all(|&c| c == 100),
            "seed {seed}: counts {:?}",
            report.final_counts
        );
        let mut union: Vec<String> = (0..100)
            .map(|i| oracle::content_hash(simulated_statement(seed, i).as_bytes()))
            .collect();
        union.sort();
        union.dedup();
        ensure!(
            union.len() == 100,
            "seed {seed}: injected statements collide"
        );
        let digest: String = union.iter().map(|h| format!("{h}\n")).collect();
        ensure!(
            report.union_digest.as_str() == oracle::content_hash(digest.as_bytes()),
            "seed {seed}: converged set is not the injected set"
        );
    }
    let elapsed = started.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "100 simulations took {elapsed:?}"
    );

    let config = ReputationConfig::default();
    let trace = rt
        .block_on(reputation_trace(10, 8, config))
        .map_err(|e| e.to_string())?;
    let mut expected = config.initial;
    for step in &trace {
        ensure!(
            step.selected || !step.eligible,
            "round {}: eligible peer not pulled",
            step.round
        );
        if step.selected {
            expected *= 1.0 - config.alpha;
        }
        ensure!(
            (step.reputation - expected).abs() <= 1e-12,
            "round {}: reputation {} but EMA gives {expected}",
            step.round,
            step.reputation
        );
    }
    let first_ineligible = trace.iter().find(|s| !s.eligible).map(|s| s.round);
    ensure!(
        first_ineligible == Some(5),
        "ineligible from round {first_ineligible:?}"
    );
    Ok(format!(
        "100/100 seeds converged (worst round {worst}) in {elapsed:.1?}; all-invalid peer ineligible after round 5"
    ))
}

fn transport(rt: &tokio::runtime::Runtime) -> Outcome {
    rt.block_on(async {
        let server = FixtureServer::start().await;
        let domain: Domain = "example.gov".parse().unwrap();
        // Poll spacing is its own rule; here each fixture is fetched back to back.
        let config = FetchConfig {
            min_poll_interval: Duration::ZERO,
            ..FetchConfig::default()
        };
        let cap = config.max_file_bytes;
        let fetcher = Fetcher::new(config).with_override(domain.clone(), server.base());
        let mut bom = b"\xEF\xBB\xBF".to_vec();
        bom.extend_from_slice(SIGN_PDF.as_bytes());
        let mut oversize = SIGN_PDF.as_bytes().to_vec();
        oversize.resize(cap + 1, b'\n');

        let cases: Vec<(&str, Fixture, &str)> = vec![
            (
                "wrong content-type",
                Fixture::text(SIGN_PDF).with_content_type("text/html; charset=utf-8"),
                "wrong-content-type",
            ),
            (
                "missing charset",
                Fixture::text(SIGN_PDF).with_content_type("text/plain"),
                "wrong-content-type",
            ),
            ("BOM", Fixture::text(bom), "bom-present"),
            (
                "CRLF",
                Fixture::text(SIGN_PDF.replace('\n', "\r\n")),
                "carriage-return",
            ),
            ("oversize", Fixture::text(oversize), "body-too-large"),
        ];
        let n = cases.len();
        for (what, fixture, class) in cases {
            server.set(STATEMENTS_PATH, fixture);
            match fetcher.fetch_statement_file(&domain).await {
                Err(e) if e.class() == class => {}
                Err(e) => return Err(format!("{what}: rejected as {} ({e})", e.class())),
                Ok(_) => return Err(format!("{what}: accepted")),
            }
        }

        let pinned: ContentHash = PINNED[0].1.parse().unwrap();
        server.set(
            &statement_path(&pinned),
            Fixture::text(SIGN_PDF.replace("sign", "Sign")),
        );
        match fetcher.fetch_statement_by_hash(&domain, &pinned).await {
            Err(e) if e.class() == "hash-mismatch" => {}
            other => return Err(format!("hash-mismatched by-hash fixture: {other:?}")),
        }

        server.set(STATEMENTS_PATH, Fixture::text(format!("{SIGN_PDF}\n")));
        let (file, _) = fetcher
            .fetch_statement_file(&domain)
            .await
            .map_err(|e| format!("valid file rejected: {e}"))?;
        ensure!(
            file.statements == vec![SIGN_PDF.to_owned()],
            "valid file misread"
        );
        server.set(&statement_path(&pinned), Fixture::text(SIGN_PDF));
        let one = fetcher
            .fetch_statement_by_hash(&domain, &pinned)
            .await
            .map_err(|e| format!("valid by-hash fixture rejected: {e}"))?;
        ensure!(one == SIGN_PDF, "by-hash body altered");
        Ok(format!(
            "{} bad fixtures rejected with the right class, 2 good ones accepted",
            n + 1
        ))
    })
}

#[derive(Debug, Clone, PartialEq)]
struct Snapshot {
    records: Vec<NodeRecord>,
    peer: PeerState,
}

fn snapshot(store: &dyn Store) -> Result<Snapshot, String> {
    let mut records = store.all().map_err(|e| e.to_string())?;
    records.sort_by_key(|r| r.local_id);
    let peer = store
        .peers()
        .map_err(|e| e.to_string())?
        .into_iter()
        .find(|p| p.peer_id == durability::PEER)
        .ok_or("peer missing")?;
    Ok(Snapshot { records, peer })
}

fn durability_check() -> Outcome {
    const TOTAL: u64 = 350;
    const KILLS: usize = 5;

    // Uninterrupted replay, keeping the peer state after every step.
    let replay = durability::open(SqliteStore::in_memory().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut by_cursor: BTreeMap<u64, (PeerState, usize)> = BTreeMap::new();
    let record_step = |by_cursor: &mut BTreeMap<u64, (PeerState, usize)>| -> Result<(), String> {
        let peer = replay.peers().map_err(|e| e.to_string())?.remove(0);
        let len = replay.len().map_err(|e| e.to_string())? as usize;
        by_cursor.insert(peer.cursor, (peer, len));
        Ok(())
    };
    record_step(&mut by_cursor)?;
    while durability::step(&replay, TOTAL, Duration::ZERO)
        .map_err(|e| e.to_string())?
        .is_some()
    {
        record_step(&mut by_cursor)?;
    }
    let mut expected: Vec<NodeRecord> = replay.records().map_err(|e| e.to_string())?;
    expected.sort_by_key(|r| r.local_id);
    let final_peer = replay.peers().map_err(|e| e.to_string())?.remove(0);

    let dir = std::env::temp_dir().join(format!("stated-durability-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let db = dir.join("node.sqlite");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut kills = Vec::new();
    let mut finished = false;
    for life in 0..=KILLS {
        let mut child = Command::new(env!("CARGO_BIN_EXE_durability-child"))
            .args([db.to_str().unwrap(), &TOTAL.to_string(), "1"])
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| e.to_string())?;
        let stdout = child.stdout.take().unwrap();
        let mut lines = BufReader::new(stdout).lines();
        let kill_after = if life < KILLS {
            2 + rng.random_range(0..4)
        } else {
            usize::MAX
        };
        let mut read = 0;
        while read < kill_after {
            match lines.next() {
                Some(Ok(l)) if l == "done" => {
                    finished = true;
                    break;
                }
                Some(Ok(_)) => read += 1,
                _ => break,
            }
        }
        if !finished && life < KILLS {
            std::thread::sleep(Duration::from_micros(rng.random_range(0..2500)));
            child.kill().map_err(|e| e.to_string())?;
        }
        let status = child.wait().map_err(|e| e.to_string())?;
        if life == KILLS {
            ensure!(status.success(), "final run exited with {status}");
        }

        let store = SqliteStore::open(&db).map_err(|e| format!("reopen after life {life}: {e}"))?;
        let snap = snapshot(&store)?;
        for (i, r) in snap.records.iter().enumerate() {
            ensure!(
                r.local_id == i as u64 + 1,
                "life {life}: gap before local_id {}",
                r.local_id
            );
        }
        ensure!(
            snap.records[..] == expected[..snap.records.len()],
            "life {life}: store is not a prefix of the replay"
        );
        let (peer, len) = by_cursor.get(&snap.peer.cursor).ok_or_else(|| {
            format!(
                "life {life}: cursor {} never reached by replay",
                snap.peer.cursor
            )
        })?;
        ensure!(
            &snap.peer == peer,
            "life {life}: peer state differs from replay at cursor"
        );
        // The step's local statement may be in without its batch.
        ensure!(
            snap.records.len() == *len || snap.records.len() == len + 1,
            "life {life}: {} records at cursor {}, replay has {len}",
            snap.records.len(),
            snap.peer.cursor
        );
        if life < KILLS && !finished {
            kills.push(snap.peer.cursor);
        }
        if finished {
            break;
        }
    }
    let store = SqliteStore::open(&db).map_err(|e| e.to_string())?;
    let end = snapshot(&store)?;
    ensure!(end.records == expected, "final store differs from replay");
    ensure!(
        end.peer == final_peer,
        "final peer state differs from replay"
    );
    drop(store);
    let again = snapshot(&SqliteStore::open(&db).map_err(|e| e.to_string())?)?;
    ensure!(again == end, "reopen changed the store");
    let _ = std::fs::remove_dir_all(&dir);
    ensure!(
        kills.len() == KILLS,
        "only {} kills landed before the run finished",
        kills.len()
    );
    ensure!(
        kills.iter().all(|&c| c < TOTAL),
        "a kill landed after ingestion finished"
    );
    Ok(format!(
        "{} SIGKILLs at cursors {kills:?}; {} records, gapless, equal to replay",
        kills.len(),
        expected.len()
    ))
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("format conformance", Box::new(format_conformance)),
        ("hash oracle", Box::new(hash_oracle)),
        ("confidence math", Box::new(confidence_math)),
        ("supersession", Box::new(supersession)),
        ("tally", Box::new(polls)),
        (
            "gossip convergence and reputation",
            Box::new(|| gossip(&rt)),
        ),
        ("transport enforcement", Box::new(|| transport(&rt))),
        ("node durability", Box::new(durability_check)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>()
                    .map(String::as_str)
                    .or(p.downcast_ref::<&str>().copied())
            ))
        });
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{took:.2?}]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
