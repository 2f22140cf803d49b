#![allow(dead_code)]

use proptest::prelude::*;
use stated_core::content::*;
use stated_core::{serialize_content, ContentHash, Domain, Statement, Timestamp, TypedContent};

pub fn domain() -> impl Strategy<Value = Domain> {
    "[a-z][a-z0-9]{0,8}(\\.[a-z]{2,6}){1,2}".prop_map(|s| s.parse().unwrap())
}

/// Single-line text without surrounding whitespace.
pub fn line() -> impl Strategy<Value = String> {
    "[A-Za-z0-9äöüé][A-Za-z0-9 ,.:'äöüé()-]{0,30}[A-Za-z0-9.)]"
}

pub fn hash() -> impl Strategy<Value = ContentHash> {
    any::<[u8; 16]>().prop_map(|b| ContentHash::of_bytes(&b))
}

pub fn timestamp() -> impl Strategy<Value = Timestamp> {
    (0i64..4_102_444_800).prop_map(|s| Timestamp::from_unix(s).unwrap())
}

pub fn confidence() -> impl Strategy<Value = Confidence> {
    prop_oneof![
        (0u32..=100).prop_map(|n| Confidence::from_value(f64::from(n) / 100.0).unwrap()),
        Just("0.80".parse().unwrap()),
        Just("1".parse().unwrap()),
        Just("0".parse().unwrap()),
    ]
}

pub fn typed_content() -> impl Strategy<Value = TypedContent> {
    prop_oneof![
        line().prop_map(TypedContent::plain),
        (line(), line(), line(), domain(), confidence()).prop_map(|(n, c, l, d, conf)| {
            TypedContent::OrganisationVerification(OrganisationVerification {
                name: n,
                country: c,
                legal_form: l,
                domain_owned: d,
                confidence: conf,
            })
        }),
        (
            line(),
            line(),
            line(),
            domain(),
            confidence(),
            1900i32..2020,
            1u32..=12,
            1u32..=28
        )
            .prop_map(|(n, city, country, d, conf, y, m, day)| {
                TypedContent::PersonVerification(PersonVerification {
                    name: n,
                    birth_date: format!("{y:04}-{m:02}-{day:02}"),
                    birth_city: city,
                    birth_country: country,
                    domain_owned: d,
                    confidence: conf,
                })
            }),
        (line(), hash()).prop_map(|(d, h)| TypedContent::SignPdf(SignPdf {
            description: d,
            pdf_hash: h
        })),
        (
            timestamp(),
            line(),
            prop::collection::btree_set(line(), 2..=MAX_POLL_OPTIONS),
            line()
        )
            .prop_map(|(t, q, opts, e)| TypedContent::Poll(Poll {
                voting_deadline: t,
                question: q,
                options: opts.into_iter().collect(),
                eligibility_description: e,
            })),
        (hash(), line()).prop_map(|(h, o)| TypedContent::Vote(Vote {
            poll_hash: h,
            option: o
        })),
        (hash(), line()).prop_map(|(h, r)| TypedContent::Response(Response {
            statement_hash: h,
            response_text: r
        })),
        (line(), line(), proptest::option::of(line())).prop_map(|(a, r, j)| {
            TypedContent::Bounty(Bounty {
                action_description: a,
                reward_description: r,
                judge: j,
            })
        }),
        (line(), line()).prop_map(|(s, d)| TypedContent::Boycott(Boycott {
            subject: s,
            description: d
        })),
        hash().prop_map(|h| TypedContent::DisputeAuthenticity(DisputeAuthenticity {
            statement_hash: h
        })),
        (hash(), proptest::option::of(line())).prop_map(|(h, d)| {
            TypedContent::DisputeContent(DisputeContent {
                statement_hash: h,
                description: d,
            })
        }),
        (
            line(),
            domain(),
            line(),
            1u8..=5,
            proptest::option::of(line())
        )
            .prop_map(|(n, d, q, s, c)| TypedContent::Rating(Rating {
                subject_name: n,
                subject_domain: d,
                quality: q,
                stars: s,
                comment: c,
            })),
    ]
}

pub fn statement() -> impl Strategy<Value = Statement> {
    (
        domain(),
        line(),
        proptest::option::of(line()),
        timestamp(),
        prop::collection::vec("[a-z][a-z0-9-]{0,10}", 0..4),
        proptest::option::of(hash()),
        typed_content(),
    )
        .prop_map(|(d, author, rep, time, tags, sup, content)| Statement {
            publishing_domain: d,
            author,
            representative: rep,
            time,
            tags,
            superseded_statement: sup,
            format_version: 4,
            content: serialize_content(&content).unwrap(),
        })
}

pub fn parsed(domain: &str, time: i64, content: &TypedContent) -> stated_core::ParsedStatement {
    let statement = Statement::new(
        domain.parse().unwrap(),
        "Test Org",
        Timestamp::from_unix(time).unwrap(),
        serialize_content(content).unwrap(),
    );
    stated_core::ParsedStatement::from_text(&statement.to_text().unwrap()).unwrap()
}

pub fn poll_statement(options: &[&str], deadline: i64) -> stated_core::ParsedStatement {
    parsed(
        "assembly.example",
        0,
        &TypedContent::Poll(Poll {
            voting_deadline: Timestamp::from_unix(deadline).unwrap(),
            question: "Adopt the resolution?".into(),
            options: options.iter().map(|s| s.to_string()).collect(),
            eligibility_description: "Members".into(),
        }),
    )
}

pub fn vote_statement(
    domain: &str,
    poll: &ContentHash,
    option: &str,
    time: i64,
) -> stated_core::ParsedStatement {
    parsed(
        domain,
        time,
        &TypedContent::Vote(Vote {
            poll_hash: poll.clone(),
            option: option.into(),
        }),
    )
}
