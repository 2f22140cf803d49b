//! Web-of-trust aggregation.
//!
//! Independent verifications with confidences `c1..cn` combine as
//! `1 - (1 - c1)(1 - c2)...(1 - cn)`: the probability that at least one of
//! them is right. The formula assumes independence; callers get the full edge
//! list so they can judge whether the verifiers really are independent.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::content::TypedContent;
use crate::domain::Domain;
use crate::hash::ContentHash;
use crate::parsed::ParsedStatement;
use crate::time::Timestamp;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum TrustError {
    #[error("confidence {0} outside [0, 1]")]
    OutOfRangeConfidence(f64),
}

/// Combine independent confidences.
///
/// ```
/// let c = stated_core::aggregate_confidence(&[0.5, 0.5]).unwrap();
/// assert!((c - 0.75).abs() < 1e-12);
/// ```
pub fn aggregate_confidence(confidences: &[f64]) -> Result<f64, TrustError> {
    let mut doubt = 1.0;
    for &c in confidences {
        if !(0.0..=1.0).contains(&c) {
            return Err(TrustError::OutOfRangeConfidence(c));
        }
        doubt *= 1.0 - c;
    }
    Ok((1.0 - doubt).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationKind {
    Organisation,
    Person,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationEdge {
    pub verifier_domain: Domain,
    pub subject_domain: Domain,
    pub subject_name: String,
    pub confidence: f64,
    pub statement_hash: ContentHash,
    pub time: Timestamp,
    pub kind: VerificationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DisputeKind {
    Authenticity,
    Content,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dispute {
    pub statement_hash: ContentHash,
    pub disputing_domain: Domain,
    pub target: ContentHash,
    /// Publisher of the disputed statement, when it is known.
    pub target_domain: Option<Domain>,
    pub kind: DisputeKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingEdge {
    pub rater_domain: Domain,
    pub subject_domain: Domain,
    pub quality: String,
    pub stars: u8,
    pub statement_hash: ContentHash,
    pub time: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrustAssessment {
    pub schema_version: u32,
    pub subject_domain: Domain,
    pub aggregate_confidence: f64,
    pub contributing_edges: Vec<VerificationEdge>,
    /// Hashes of dispute statements aimed at this domain or at one of the
    /// contributing verifications. They do not change the aggregate.
    pub active_disputes: Vec<ContentHash>,
    /// Mean rating per quality label.
    pub mean_stars: BTreeMap<String, f64>,
}

/// Keep the latest item per key; ties on time go to the larger hash so the
/// choice does not depend on input order.
fn latest_by<'a, T, K: std::hash::Hash + Eq>(
    items: impl Iterator<Item = &'a T>,
    key: impl Fn(&T) -> K,
    order: impl Fn(&T) -> (Timestamp, &ContentHash),
) -> Vec<&'a T>
where
    T: 'a,
{
    let mut best: HashMap<K, &T> = HashMap::new();
    for item in items {
        best.entry(key(item))
            .and_modify(|b| {
                if order(item) > order(b) {
                    *b = item
                }
            })
            .or_insert(item);
    }
    best.into_values().collect()
}

/// Assess one subject domain. Inputs must come from effective statements.
pub fn assess_domain(
    subject: &Domain,
    edges: &[VerificationEdge],
    disputes: &[Dispute],
    ratings: &[RatingEdge],
) -> TrustAssessment {
    let mut contributing: Vec<VerificationEdge> = latest_by(
        edges
            .iter()
            .filter(|e| &e.subject_domain == subject && e.verifier_domain != *subject)
            .filter(|e| (0.0..=1.0).contains(&e.confidence)),
        |e| e.verifier_domain.clone(),
        |e| (e.time, &e.statement_hash),
    )
    .into_iter()
    .cloned()
    .collect();
    contributing.sort_by(|a, b| a.verifier_domain.cmp(&b.verifier_domain));

    let confidences: Vec<f64> = contributing.iter().map(|e| e.confidence).collect();
    let aggregate = aggregate_confidence(&confidences).expect("filtered to [0, 1]");

    let edge_hashes: BTreeSet<&ContentHash> =
        contributing.iter().map(|e| &e.statement_hash).collect();
    let active_disputes: Vec<ContentHash> = disputes
        .iter()
        .filter(|d| d.target_domain.as_ref() == Some(subject) || edge_hashes.contains(&d.target))
        .map(|d| d.statement_hash.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut stars: BTreeMap<String, (u32, u32)> = BTreeMap::new();
    for r in latest_by(
        ratings
            .iter()
            .filter(|r| &r.subject_domain == subject && r.rater_domain != *subject),
        |r| (r.rater_domain.clone(), r.quality.clone()),
        |r| (r.time, &r.statement_hash),
    ) {
        let entry = stars.entry(r.quality.clone()).or_default();
        entry.0 += u32::from(r.stars);
        entry.1 += 1;
    }
    let mean_stars = stars
        .into_iter()
        .map(|(q, (sum, n))| (q, f64::from(sum) / f64::from(n)))
        .collect();

    TrustAssessment {
        schema_version: SCHEMA_VERSION,
        subject_domain: subject.clone(),
        aggregate_confidence: aggregate,
        contributing_edges: contributing,
        active_disputes,
        mean_stars,
    }
}

/// Verification, dispute and rating edges extracted from a statement set.
#[derive(Debug, Clone, Default)]
pub struct TrustGraph {
    pub edges: Vec<VerificationEdge>,
    pub disputes: Vec<Dispute>,
    pub ratings: Vec<RatingEdge>,
}

impl TrustGraph {
    /// Build from statements already filtered to the effective set.
    pub fn from_statements<'a>(statements: impl IntoIterator<Item = &'a ParsedStatement>) -> Self {
        let statements: Vec<&ParsedStatement> = statements.into_iter().collect();
        let publisher: HashMap<&ContentHash, &Domain> = statements
            .iter()
            .map(|p| (&p.hash, &p.statement.publishing_domain))
            .collect();
        let mut graph = TrustGraph::default();
        for p in &statements {
            let domain = &p.statement.publishing_domain;
            let time = p.statement.time;
            let hash = &p.hash;
            match &p.content {
                TypedContent::OrganisationVerification(v) if &v.domain_owned != domain => {
                    graph.edges.push(VerificationEdge {
                        verifier_domain: domain.clone(),
                        subject_domain: v.domain_owned.clone(),
                        subject_name: v.name.clone(),
                        confidence: v.confidence.value(),
                        statement_hash: hash.clone(),
                        time,
                        kind: VerificationKind::Organisation,
                    })
                }
                TypedContent::PersonVerification(v) if &v.domain_owned != domain => {
                    graph.edges.push(VerificationEdge {
                        verifier_domain: domain.clone(),
                        subject_domain: v.domain_owned.clone(),
                        subject_name: v.name.clone(),
                        confidence: v.confidence.value(),
                        statement_hash: hash.clone(),
                        time,
                        kind: VerificationKind::Person,
                    })
                }
                TypedContent::DisputeAuthenticity(d) => graph.disputes.push(Dispute {
                    statement_hash: hash.clone(),
                    disputing_domain: domain.clone(),
                    target: d.statement_hash.clone(),
                    target_domain: publisher.get(&d.statement_hash).map(|d| (*d).clone()),
                    kind: DisputeKind::Authenticity,
                }),
                TypedContent::DisputeContent(d) => graph.disputes.push(Dispute {
                    statement_hash: hash.clone(),
                    disputing_domain: domain.clone(),
                    target: d.statement_hash.clone(),
                    target_domain: publisher.get(&d.statement_hash).map(|d| (*d).clone()),
                    kind: DisputeKind::Content,
                }),
                TypedContent::Rating(r) => graph.ratings.push(RatingEdge {
                    rater_domain: domain.clone(),
                    subject_domain: r.subject_domain.clone(),
                    quality: r.quality.clone(),
                    stars: r.stars,
                    statement_hash: hash.clone(),
                    time,
                }),
                _ => {}
            }
        }
        graph
    }

    pub fn assess(&self, subject: &Domain) -> TrustAssessment {
        assess_domain(subject, &self.edges, &self.disputes, &self.ratings)
    }
}
