//! Poll tallying.
//!
//! One vote counts per publishing domain: the latest valid vote cast at or
//! before the voting deadline. Every other input vote ends up in
//! [`Tally::rejected`] with a reason, so `total_votes + rejected.len()`
//! always equals the number of input votes.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

use crate::content::{Poll, TypedContent, Vote};
use crate::domain::Domain;
use crate::hash::ContentHash;
use crate::parsed::ParsedStatement;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TallyError {
    #[error("statement {0} is not a poll")]
    NotAPoll(ContentHash),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    /// The statement content is not a vote.
    Malformed,
    WrongPoll,
    AfterDeadline,
    UnknownOption,
    /// The same statement appeared more than once in the input.
    DuplicateStatement,
    /// A later valid vote from the same domain replaces this one.
    DuplicateOlder,
    /// Two or more latest votes from one domain share a timestamp.
    TiedTimestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Rejection {
    pub vote_hash: ContentHash,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub schema_version: u32,
    pub poll_hash: ContentHash,
    /// Every option in poll order, including those with no votes.
    pub counts: IndexMap<String, u64>,
    pub total_votes: u64,
    /// Sorted by hash, then reason.
    pub rejected: Vec<Rejection>,
    /// Counts restricted to domains accepted by the eligibility predicate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualified_counts: Option<IndexMap<String, u64>>,
    /// Domains whose votes were dropped because of a timestamp tie.
    pub flagged_domains: Vec<Domain>,
}

/// Extract the poll content of a statement.
pub fn poll_of(statement: &ParsedStatement) -> Result<&Poll, TallyError> {
    match &statement.content {
        TypedContent::Poll(p) => Ok(p),
        _ => Err(TallyError::NotAPoll(statement.hash.clone())),
    }
}

/// Count votes for `poll`. `votes` must already be filtered to effective
/// statements.
pub fn tally(
    poll: &ParsedStatement,
    votes: &[ParsedStatement],
    eligibility: Option<&dyn Fn(&Domain) -> bool>,
) -> Result<Tally, TallyError> {
    let content = poll_of(poll)?;
    let poll_hash = &poll.hash;
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();

    // Valid candidates grouped by voter domain.
    let mut candidates: BTreeMap<&Domain, Vec<(&ParsedStatement, &Vote)>> = BTreeMap::new();
    for v in votes {
        let reject = |reason| Rejection {
            vote_hash: v.hash.clone(),
            reason,
        };
        let TypedContent::Vote(vote) = &v.content else {
            rejected.push(reject(RejectReason::Malformed));
            continue;
        };
        if &vote.poll_hash != poll_hash {
            rejected.push(reject(RejectReason::WrongPoll));
        } else if v.statement.time > content.voting_deadline {
            rejected.push(reject(RejectReason::AfterDeadline));
        } else if !content.options.contains(&vote.option) {
            rejected.push(reject(RejectReason::UnknownOption));
        } else if !seen.insert(&v.hash) {
            rejected.push(reject(RejectReason::DuplicateStatement));
        } else {
            candidates
                .entry(&v.statement.publishing_domain)
                .or_default()
                .push((v, vote));
        }
    }

    let mut counts: IndexMap<String, u64> =
        content.options.iter().map(|o| (o.clone(), 0)).collect();
    let mut qualified = eligibility.map(|_| counts.clone());
    let mut flagged_domains = Vec::new();
    let mut total_votes = 0;
    for (domain, ballots) in candidates {
        let latest = ballots
            .iter()
            .map(|(s, _)| s.statement.time)
            .max()
            .expect("non-empty group");
        let winners: Vec<_> = ballots
            .iter()
            .filter(|(s, _)| s.statement.time == latest)
            .collect();
        for (s, _) in ballots.iter().filter(|(s, _)| s.statement.time < latest) {
            rejected.push(Rejection {
                vote_hash: s.hash.clone(),
                reason: RejectReason::DuplicateOlder,
            });
        }
        if winners.len() > 1 {
            flagged_domains.push(domain.clone());
            for (s, _) in winners {
                rejected.push(Rejection {
                    vote_hash: s.hash.clone(),
                    reason: RejectReason::TiedTimestamp,
                });
            }
            continue;
        }
        let option = &winners[0].1.option;
        *counts.get_mut(option).expect("option validated") += 1;
        total_votes += 1;
        if let (Some(q), Some(pred)) = (qualified.as_mut(), eligibility) {
            if pred(domain) {
                *q.get_mut(option).expect("option validated") += 1;
            }
        }
    }
    rejected.sort();

    Ok(Tally {
        schema_version: SCHEMA_VERSION,
        poll_hash: poll_hash.clone(),
        counts,
        total_votes,
        rejected,
        qualified_counts: qualified,
        flagged_domains,
    })
}
