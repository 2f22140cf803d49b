//! Typed statement contents.
//!
//! A typed content is a nested block under `Statement content:` whose first
//! line is `Type: <label>`. Each following line is one `Field: value` pair
//! indented by one tab; second-level fields (poll eligibility) use two tabs.
//! Fields appear in a single fixed order per type, so each value has exactly
//! one textual form.

mod block;
mod types;

use serde::Serialize;
use thiserror::Error;

pub use types::{
    Bounty, Boycott, Confidence, DisputeAuthenticity, DisputeContent, OrganisationVerification,
    PersonVerification, Poll, Rating, Response, SignPdf, Vote, MAX_POLL_OPTIONS,
    ORGANISATION_VERIFICATION_DESCRIPTION, PERSON_VERIFICATION_DESCRIPTION,
};

use block::Block;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContentError {
    #[error("malformed typed content: {0}")]
    MalformedTypedContent(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

pub(crate) fn malformed(msg: impl Into<String>) -> ContentError {
    ContentError::MalformedTypedContent(msg.into())
}

/// Type labels as they appear on the `Type:` line.
pub mod label {
    pub const ORGANISATION_VERIFICATION: &str = "Organisation verification";
    pub const PERSON_VERIFICATION: &str = "Person verification";
    pub const SIGN_PDF: &str = "Sign PDF";
    pub const POLL: &str = "Poll";
    pub const VOTE: &str = "Vote";
    pub const RESPONSE: &str = "Response";
    pub const BOUNTY: &str = "Bounty";
    pub const BOYCOTT: &str = "Boycott";
    pub const DISPUTE_AUTHENTICITY: &str = "Dispute statement authenticity";
    pub const DISPUTE_CONTENT: &str = "Dispute statement content";
    pub const RATING: &str = "Rating";
    /// Reported for contents without a `Type:` line.
    pub const PLAIN: &str = "Plain";

    pub const KNOWN: [&str; 11] = [
        ORGANISATION_VERIFICATION,
        PERSON_VERIFICATION,
        SIGN_PDF,
        POLL,
        VOTE,
        RESPONSE,
        BOUNTY,
        BOYCOTT,
        DISPUTE_AUTHENTICITY,
        DISPUTE_CONTENT,
        RATING,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TypedContent {
    /// Untyped text, kept verbatim in whichever layout it was written.
    Plain {
        text: String,
    },
    OrganisationVerification(OrganisationVerification),
    PersonVerification(PersonVerification),
    SignPdf(SignPdf),
    Poll(Poll),
    Vote(Vote),
    Response(Response),
    Bounty(Bounty),
    Boycott(Boycott),
    DisputeAuthenticity(DisputeAuthenticity),
    DisputeContent(DisputeContent),
    Rating(Rating),
    /// A `Type:` label this implementation does not know; relayed as is and
    /// ignored by aggregation.
    Unknown {
        label: String,
        raw: String,
    },
}

impl TypedContent {
    pub fn plain(text: impl Into<String>) -> Self {
        TypedContent::Plain { text: text.into() }
    }

    pub fn type_label(&self) -> &str {
        match self {
            TypedContent::Plain { .. } => label::PLAIN,
            TypedContent::OrganisationVerification(_) => label::ORGANISATION_VERIFICATION,
            TypedContent::PersonVerification(_) => label::PERSON_VERIFICATION,
            TypedContent::SignPdf(_) => label::SIGN_PDF,
            TypedContent::Poll(_) => label::POLL,
            TypedContent::Vote(_) => label::VOTE,
            TypedContent::Response(_) => label::RESPONSE,
            TypedContent::Bounty(_) => label::BOUNTY,
            TypedContent::Boycott(_) => label::BOYCOTT,
            TypedContent::DisputeAuthenticity(_) => label::DISPUTE_AUTHENTICITY,
            TypedContent::DisputeContent(_) => label::DISPUTE_CONTENT,
            TypedContent::Rating(_) => label::RATING,
            TypedContent::Unknown { label, .. } => label,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, TypedContent::Unknown { .. })
    }
}

/// Decode a content body as stored in [`crate::Statement::content`].
pub fn parse_content(raw: &str) -> Result<TypedContent, ContentError> {
    let Some(nested) = raw.strip_prefix('\n') else {
        return Ok(TypedContent::plain(raw));
    };
    let mut lines = Vec::new();
    for line in nested.split('\n') {
        let inner = line
            .strip_prefix('\t')
            .ok_or_else(|| malformed(format!("line not indented by a tab: {line:?}")))?;
        lines.push(inner);
    }
    let Some(type_label) = lines[0].strip_prefix("Type: ") else {
        return Ok(TypedContent::plain(raw));
    };
    let mut block = Block::new(&lines[1..]);
    let content = match type_label {
        label::ORGANISATION_VERIFICATION => {
            TypedContent::OrganisationVerification(OrganisationVerification::read(&mut block)?)
        }
        label::PERSON_VERIFICATION => {
            TypedContent::PersonVerification(PersonVerification::read(&mut block)?)
        }
        label::SIGN_PDF => TypedContent::SignPdf(SignPdf::read(&mut block)?),
        label::POLL => TypedContent::Poll(Poll::read(&mut block)?),
        label::VOTE => TypedContent::Vote(Vote::read(&mut block)?),
        label::RESPONSE => TypedContent::Response(Response::read(&mut block)?),
        label::BOUNTY => TypedContent::Bounty(Bounty::read(&mut block)?),
        label::BOYCOTT => TypedContent::Boycott(Boycott::read(&mut block)?),
        label::DISPUTE_AUTHENTICITY => {
            TypedContent::DisputeAuthenticity(DisputeAuthenticity::read(&mut block)?)
        }
        label::DISPUTE_CONTENT => TypedContent::DisputeContent(DisputeContent::read(&mut block)?),
        label::RATING => TypedContent::Rating(Rating::read(&mut block)?),
        other => {
            return Ok(TypedContent::Unknown {
                label: other.to_owned(),
                raw: raw.to_owned(),
            })
        }
    };
    block.finish(type_label)?;
    Ok(content)
}

/// Encode a content in its canonical layout.
///
/// The result always satisfies `parse_content(&out) == Ok(c.clone())`.
pub fn serialize_content(c: &TypedContent) -> Result<String, ContentError> {
    let mut out = block::Writer::new();
    match c {
        TypedContent::Plain { text } => out.raw(text),
        TypedContent::Unknown { raw, .. } => out.raw(raw),
        typed => {
            out.field("Type", typed.type_label());
            match typed {
                TypedContent::OrganisationVerification(v) => v.write(&mut out),
                TypedContent::PersonVerification(v) => v.write(&mut out),
                TypedContent::SignPdf(v) => v.write(&mut out),
                TypedContent::Poll(v) => v.write(&mut out),
                TypedContent::Vote(v) => v.write(&mut out),
                TypedContent::Response(v) => v.write(&mut out),
                TypedContent::Bounty(v) => v.write(&mut out),
                TypedContent::Boycott(v) => v.write(&mut out),
                TypedContent::DisputeAuthenticity(v) => v.write(&mut out),
                TypedContent::DisputeContent(v) => v.write(&mut out),
                TypedContent::Rating(v) => v.write(&mut out),
                TypedContent::Plain { .. } | TypedContent::Unknown { .. } => unreachable!(),
            }
        }
    }
    let text = out.finish()?;
    match parse_content(&text) {
        Ok(back) if &back == c => Ok(text),
        Ok(_) => Err(ContentError::InvariantViolation(format!(
            "{} does not survive a round trip",
            c.type_label()
        ))),
        Err(ContentError::MalformedTypedContent(why)) => Err(ContentError::InvariantViolation(why)),
        Err(e) => Err(e),
    }
}
