use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Serialize, Serializer};

use super::block::{Block, Writer};
use super::{malformed, ContentError};
use crate::domain::Domain;
use crate::hash::ContentHash;
use crate::time::Timestamp;

pub const ORGANISATION_VERIFICATION_DESCRIPTION: &str =
    "We verified the following information about an organisation.";
pub const PERSON_VERIFICATION_DESCRIPTION: &str =
    "We verified the following information about a person.";

pub const MAX_POLL_OPTIONS: usize = 20;

const REFERENCED: &str = "Hash of referenced statement";

fn hash_field(block: &mut Block<'_>, name: &str) -> Result<ContentHash, ContentError> {
    let value = block.field(name)?;
    value
        .parse()
        .map_err(|_| malformed(format!("{name} is not a content hash: {value:?}")))
}

fn domain_field(block: &mut Block<'_>, name: &str) -> Result<Domain, ContentError> {
    let value = block.field(name)?;
    value
        .parse()
        .map_err(|_| malformed(format!("{name} is not a domain: {value:?}")))
}

/// A probability in `[0, 1]` written with at most two fraction digits.
///
/// The literal is kept as written, so `0.8` and `0.80` are distinct values
/// that produce distinct statement hashes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Confidence(String);

impl Confidence {
    pub fn value(&self) -> f64 {
        self.0.parse().expect("validated literal")
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Shortest literal with at most two fraction digits, e.g. `0.8`.
    pub fn from_value(value: f64) -> Result<Self, ContentError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(ContentError::InvariantViolation(format!(
                "confidence {value} outside [0, 1]"
            )));
        }
        let mut literal = format!("{value:.2}");
        while literal.ends_with('0') && !literal.ends_with(".0") {
            literal.pop();
        }
        literal.parse().map_err(|_| {
            ContentError::InvariantViolation(format!("confidence {value} has no literal"))
        })
    }
}

impl FromStr for Confidence {
    type Err = ContentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || malformed(format!("confidence {s:?} must be a decimal in [0.0, 1.0]"));
        let (whole, fraction) = match s.split_once('.') {
            Some((w, f)) => (w, Some(f)),
            None => (s, None),
        };
        if whole != "0" && whole != "1" {
            return Err(err());
        }
        if let Some(f) = fraction {
            if f.is_empty() || f.len() > 2 || !f.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            if whole == "1" && f.bytes().any(|b| b != b'0') {
                return Err(err());
            }
        }
        Ok(Confidence(s.to_owned()))
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Confidence({})", self.0)
    }
}

impl Serialize for Confidence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.value())
    }
}

fn confidence_field(block: &mut Block<'_>) -> Result<Confidence, ContentError> {
    block.field("Confidence")?.parse()
}

fn fixed_description(block: &mut Block<'_>, expected: &str) -> Result<(), ContentError> {
    let description = block.field("Description")?;
    if description != expected {
        return Err(malformed(format!("description must read {expected:?}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrganisationVerification {
    pub name: String,
    pub country: String,
    pub legal_form: String,
    pub domain_owned: Domain,
    pub confidence: Confidence,
}

impl OrganisationVerification {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        fixed_description(block, ORGANISATION_VERIFICATION_DESCRIPTION)?;
        Ok(OrganisationVerification {
            name: block.field("Name")?.to_owned(),
            country: block.field("Country")?.to_owned(),
            legal_form: block.field("Legal form")?.to_owned(),
            domain_owned: domain_field(block, "Owner of the domain")?,
            confidence: confidence_field(block)?,
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Description", ORGANISATION_VERIFICATION_DESCRIPTION);
        out.field("Name", &self.name);
        out.field("Country", &self.country);
        out.field("Legal form", &self.legal_form);
        out.field("Owner of the domain", self.domain_owned.as_str());
        out.field("Confidence", self.confidence.as_str());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PersonVerification {
    pub name: String,
    /// `YYYY-MM-DD`.
    pub birth_date: String,
    pub birth_city: String,
    pub birth_country: String,
    pub domain_owned: Domain,
    pub confidence: Confidence,
}

impl PersonVerification {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        fixed_description(block, PERSON_VERIFICATION_DESCRIPTION)?;
        let name = block.field("Name")?.to_owned();
        let birth_date = block.field("Date of birth")?;
        let canonical_date = NaiveDate::parse_from_str(birth_date, "%Y-%m-%d")
            .map(|d| d.format("%Y-%m-%d").to_string() == birth_date)
            .unwrap_or(false);
        if !canonical_date {
            return Err(malformed(format!(
                "date of birth {birth_date:?} must be YYYY-MM-DD"
            )));
        }
        Ok(PersonVerification {
            name,
            birth_date: birth_date.to_owned(),
            birth_city: block.field("City of birth")?.to_owned(),
            birth_country: block.field("Country of birth")?.to_owned(),
            domain_owned: domain_field(block, "Owner of the domain")?,
            confidence: confidence_field(block)?,
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Description", PERSON_VERIFICATION_DESCRIPTION);
        out.field("Name", &self.name);
        out.field("Date of birth", &self.birth_date);
        out.field("City of birth", &self.birth_city);
        out.field("Country of birth", &self.birth_country);
        out.field("Owner of the domain", self.domain_owned.as_str());
        out.field("Confidence", self.confidence.as_str());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignPdf {
    pub description: String,
    pub pdf_hash: ContentHash,
}

impl SignPdf {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(SignPdf {
            description: block.field("Description")?.to_owned(),
            pdf_hash: hash_field(block, "PDF file hash")?,
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Description", &self.description);
        out.field("PDF file hash", self.pdf_hash.as_str());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Poll {
    pub voting_deadline: Timestamp,
    pub question: String,
    /// `options[0]` is written as `Option 1`.
    pub options: Vec<String>,
    /// Free text under `Who can vote:`; never evaluated.
    pub eligibility_description: String,
}

impl Poll {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        let deadline = block.field("Voting deadline")?;
        let voting_deadline = deadline
            .parse()
            .map_err(|_| malformed(format!("voting deadline {deadline:?} is not a timestamp")))?;
        let question = block.field("Poll")?.to_owned();
        let mut options = Vec::new();
        while block.at(&format!("Option {}", options.len() + 1)) {
            let name = format!("Option {}", options.len() + 1);
            options.push(block.field(&name)?.to_owned());
        }
        if let Some(line) = block.current().filter(|l| l.starts_with("Option ")) {
            return Err(malformed(format!(
                "poll options must be numbered 1, 2, ...: found {line:?} after option {}",
                options.len()
            )));
        }
        Self::check_options(&options).map_err(malformed)?;
        block.header("Who can vote")?;
        let eligibility_description = block.nested_field("Description")?.to_owned();
        Ok(Poll {
            voting_deadline,
            question,
            options,
            eligibility_description,
        })
    }

    fn check_options(options: &[String]) -> Result<(), String> {
        if options.len() < 2 || options.len() > MAX_POLL_OPTIONS {
            return Err(format!(
                "a poll needs 2 to {MAX_POLL_OPTIONS} options, found {}",
                options.len()
            ));
        }
        for (i, option) in options.iter().enumerate() {
            if options[..i].contains(option) {
                return Err(format!("duplicate poll option {option:?}"));
            }
        }
        Ok(())
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Voting deadline", &self.voting_deadline.to_string());
        out.field("Poll", &self.question);
        for (i, option) in self.options.iter().enumerate() {
            out.field(&format!("Option {}", i + 1), option);
        }
        out.header("Who can vote");
        out.nested_field("Description", &self.eligibility_description);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vote {
    pub poll_hash: ContentHash,
    /// Matched verbatim against the poll's option texts.
    pub option: String,
}

impl Vote {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(Vote {
            poll_hash: hash_field(block, "Poll hash")?,
            option: block.field("Option")?.to_owned(),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Poll hash", self.poll_hash.as_str());
        out.field("Option", &self.option);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Response {
    pub statement_hash: ContentHash,
    pub response_text: String,
}

impl Response {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(Response {
            statement_hash: hash_field(block, REFERENCED)?,
            response_text: block.field("Response")?.to_owned(),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field(REFERENCED, self.statement_hash.as_str());
        out.field("Response", &self.response_text);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Bounty {
    pub action_description: String,
    pub reward_description: String,
    pub judge: Option<String>,
}

impl Bounty {
    const ACTION: &'static str = "We will reward any entity that";
    const REWARD: &'static str = "The reward is";
    const JUDGE: &'static str = "In case of dispute, bounty claims are judged by";

    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(Bounty {
            action_description: block.field(Self::ACTION)?.to_owned(),
            reward_description: block.field(Self::REWARD)?.to_owned(),
            judge: block.optional(Self::JUDGE)?.map(str::to_owned),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field(Self::ACTION, &self.action_description);
        out.field(Self::REWARD, &self.reward_description);
        out.optional(Self::JUDGE, self.judge.as_deref());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Boycott {
    pub subject: String,
    pub description: String,
}

impl Boycott {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(Boycott {
            subject: block.field("Subject")?.to_owned(),
            description: block.field("Description")?.to_owned(),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Subject", &self.subject);
        out.field("Description", &self.description);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisputeAuthenticity {
    pub statement_hash: ContentHash,
}

impl DisputeAuthenticity {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(DisputeAuthenticity {
            statement_hash: hash_field(block, REFERENCED)?,
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field(REFERENCED, self.statement_hash.as_str());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DisputeContent {
    pub statement_hash: ContentHash,
    pub description: Option<String>,
}

impl DisputeContent {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        Ok(DisputeContent {
            statement_hash: hash_field(block, REFERENCED)?,
            description: block.optional("Description")?.map(str::to_owned),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field(REFERENCED, self.statement_hash.as_str());
        out.optional("Description", self.description.as_deref());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rating {
    pub subject_name: String,
    pub subject_domain: Domain,
    pub quality: String,
    /// 1 to 5.
    pub stars: u8,
    pub comment: Option<String>,
}

impl Rating {
    pub(crate) fn read(block: &mut Block<'_>) -> Result<Self, ContentError> {
        let subject_name = block.field("Subject name")?.to_owned();
        let subject_domain = domain_field(block, "Subject domain")?;
        let quality = block.field("Rated quality")?.to_owned();
        let rating = block.field("Our rating")?;
        let stars = match rating.as_bytes() {
            [n @ b'1'..=b'5', rest @ ..] if rest == b"/5 Stars" => *n - b'0',
            _ => {
                return Err(malformed(format!(
                    "rating {rating:?} must read \"<1-5>/5 Stars\""
                )))
            }
        };
        Ok(Rating {
            subject_name,
            subject_domain,
            quality,
            stars,
            comment: block.optional("Comment")?.map(str::to_owned),
        })
    }

    pub(crate) fn write(&self, out: &mut Writer) {
        out.field("Subject name", &self.subject_name);
        out.field("Subject domain", self.subject_domain.as_str());
        out.field("Rated quality", &self.quality);
        out.field("Our rating", &format!("{}/5 Stars", self.stars));
        out.optional("Comment", self.comment.as_deref());
    }
}
