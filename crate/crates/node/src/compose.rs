//! Building canonical statements from loose form fields, shared by the CLI
//! `new` command and the compose endpoint the web console previews against.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use stated_core::content::*;
use stated_core::{serialize_content, ContentHash, Domain, Statement, Timestamp, TypedContent};
use thiserror::Error;

/// Type names accepted on the command line, with their labels.
pub const TYPE_NAMES: &[(&str, &str)] = &[
    ("plain", label::PLAIN),
    (
        "organisation-verification",
        label::ORGANISATION_VERIFICATION,
    ),
    ("person-verification", label::PERSON_VERIFICATION),
    ("sign-pdf", label::SIGN_PDF),
    ("poll", label::POLL),
    ("vote", label::VOTE),
    ("response", label::RESPONSE),
    ("bounty", label::BOUNTY),
    ("boycott", label::BOYCOTT),
    ("dispute-authenticity", label::DISPUTE_AUTHENTICITY),
    ("dispute-content", label::DISPUTE_CONTENT),
    ("rating", label::RATING),
];

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{}: {message}", field.as_deref().unwrap_or("statement"))]
pub struct ComposeError {
    /// The offending form field, if the error is attributable to one.
    pub field: Option<String>,
    pub message: String,
}

fn err(field: &str, message: impl Into<String>) -> ComposeError {
    ComposeError {
        field: Some(field.to_owned()),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ComposeRequest {
    /// CLI type name (`sign-pdf`) or label (`Sign PDF`).
    #[serde(rename = "type")]
    pub type_name: String,
    pub domain: String,
    pub author: String,
    #[serde(default)]
    pub representative: Option<String>,
    /// Defaults to the current time.
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub superseded_statement: Option<String>,
    /// Field name to values; only `option` (poll options) may repeat.
    #[serde(default)]
    pub fields: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Composed {
    pub text: String,
    pub hash: ContentHash,
}

pub fn label_for(type_name: &str) -> Option<&'static str> {
    TYPE_NAMES
        .iter()
        .find(|(n, l)| *n == type_name || l.eq_ignore_ascii_case(type_name))
        .map(|(_, l)| *l)
}

struct Fields<'a>(&'a BTreeMap<String, Vec<String>>);

impl Fields<'_> {
    fn opt(&self, name: &str) -> Result<Option<String>, ComposeError> {
        match self.0.get(name).map(Vec::as_slice) {
            None | Some([]) => Ok(None),
            Some([v]) => Ok(Some(v.clone())),
            Some(_) => Err(err(name, "given more than once")),
        }
    }

    fn req(&self, name: &str) -> Result<String, ComposeError> {
        self.opt(name)?.ok_or_else(|| err(name, "required"))
    }

    fn parsed<T: FromStr>(&self, name: &str) -> Result<T, ComposeError>
    where
        T::Err: std::fmt::Display,
    {
        self.req(name)?
            .parse()
            .map_err(|e: T::Err| err(name, e.to_string()))
    }

    fn all(&self, name: &str) -> Vec<String> {
        self.0.get(name).cloned().unwrap_or_default()
    }
}

pub fn build_content(
    type_name: &str,
    fields: &BTreeMap<String, Vec<String>>,
) -> Result<TypedContent, ComposeError> {
    let f = Fields(fields);
    let label =
        label_for(type_name).ok_or_else(|| err("type", format!("unknown type {type_name:?}")))?;
    let known: &[&str] = match label {
        label::PLAIN => &["text"],
        label::ORGANISATION_VERIFICATION => &[
            "name",
            "country",
            "legal_form",
            "domain_owned",
            "confidence",
        ],
        label::PERSON_VERIFICATION => &[
            "name",
            "birth_date",
            "birth_city",
            "birth_country",
            "domain_owned",
            "confidence",
        ],
        label::SIGN_PDF => &["description", "pdf_hash"],
        label::POLL => &[
            "voting_deadline",
            "question",
            "option",
            "eligibility_description",
        ],
        label::VOTE => &["poll_hash", "option"],
        label::RESPONSE => &["statement_hash", "response_text"],
        label::BOUNTY => &["action_description", "reward_description", "judge"],
        label::BOYCOTT => &["subject", "description"],
        label::DISPUTE_AUTHENTICITY => &["statement_hash"],
        label::DISPUTE_CONTENT => &["statement_hash", "description"],
        label::RATING => &[
            "subject_name",
            "subject_domain",
            "quality",
            "stars",
            "comment",
        ],
        _ => unreachable!("label_for returns known labels"),
    };
    if let Some(extra) = fields.keys().find(|k| !known.contains(&k.as_str())) {
        return Err(err(extra, format!("not a field of {label}")));
    }
    let content = match label {
        label::PLAIN => TypedContent::plain(f.req("text")?),
        label::ORGANISATION_VERIFICATION => {
            TypedContent::OrganisationVerification(OrganisationVerification {
                name: f.req("name")?,
                country: f.req("country")?,
                legal_form: f.req("legal_form")?,
                domain_owned: f.parsed("domain_owned")?,
                confidence: f.parsed("confidence")?,
            })
        }
        label::PERSON_VERIFICATION => TypedContent::PersonVerification(PersonVerification {
            name: f.req("name")?,
            birth_date: f.req("birth_date")?,
            birth_city: f.req("birth_city")?,
            birth_country: f.req("birth_country")?,
            domain_owned: f.parsed("domain_owned")?,
            confidence: f.parsed("confidence")?,
        }),
        label::SIGN_PDF => TypedContent::SignPdf(SignPdf {
            description: f.req("description")?,
            pdf_hash: f.parsed("pdf_hash")?,
        }),
        label::POLL => TypedContent::Poll(Poll {
            voting_deadline: f.parsed("voting_deadline")?,
            question: f.req("question")?,
            options: f.all("option"),
            eligibility_description: f.req("eligibility_description")?,
        }),
        label::VOTE => TypedContent::Vote(Vote {
            poll_hash: f.parsed("poll_hash")?,
            option: f.req("option")?,
        }),
        label::RESPONSE => TypedContent::Response(Response {
            statement_hash: f.parsed("statement_hash")?,
            response_text: f.req("response_text")?,
        }),
        label::BOUNTY => TypedContent::Bounty(Bounty {
            action_description: f.req("action_description")?,
            reward_description: f.req("reward_description")?,
            judge: f.opt("judge")?,
        }),
        label::BOYCOTT => TypedContent::Boycott(Boycott {
            subject: f.req("subject")?,
            description: f.req("description")?,
        }),
        label::DISPUTE_AUTHENTICITY => TypedContent::DisputeAuthenticity(DisputeAuthenticity {
            statement_hash: f.parsed("statement_hash")?,
        }),
        label::DISPUTE_CONTENT => TypedContent::DisputeContent(DisputeContent {
            statement_hash: f.parsed("statement_hash")?,
            description: f.opt("description")?,
        }),
        _ => TypedContent::Rating(Rating {
            subject_name: f.req("subject_name")?,
            subject_domain: f.parsed("subject_domain")?,
            quality: f.req("quality")?,
            stars: f.parsed("stars")?,
            comment: f.opt("comment")?,
        }),
    };
    Ok(content)
}

/// Builds, serializes and re-validates a statement.
pub fn compose(req: &ComposeRequest) -> Result<Composed, ComposeError> {
    let content = build_content(&req.type_name, &req.fields)?;
    let body = serialize_content(&content).map_err(|e| ComposeError {
        field: None,
        message: e.to_string(),
    })?;
    let domain = Domain::from_str(&req.domain).map_err(|e| err("domain", e.to_string()))?;
    let time = match &req.time {
        Some(t) => t
            .parse()
            .map_err(|e: stated_core::time::InvalidTimestamp| err("time", e.to_string()))?,
        None => Timestamp::now(),
    };
    let mut statement = Statement::new(domain, req.author.clone(), time, body);
    statement.representative = req.representative.clone();
    statement.tags = req.tags.clone();
    statement.superseded_statement = req
        .superseded_statement
        .as_deref()
        .map(|h| {
            h.parse()
                .map_err(|e: stated_core::InvalidHash| err("superseded_statement", e.to_string()))
        })
        .transpose()?;
    let text = statement.to_text().map_err(|e| ComposeError {
        field: None,
        message: e.to_string(),
    })?;
    let hash = stated_core::hash_statement(&text).map_err(|e| ComposeError {
        field: None,
        message: e.to_string(),
    })?;
    Ok(Composed { text, hash })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields(pairs: &[(&str, &str)]) -> BTreeMap<String, Vec<String>> {
        let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (k, v) in pairs {
            m.entry(k.to_string()).or_default().push(v.to_string());
        }
        m
    }

    #[test]
    fn sign_pdf_matches_golden_hash() {
        let req = ComposeRequest {
            type_name: "sign-pdf".into(),
            domain: "example.gov".into(),
            author: "Ministry of Foreign Affairs".into(),
            time: Some("2027-01-01T10:30:00Z".into()),
            fields: fields(&[
                (
                    "description",
                    "We hereby digitally sign the referenced PDF file.",
                ),
                ("pdf_hash", "qg51IiW3RKIXSxiaF_hVQdZdtHzKsU4YePxFuZ2YVtQ"),
            ]),
            ..Default::default()
        };
        assert_eq!(
            compose(&req).unwrap().hash.as_str(),
            "5rMSms8d0xPieom7erVnHKFj2UykehiWIc0mmH48h5c"
        );
    }

    #[test]
    fn field_errors_name_the_field() {
        let e = build_content(
            "organisation-verification",
            &fields(&[
                ("name", "A"),
                ("country", "B"),
                ("legal_form", "C"),
                ("domain_owned", "a.example"),
                ("confidence", "1.3"),
            ]),
        )
        .unwrap_err();
        assert_eq!(e.field.as_deref(), Some("confidence"));
        let e =
            build_content("vote", &fields(&[("option", "Yes"), ("colour", "red")])).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("colour"));
        let e = build_content("vote", &fields(&[("option", "Yes")])).unwrap_err();
        assert_eq!(e.field.as_deref(), Some("poll_hash"));
    }

    #[test]
    fn poll_with_too_few_options_is_rejected() {
        let req = ComposeRequest {
            type_name: "poll".into(),
            domain: "example.gov".into(),
            author: "A".into(),
            time: Some("2027-01-01T10:30:00Z".into()),
            fields: fields(&[
                ("voting_deadline", "2027-02-01T00:00:00Z"),
                ("question", "Q?"),
                ("option", "Only"),
                ("eligibility_description", "Everyone"),
            ]),
            ..Default::default()
        };
        assert!(compose(&req).unwrap_err().field.is_none());
    }
}
