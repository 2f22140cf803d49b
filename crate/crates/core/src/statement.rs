//! The statement envelope: parsing and byte-exact serialization.
//!
//! A statement is a fixed sequence of `Name: value` lines, the last of which
//! is `Statement content:`. Everything after that marker is the content
//! body and is kept verbatim. Two content layouts exist:
//!
//! * inline, `Statement content: <text>`, where the body is `<text>` plus
//!   any following lines;
//! * nested, `Statement content:` followed by tab-indented lines, where the
//!   body is stored with its leading newline (`"\n\tType: ...\n\t..."`).
//!
//! A body starting with `\n` is therefore always nested and any other body is
//! inline, which makes the mapping between texts and [`Statement`] values a
//! bijection.

use std::fmt;

use thiserror::Error;

use crate::domain::Domain;
use crate::hash::ContentHash;
use crate::time::Timestamp;

pub const FORMAT_VERSION: u32 = 4;

/// Upper bound on the UTF-8 size of one statement.
pub const MAX_STATEMENT_BYTES: usize = 64 * 1024;

const PUBLISHING_DOMAIN: &str = "Publishing domain";
const AUTHOR: &str = "Author";
const REPRESENTATIVE: &str = "Authorized signing representative";
const TIME: &str = "Time";
const TAGS: &str = "Tags";
const SUPERSEDED: &str = "Superseded statement";
const VERSION: &str = "Format version";
const CONTENT: &str = "Statement content";

/// Envelope fields in their only permitted order, with whether each is
/// required.
const FIELDS: [(&str, bool); 8] = [
    (PUBLISHING_DOMAIN, true),
    (AUTHOR, true),
    (REPRESENTATIVE, false),
    (TIME, true),
    (TAGS, false),
    (SUPERSEDED, false),
    (VERSION, true),
    (CONTENT, true),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub publishing_domain: Domain,
    pub author: String,
    pub representative: Option<String>,
    pub time: Timestamp,
    /// Empty means the `Tags` line is absent.
    pub tags: Vec<String>,
    pub superseded_statement: Option<ContentHash>,
    pub format_version: u32,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed envelope: {0}")]
    MalformedEnvelope(String),
    #[error("unsupported format version {0:?}")]
    UnsupportedVersion(String),
    #[error("invalid timestamp {0:?}")]
    InvalidTimestamp(String),
    #[error("invalid hash reference {0:?}")]
    InvalidHashReference(String),
    #[error("invalid publishing domain {0:?}")]
    InvalidDomain(String),
    #[error("blank line inside statement")]
    BlankLineInContent,
    #[error("statement ends with a newline")]
    TrailingNewline,
    #[error("carriage return found; line endings must be LF")]
    CarriageReturn,
    #[error("BOM present")]
    BomPresent,
    #[error("statement is {0} bytes, limit is {MAX_STATEMENT_BYTES}")]
    TooLarge(usize),
    #[error("text does not re-serialize to itself")]
    NonCanonical,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl Statement {
    /// A statement with only the required fields set.
    pub fn new(
        publishing_domain: Domain,
        author: impl Into<String>,
        time: Timestamp,
        content: impl Into<String>,
    ) -> Self {
        Statement {
            publishing_domain,
            author: author.into(),
            representative: None,
            time,
            tags: Vec::new(),
            superseded_statement: None,
            format_version: FORMAT_VERSION,
            content: content.into(),
        }
    }

    pub fn to_text(&self) -> Result<String, SerializeError> {
        serialize_statement(self)
    }

    pub fn hash(&self) -> Result<ContentHash, SerializeError> {
        Ok(ContentHash::of_bytes(self.to_text()?.as_bytes()))
    }

    /// `true` when the content body uses the tab-indented layout.
    pub fn is_nested(&self) -> bool {
        self.content.starts_with('\n')
    }
}

fn malformed(msg: impl Into<String>) -> ParseError {
    ParseError::MalformedEnvelope(msg.into())
}

fn check_value<'a>(name: &str, rest: &'a str) -> Result<&'a str, ParseError> {
    let value = rest
        .strip_prefix(' ')
        .ok_or_else(|| malformed(format!("expected \"{name}: <value>\"")))?;
    if value.is_empty() {
        return Err(malformed(format!("empty {name}")));
    }
    if value.trim() != value {
        return Err(malformed(format!("{name} has surrounding whitespace")));
    }
    Ok(value)
}

fn parse_tags(value: &str) -> Result<Vec<String>, ParseError> {
    let tags: Vec<String> = value.split(", ").map(str::to_owned).collect();
    let canonical = tags
        .iter()
        .all(|t| !t.is_empty() && !t.contains(',') && t.trim() == t);
    if !canonical {
        return Err(malformed(format!(
            "tags must be separated by \", \": {value:?}"
        )));
    }
    Ok(tags)
}

/// Parse one canonical statement text.
///
/// Only the canonical form is accepted: the field order is fixed, optional
/// fields are either absent or non-empty, line endings are LF, and the text
/// carries no trailing newline.
pub fn parse_statement(text: &str) -> Result<Statement, ParseError> {
    if text.len() > MAX_STATEMENT_BYTES {
        return Err(ParseError::TooLarge(text.len()));
    }
    if text.starts_with('\u{feff}') {
        return Err(ParseError::BomPresent);
    }
    if text.contains('\r') {
        return Err(ParseError::CarriageReturn);
    }
    if text.contains("\n\n") {
        return Err(ParseError::BlankLineInContent);
    }
    if text.ends_with('\n') {
        return Err(ParseError::TrailingNewline);
    }

    let mut publishing_domain = None;
    let mut author = None;
    let mut representative = None;
    let mut time = None;
    let mut tags = Vec::new();
    let mut superseded_statement = None;
    let mut format_version = None;

    // Index into FIELDS of the next field allowed to appear.
    let mut next = 0usize;
    let mut rest = text;
    loop {
        let (line, remainder) = match rest.split_once('\n') {
            Some((line, remainder)) => (line, Some(remainder)),
            None => (rest, None),
        };
        let (name, after) = line
            .split_once(':')
            .ok_or_else(|| malformed(format!("line is not a field: {line:?}")))?;
        let position = FIELDS
            .iter()
            .position(|(field, _)| *field == name)
            .ok_or_else(|| malformed(format!("unknown field {name:?}")))?;
        if position < next {
            return Err(malformed(if position == next - 1 {
                format!("duplicate field {name:?}")
            } else {
                format!("field {name:?} out of order")
            }));
        }
        if let Some((missing, _)) = FIELDS[next..position].iter().find(|(_, req)| *req) {
            return Err(malformed(format!("missing field {missing:?}")));
        }
        next = position + 1;

        if name == CONTENT {
            let content = match (after, remainder) {
                ("", Some(body)) => format!("\n{body}"),
                ("", None) => return Err(malformed("empty statement content")),
                (inline, remainder) => {
                    let inline = inline
                        .strip_prefix(' ')
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| {
                            malformed("expected \"Statement content: <text>\" or a nested block")
                        })?;
                    match remainder {
                        Some(body) => format!("{inline}\n{body}"),
                        None => inline.to_owned(),
                    }
                }
            };
            let statement = Statement {
                publishing_domain: publishing_domain.expect("required field checked"),
                author: author.expect("required field checked"),
                representative,
                time: time.expect("required field checked"),
                tags,
                superseded_statement,
                format_version: format_version.expect("required field checked"),
                content,
            };
            return Ok(statement);
        }

        let value = check_value(name, after)?;
        match name {
            PUBLISHING_DOMAIN => {
                publishing_domain = Some(
                    value
                        .parse::<Domain>()
                        .map_err(|_| ParseError::InvalidDomain(value.to_owned()))?,
                )
            }
            AUTHOR => author = Some(value.to_owned()),
            REPRESENTATIVE => representative = Some(value.to_owned()),
            TIME => {
                time = Some(
                    value
                        .parse::<Timestamp>()
                        .map_err(|_| ParseError::InvalidTimestamp(value.to_owned()))?,
                )
            }
            TAGS => tags = parse_tags(value)?,
            SUPERSEDED => {
                superseded_statement = Some(
                    value
                        .parse::<ContentHash>()
                        .map_err(|_| ParseError::InvalidHashReference(value.to_owned()))?,
                )
            }
            VERSION => {
                if value != "4" {
                    return Err(ParseError::UnsupportedVersion(value.to_owned()));
                }
                format_version = Some(FORMAT_VERSION);
            }
            _ => unreachable!("all envelope fields handled"),
        }

        rest = remainder.ok_or_else(|| malformed("missing field \"Statement content\""))?;
    }
}

fn check_line(name: &str, value: &str) -> Result<(), SerializeError> {
    let violation = |why: &str| Err(SerializeError::InvariantViolation(format!("{name} {why}")));
    if value.is_empty() {
        return violation("is empty");
    }
    if value.contains('\n') || value.contains('\r') {
        return violation("contains a line break");
    }
    if value.trim() != value {
        return violation("has surrounding whitespace");
    }
    Ok(())
}

/// Emit the unique canonical text of a statement.
pub fn serialize_statement(s: &Statement) -> Result<String, SerializeError> {
    let violation = |why: String| Err(SerializeError::InvariantViolation(why));
    if s.format_version != FORMAT_VERSION {
        return violation(format!("format version {} is not 4", s.format_version));
    }
    check_line(AUTHOR, &s.author)?;
    if let Some(rep) = &s.representative {
        check_line(REPRESENTATIVE, rep)?;
    }
    for tag in &s.tags {
        check_line(TAGS, tag)?;
        if tag.contains(',') {
            return violation(format!("tag {tag:?} contains a comma"));
        }
    }
    let content = &s.content;
    if content.is_empty() || content == "\n" {
        return violation("statement content is empty".into());
    }
    if content.contains("\n\n") {
        return violation("statement content contains a blank line".into());
    }
    if content.ends_with('\n') {
        return violation("statement content ends with a newline".into());
    }
    if content.contains('\r') {
        return violation("statement content contains a carriage return".into());
    }

    let mut out = String::with_capacity(content.len() + 256);
    out.push_str(&format!("{PUBLISHING_DOMAIN}: {}\n", s.publishing_domain));
    out.push_str(&format!("{AUTHOR}: {}\n", s.author));
    if let Some(rep) = &s.representative {
        out.push_str(&format!("{REPRESENTATIVE}: {rep}\n"));
    }
    out.push_str(&format!("{TIME}: {}\n", s.time));
    if !s.tags.is_empty() {
        out.push_str(&format!("{TAGS}: {}\n", s.tags.join(", ")));
    }
    if let Some(h) = &s.superseded_statement {
        out.push_str(&format!("{SUPERSEDED}: {h}\n"));
    }
    out.push_str(&format!("{VERSION}: {FORMAT_VERSION}\n"));
    if s.is_nested() {
        out.push_str(&format!("{CONTENT}:{content}"));
    } else {
        out.push_str(&format!("{CONTENT}: {content}"));
    }
    if out.len() > MAX_STATEMENT_BYTES {
        return violation(format!("statement is {} bytes", out.len()));
    }
    Ok(out)
}

/// Parse `text` and confirm it is the canonical rendering of the result.
pub fn ensure_canonical(text: &str) -> Result<Statement, ParseError> {
    let statement = parse_statement(text)?;
    match serialize_statement(&statement) {
        Ok(again) if again == text => Ok(statement),
        _ => Err(ParseError::NonCanonical),
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match serialize_statement(self) {
            Ok(text) => f.write_str(&text),
            Err(_) => Err(fmt::Error),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SIGN_PDF: &str = "Publishing domain: example.gov
Author: Ministry of Foreign Affairs
Time: 2027-01-01T10:30:00Z
Format version: 4
Statement content:
\tType: Sign PDF
\tDescription: We hereby digitally sign the referenced PDF file.
\tPDF file hash: qg51IiW3RKIXSxiaF_hVQdZdtHzKsU4YePxFuZ2YVtQ";

    #[test]
    fn parses_sign_pdf_example() {
        let s = parse_statement(SIGN_PDF).unwrap();
        assert_eq!(s.publishing_domain.as_str(), "example.gov");
        assert_eq!(s.author, "Ministry of Foreign Affairs");
        assert_eq!(s.time.to_string(), "2027-01-01T10:30:00Z");
        assert_eq!(s.format_version, 4);
        assert!(s.content.starts_with("\n\tType: Sign PDF\n"));
        assert_eq!(serialize_statement(&s).unwrap(), SIGN_PDF);
    }

    #[test]
    fn version_gate() {
        let text = SIGN_PDF.replace("Format version: 4", "Format version: 3");
        assert_eq!(
            parse_statement(&text),
            Err(ParseError::UnsupportedVersion("3".into()))
        );
    }

    #[test]
    fn reordered_fields() {
        let text = "Publishing domain: example.gov
Time: 2027-01-01T10:30:00Z
Author: Ministry of Foreign Affairs
Format version: 4
Statement content: hi";
        assert!(matches!(
            parse_statement(text),
            Err(ParseError::MalformedEnvelope(_))
        ));
    }

    #[test]
    fn duplicate_unknown_and_missing_fields() {
        let dup = SIGN_PDF.replace("Author: Ministry", "Author: X\nAuthor: Ministry");
        let unknown = SIGN_PDF.replace("Time:", "Mood: fine\nTime:");
        let missing = SIGN_PDF.replace("Author: Ministry of Foreign Affairs\n", "");
        for text in [dup, unknown, missing] {
            let err = parse_statement(&text).unwrap_err();
            assert!(matches!(err, ParseError::MalformedEnvelope(_)), "{err}");
        }
    }

    #[test]
    fn empty_optional_field_is_rejected() {
        let text = SIGN_PDF.replace("Time:", "Tags: \nTime:");
        assert!(parse_statement(&text).is_err());
        let text = SIGN_PDF.replace("Format version", "Tags:\nFormat version");
        assert!(parse_statement(&text).is_err());
    }

    #[test]
    fn line_ending_and_blank_line_rules() {
        assert_eq!(
            parse_statement(&SIGN_PDF.replace('\n', "\r\n")),
            Err(ParseError::CarriageReturn)
        );
        assert_eq!(
            parse_statement(&format!("{SIGN_PDF}\n")),
            Err(ParseError::TrailingNewline)
        );
        assert_eq!(
            parse_statement(&SIGN_PDF.replace("\tDescription", "\n\tDescription")),
            Err(ParseError::BlankLineInContent)
        );
        assert_eq!(
            parse_statement(&format!("\u{feff}{SIGN_PDF}")),
            Err(ParseError::BomPresent)
        );
    }

    #[test]
    fn bad_references() {
        let text = SIGN_PDF.replace(
            "Format version",
            "Superseded statement: not-a-hash\nFormat version",
        );
        assert!(matches!(
            parse_statement(&text),
            Err(ParseError::InvalidHashReference(_))
        ));
        let text = SIGN_PDF.replace("10:30:00Z", "10:30:00+01:00");
        assert!(matches!(
            parse_statement(&text),
            Err(ParseError::InvalidTimestamp(_))
        ));
        let text = SIGN_PDF.replace("example.gov", "Example.gov");
        assert!(matches!(
            parse_statement(&text),
            Err(ParseError::InvalidDomain(_))
        ));
    }

    #[test]
    fn tags_line() {
        let mut s = parse_statement(SIGN_PDF).unwrap();
        s.tags = vec!["iaea".into(), "sanctions".into()];
        let text = serialize_statement(&s).unwrap();
        assert!(text
            .contains("\nTime: 2027-01-01T10:30:00Z\nTags: iaea, sanctions\nFormat version: 4\n"));
        assert_eq!(parse_statement(&text).unwrap(), s);
        assert!(parse_statement(&text.replace("iaea, sanctions", "iaea,sanctions")).is_err());
    }

    #[test]
    fn inline_content() {
        let text = "Publishing domain: example.gov
Author: A
Time: 2027-01-01T10:30:00Z
Format version: 4
Statement content: Hello world
second line";
        let s = parse_statement(text).unwrap();
        assert_eq!(s.content, "Hello world\nsecond line");
        assert!(!s.is_nested());
        assert_eq!(serialize_statement(&s).unwrap(), text);
        assert!(parse_statement(&text.replace("content: Hello", "content:Hello")).is_err());
        assert!(parse_statement("Publishing domain: example.gov\nAuthor: A\nTime: 2027-01-01T10:30:00Z\nFormat version: 4\nStatement content:").is_err());
    }

    #[test]
    fn serialize_rejects_invariant_violations() {
        let mut s = parse_statement(SIGN_PDF).unwrap();
        s.author = "Two\nlines".into();
        assert!(serialize_statement(&s).is_err());
        let mut s = parse_statement(SIGN_PDF).unwrap();
        s.author = String::new();
        assert!(serialize_statement(&s).is_err());
        let mut s = parse_statement(SIGN_PDF).unwrap();
        s.representative = Some(String::new());
        assert!(serialize_statement(&s).is_err());
        let mut s = parse_statement(SIGN_PDF).unwrap();
        s.content = "a\n\nb".into();
        assert!(serialize_statement(&s).is_err());
    }

    #[test]
    fn oversize() {
        let big = format!("{SIGN_PDF}{}", "x".repeat(MAX_STATEMENT_BYTES));
        assert!(matches!(
            parse_statement(&big),
            Err(ParseError::TooLarge(_))
        ));
    }
}
