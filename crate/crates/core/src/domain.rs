use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A DNS hostname in its serialized form: lowercase ASCII (punycode for
/// internationalized names), no scheme, no port, no trailing dot.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Domain(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid domain {0:?}")]
pub struct InvalidDomain(pub String);

impl Domain {
    /// Convert user input (mixed case, Unicode labels, trailing dot) to the
    /// serialized form.
    pub fn normalize(input: &str) -> Result<Self, InvalidDomain> {
        let trimmed = input.trim().trim_end_matches('.');
        let ascii =
            idna::domain_to_ascii_strict(trimmed).map_err(|_| InvalidDomain(input.to_owned()))?;
        ascii.parse()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `true` when `self` equals `other` or is a subdomain of it.
    pub fn is_within(&self, other: &Domain) -> bool {
        self.0 == other.0
            || (self.0.len() > other.0.len()
                && self.0.ends_with(&other.0)
                && self.0.as_bytes()[self.0.len() - other.0.len() - 1] == b'.')
    }
}

fn valid_label(label: &str) -> bool {
    !label.is_empty()
        && label.len() <= 63
        && !label.starts_with('-')
        && !label.ends_with('-')
        && label
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

impl FromStr for Domain {
    type Err = InvalidDomain;

    /// Accepts only the already-normalized form.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || s.len() > 253 || !s.split('.').all(valid_label) {
            return Err(InvalidDomain(s.to_owned()));
        }
        Ok(Domain(s.to_owned()))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Domain({})", self.0)
    }
}

impl AsRef<str> for Domain {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for Domain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Domain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
