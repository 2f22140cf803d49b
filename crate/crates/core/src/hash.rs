//! Content hashes: URL-safe, unpadded base64 of a SHA-256 digest.

use std::fmt;
use std::str::FromStr;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::statement::{self, ParseError};

/// Length of an encoded hash: 32 bytes → ceil(32 * 4 / 3) characters.
pub const HASH_LEN: usize = 43;

/// The universal reference key of the protocol.
///
/// Always exactly 43 characters over `[A-Za-z0-9_-]`, decoding to 32 bytes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash(String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid content hash {0:?}: expected 43 characters of URL-safe base64")]
pub struct InvalidHash(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HashError {
    #[error("statement text is not canonical: {0}")]
    NonCanonicalInput(#[from] ParseError),
}

impl ContentHash {
    /// Hash arbitrary bytes (statements, PDF files).
    pub fn of_bytes(bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        ContentHash(URL_SAFE_NO_PAD.encode(digest))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn digest(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        // Validated on construction.
        let bytes = URL_SAFE_NO_PAD.decode(&self.0).expect("validated hash");
        out.copy_from_slice(&bytes);
        out
    }
}

impl FromStr for ContentHash {
    type Err = InvalidHash;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() != HASH_LEN
            || !s
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
        {
            return Err(InvalidHash(s.to_owned()));
        }
        // 43 chars carry 258 bits; the last character must leave the two
        // spare bits zero or the text is not the canonical encoding.
        match URL_SAFE_NO_PAD.decode(s) {
            Ok(bytes) if bytes.len() == 32 && URL_SAFE_NO_PAD.encode(&bytes) == s => {
                Ok(ContentHash(s.to_owned()))
            }
            _ => Err(InvalidHash(s.to_owned())),
        }
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({})", self.0)
    }
}

impl AsRef<str> for ContentHash {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hash a canonical statement text.
///
/// The text must be exactly what [`statement::serialize_statement`] would
/// produce for its parsed form; anything else is rejected rather than
/// silently hashed, since a non-canonical text would never be referenced by
/// other implementations.
pub fn hash_statement(text: &str) -> Result<ContentHash, HashError> {
    statement::ensure_canonical(text)?;
    Ok(ContentHash::of_bytes(text.as_bytes()))
}
