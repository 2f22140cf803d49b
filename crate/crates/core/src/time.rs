use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// A UTC instant with second precision, written `YYYY-MM-DDTHH:MM:SSZ`.
///
/// Only this single ISO 8601 profile is accepted, so every instant has
/// exactly one textual form.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid timestamp {0:?}: expected YYYY-MM-DDTHH:MM:SSZ")]
pub struct InvalidTimestamp(pub String);

impl Timestamp {
    pub fn from_datetime(dt: DateTime<Utc>) -> Self {
        // Sub-second precision has no textual form.
        Timestamp(DateTime::from_timestamp(dt.timestamp(), 0).expect("in range"))
    }

    pub fn from_unix(secs: i64) -> Option<Self> {
        DateTime::from_timestamp(secs, 0).map(Timestamp)
    }

    pub fn now() -> Self {
        Self::from_datetime(Utc::now())
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn as_datetime(&self) -> DateTime<Utc> {
        self.0
    }
}

impl FromStr for Timestamp {
    type Err = InvalidTimestamp;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || InvalidTimestamp(s.to_owned());
        if s.len() != 20 {
            return Err(err());
        }
        let naive = NaiveDateTime::parse_from_str(s, FORMAT).map_err(|_| err())?;
        let ts = Timestamp(naive.and_utc());
        // chrono tolerates some variations (e.g. unpadded fields); insist on
        // the single canonical rendering.
        if ts.to_string() != s {
            return Err(err());
        }
        Ok(ts)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(FORMAT))
    }
}

impl fmt::Debug for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Timestamp({self})")
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
