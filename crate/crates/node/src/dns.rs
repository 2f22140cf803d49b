//! Cross-checking statement hashes against DNS TXT records published at
//! `stated.<domain>`.

use std::collections::HashMap;

use async_trait::async_trait;
use hickory_resolver::TokioResolver;
use serde::Serialize;
use stated_core::{ContentHash, Domain};

pub const TXT_PREFIX: &str = "stated";

pub fn txt_name(domain: &Domain) -> String {
    format!("{TXT_PREFIX}.{domain}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxtError {
    /// The name exists but carries no TXT records.
    NoRecords,
    /// NXDOMAIN, timeout, or any other resolver failure.
    Failed(String),
}

#[async_trait]
pub trait TxtLookup: Send + Sync {
    /// All TXT strings at `name`. A record split into several
    /// character-strings is returned joined.
    async fn txt(&self, name: &str) -> Result<Vec<String>, TxtError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", content = "detail", rename_all = "kebab-case")]
pub enum DnsVerification {
    Confirmed,
    Absent,
    DnsError(String),
}

/// Confirmed iff some TXT string at `stated.<domain>` equals `h`.
pub async fn verify_dns_txt(
    resolver: &dyn TxtLookup,
    domain: &Domain,
    h: &ContentHash,
) -> DnsVerification {
    match resolver.txt(&txt_name(domain)).await {
        Ok(strings) if strings.iter().any(|s| s.trim() == h.as_str()) => DnsVerification::Confirmed,
        Ok(_) | Err(TxtError::NoRecords) => DnsVerification::Absent,
        Err(TxtError::Failed(e)) => DnsVerification::DnsError(e),
    }
}

/// The system resolver.
pub struct SystemResolver {
    inner: TokioResolver,
}

impl SystemResolver {
    pub fn new() -> Result<Self, String> {
        let inner = TokioResolver::builder_tokio()
            .map_err(|e| e.to_string())?
            .build();
        Ok(SystemResolver { inner })
    }
}

#[async_trait]
impl TxtLookup for SystemResolver {
    async fn txt(&self, name: &str) -> Result<Vec<String>, TxtError> {
        // A trailing dot keeps search domains out of the query.
        match self.inner.txt_lookup(format!("{name}.")).await {
            Ok(lookup) => Ok(lookup
                .iter()
                .map(|txt| {
                    txt.txt_data()
                        .iter()
                        .map(|part| String::from_utf8_lossy(part).into_owned())
                        .collect::<String>()
                })
                .collect()),
            Err(e) if e.is_nx_domain() => Err(TxtError::Failed(format!("NXDOMAIN: {e}"))),
            Err(e) if e.is_no_records_found() => Err(TxtError::NoRecords),
            Err(e) => Err(TxtError::Failed(e.to_string())),
        }
    }
}

/// Fixed answers, for tests and offline runs. Names not present are NXDOMAIN.
#[derive(Debug, Clone, Default)]
pub struct StaticTxt {
    pub records: HashMap<String, Vec<String>>,
}

impl StaticTxt {
    pub fn with(mut self, name: impl Into<String>, values: &[&str]) -> Self {
        self.records
            .insert(name.into(), values.iter().map(|s| s.to_string()).collect());
        self
    }
}

#[async_trait]
impl TxtLookup for StaticTxt {
    async fn txt(&self, name: &str) -> Result<Vec<String>, TxtError> {
        match self.records.get(name) {
            Some(v) if v.is_empty() => Err(TxtError::NoRecords),
            Some(v) => Ok(v.clone()),
            None => Err(TxtError::Failed(format!("NXDOMAIN: {name}"))),
        }
    }
}
