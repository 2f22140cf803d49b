//! HTTPS retrieval of statements and PDFs from publishing domains.

use std::collections::HashMap;
use std::net::IpAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use reqwest::redirect;
use serde::{Deserialize, Serialize};
use stated_core::{split_statement_file, ContentHash, Domain, FileError, StatementFile};
use thiserror::Error;
use tokio::sync::{mpsc, Semaphore};
use url::Url;

pub const STATEMENTS_PATH: &str = "/.well-known/statements.txt";

pub fn statement_path(h: &ContentHash) -> String {
    format!("/.well-known/statements/{h}.txt")
}

pub fn pdf_path(h: &ContentHash) -> String {
    format!("/files/{h}.pdf")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchConfig {
    pub max_file_bytes: usize,
    pub max_pdf_bytes: usize,
    #[serde(with = "secs")]
    pub timeout: Duration,
    pub max_redirects: usize,
    /// Minimum time between two polls of one domain's `statements.txt`.
    #[serde(with = "secs")]
    pub min_poll_interval: Duration,
    /// Upper bound on domains fetched in parallel.
    pub max_parallel: usize,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            max_file_bytes: 5 * 1024 * 1024,
            max_pdf_bytes: 32 * 1024 * 1024,
            timeout: Duration::from_secs(30),
            max_redirects: 2,
            min_poll_interval: Duration::from_secs(600),
            max_parallel: 8,
        }
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_secs())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_secs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("network error: {0}")]
    Network(String),
    #[error("unexpected HTTP status {0}")]
    BadStatus(u16),
    #[error("wrong content type: {0:?}")]
    WrongContentType(String),
    #[error("body larger than {limit} bytes")]
    BodyTooLarge { limit: usize },
    #[error(transparent)]
    File(#[from] FileError),
    #[error("hash mismatch: expected {expected}, got {actual}")]
    HashMismatch {
        expected: ContentHash,
        actual: ContentHash,
    },
    /// The body hashes correctly but is not exactly one canonical statement.
    #[error("body is not a single canonical statement")]
    NotCanonical,
    #[error("refusing non-HTTPS URL {0}")]
    InsecureScheme(String),
    #[error("polled {domain} {elapsed_secs}s ago; minimum interval not reached")]
    TooSoon { domain: Domain, elapsed_secs: u64 },
}

impl FetchError {
    /// Stable short name of the error class, used in reports.
    pub fn class(&self) -> &'static str {
        match self {
            FetchError::Network(_) => "network-error",
            FetchError::BadStatus(_) => "bad-status",
            FetchError::WrongContentType(_) => "wrong-content-type",
            FetchError::BodyTooLarge { .. } => "body-too-large",
            FetchError::File(FileError::InvalidUtf8(_)) => "invalid-utf8",
            FetchError::File(FileError::BomPresent) => "bom-present",
            FetchError::File(FileError::CarriageReturn(_)) => "carriage-return",
            FetchError::HashMismatch { .. } => "hash-mismatch",
            FetchError::NotCanonical => "not-canonical",
            FetchError::InsecureScheme(_) => "insecure-scheme",
            FetchError::TooSoon { .. } => "too-soon",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FetchMeta {
    pub url: String,
    pub status: u16,
    pub duration_ms: u64,
    pub bytes: usize,
    /// The response arrived over HTTPS with a certificate that passed
    /// verification (reqwest refuses invalid certificates).
    pub tls: bool,
}

/// `text/plain` with a `charset=utf-8` parameter, compared case-insensitively.
pub fn is_plain_utf8(content_type: &str) -> bool {
    let mut parts = content_type.split(';');
    let mime = parts.next().unwrap_or("").trim();
    if !mime.eq_ignore_ascii_case("text/plain") {
        return false;
    }
    parts.any(|p| {
        let Some((k, v)) = p.split_once('=') else {
            return false;
        };
        let v = v.trim().trim_matches('"');
        k.trim().eq_ignore_ascii_case("charset") && v.eq_ignore_ascii_case("utf-8")
    })
}

fn is_loopback(url: &Url) -> bool {
    match url.host() {
        Some(url::Host::Ipv4(ip)) => IpAddr::V4(ip).is_loopback(),
        Some(url::Host::Ipv6(ip)) => IpAddr::V6(ip).is_loopback(),
        Some(url::Host::Domain(d)) => d == "localhost",
        None => false,
    }
}

fn scheme_allowed(url: &Url) -> bool {
    url.scheme() == "https" || (url.scheme() == "http" && is_loopback(url))
}

/// Same host, or one host a subdomain of the other (`www.` redirects).
fn same_site(a: &Url, b: &Url) -> bool {
    match (a.host_str(), b.host_str()) {
        (Some(x), Some(y)) => {
            let (x, y) = (x.to_ascii_lowercase(), y.to_ascii_lowercase());
            x == y || x.ends_with(&format!(".{y}")) || y.ends_with(&format!(".{x}"))
        }
        _ => false,
    }
}

/// Per-domain serialization and poll spacing.
#[derive(Default)]
struct Politeness {
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    polled: Mutex<HashMap<Domain, Instant>>,
}

impl Politeness {
    fn lock_for(&self, host: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|p| p.into_inner());
        locks.entry(host.to_owned()).or_default().clone()
    }
}

#[derive(Debug)]
pub struct FetchEvent {
    pub domain: Domain,
    pub result: Result<(StatementFile, FetchMeta), FetchError>,
}

pub struct Fetcher {
    client: reqwest::Client,
    config: FetchConfig,
    overrides: HashMap<Domain, Url>,
    politeness: Politeness,
}

impl Fetcher {
    pub fn new(config: FetchConfig) -> Self {
        let max = config.max_redirects;
        let policy = redirect::Policy::custom(move |attempt| {
            let target = attempt.url().clone();
            if attempt.previous().len() > max {
                attempt.error(format!("more than {max} redirects"))
            } else if !scheme_allowed(&target) {
                attempt.error(format!("redirect to non-HTTPS {target}"))
            } else if !same_site(&attempt.previous()[0], &target) {
                attempt.error(format!("cross-domain redirect to {target}"))
            } else {
                attempt.follow()
            }
        });
        let client = reqwest::Client::builder()
            .redirect(policy)
            .timeout(config.timeout)
            .user_agent(concat!("stated-node/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("static client configuration");
        Fetcher {
            client,
            config,
            overrides: HashMap::new(),
            politeness: Politeness::default(),
        }
    }

    pub fn config(&self) -> &FetchConfig {
        &self.config
    }

    /// Serves `domain` from `base` instead of `https://<domain>`. Plain HTTP
    /// is accepted only for loopback bases, which is how tests run.
    pub fn with_override(mut self, domain: Domain, base: Url) -> Self {
        self.overrides.insert(domain, base);
        self
    }

    pub fn url_for(&self, domain: &Domain, path: &str) -> Url {
        let base = self
            .overrides
            .get(domain)
            .cloned()
            .unwrap_or_else(|| Url::parse(&format!("https://{domain}")).expect("valid domain"));
        base.join(path).expect("absolute path")
    }

    async fn get(
        &self,
        url: Url,
        cap: usize,
        text: bool,
    ) -> Result<(Vec<u8>, FetchMeta), FetchError> {
        if !scheme_allowed(&url) {
            return Err(FetchError::InsecureScheme(url.to_string()));
        }
        let lock = self.politeness.lock_for(url.host_str().unwrap_or(""));
        let _guard = lock.lock().await;
        let started = Instant::now();
        let net = |e: reqwest::Error| FetchError::Network(e.to_string());
        let mut resp = self.client.get(url.clone()).send().await.map_err(net)?;
        let status = resp.status().as_u16();
        if status != 200 {
            return Err(FetchError::BadStatus(status));
        }
        if text {
            let ct = resp
                .headers()
                .get(reqwest::header::CONTENT_TYPE)
                .map(|v| String::from_utf8_lossy(v.as_bytes()).into_owned())
                .unwrap_or_default();
            if !is_plain_utf8(&ct) {
                return Err(FetchError::WrongContentType(ct));
            }
        }
        if resp.content_length().is_some_and(|n| n > cap as u64) {
            return Err(FetchError::BodyTooLarge { limit: cap });
        }
        let mut body = Vec::new();
        while let Some(chunk) = resp.chunk().await.map_err(net)? {
            if body.len() + chunk.len() > cap {
                return Err(FetchError::BodyTooLarge { limit: cap });
            }
            body.extend_from_slice(&chunk);
        }
        let meta = FetchMeta {
            tls: resp.url().scheme() == "https",
            url: resp.url().to_string(),
            status,
            duration_ms: started.elapsed().as_millis() as u64,
            bytes: body.len(),
        };
        Ok((body, meta))
    }

    /// Polls `https://<domain>/.well-known/statements.txt`.
    pub async fn fetch_statement_file(
        &self,
        domain: &Domain,
    ) -> Result<(StatementFile, FetchMeta), FetchError> {
        {
            let mut polled = self
                .politeness
                .polled
                .lock()
                .unwrap_or_else(|p| p.into_inner());
            if let Some(last) = polled.get(domain) {
                let elapsed = last.elapsed();
                if elapsed < self.config.min_poll_interval {
                    return Err(FetchError::TooSoon {
                        domain: domain.clone(),
                        elapsed_secs: elapsed.as_secs(),
                    });
                }
            }
            polled.insert(domain.clone(), Instant::now());
        }
        let url = self.url_for(domain, STATEMENTS_PATH);
        let (body, meta) = self.get(url, self.config.max_file_bytes, true).await?;
        Ok((split_statement_file(&body)?, meta))
    }

    /// Fetches a statements file from an explicit URL, with the same
    /// transport checks as a domain poll but no poll spacing.
    pub async fn fetch_url(&self, url: Url) -> Result<(StatementFile, FetchMeta), FetchError> {
        let (body, meta) = self.get(url, self.config.max_file_bytes, true).await?;
        Ok((split_statement_file(&body)?, meta))
    }

    /// Fetches a single statement and checks it hashes to `h`.
    pub async fn fetch_statement_by_hash(
        &self,
        domain: &Domain,
        h: &ContentHash,
    ) -> Result<String, FetchError> {
        let url = self.url_for(domain, &statement_path(h));
        let (body, _) = self.get(url, self.config.max_file_bytes, true).await?;
        let file = split_statement_file(&body)?;
        let actual = ContentHash::of_bytes(&body);
        if &actual != h {
            return Err(FetchError::HashMismatch {
                expected: h.clone(),
                actual,
            });
        }
        match file.statements.as_slice() {
            [one] if one.as_bytes() == body.as_slice() => Ok(one.clone()),
            _ => Err(FetchError::NotCanonical),
        }
    }

    /// Fetches `/files/<h>.pdf`; the bytes must hash to `h` exactly.
    pub async fn fetch_pdf(&self, domain: &Domain, h: &ContentHash) -> Result<Vec<u8>, FetchError> {
        let url = self.url_for(domain, &pdf_path(h));
        let (body, _) = self.get(url, self.config.max_pdf_bytes, false).await?;
        let actual = ContentHash::of_bytes(&body);
        if &actual != h {
            return Err(FetchError::HashMismatch {
                expected: h.clone(),
                actual,
            });
        }
        Ok(body)
    }

    /// Polls many domains with bounded parallelism; results arrive on the
    /// returned channel as each completes.
    pub fn fetch_many(self: &Arc<Self>, domains: Vec<Domain>) -> mpsc::Receiver<FetchEvent> {
        let (tx, rx) = mpsc::channel(domains.len().max(1));
        let permits = Arc::new(Semaphore::new(self.config.max_parallel.max(1)));
        for domain in domains {
            let (this, tx, permits) = (Arc::clone(self), tx.clone(), Arc::clone(&permits));
            tokio::spawn(async move {
                let _permit = permits.acquire().await.expect("semaphore never closed");
                let result = this.fetch_statement_file(&domain).await;
                let _ = tx.send(FetchEvent { domain, result }).await;
            });
        }
        rx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_type_matching() {
        assert!(is_plain_utf8("text/plain; charset=utf-8"));
        assert!(is_plain_utf8("text/plain; charset=UTF-8"));
        assert!(is_plain_utf8("Text/Plain;charset=\"utf-8\""));
        assert!(is_plain_utf8("text/plain; format=flowed; charset=utf-8"));
        assert!(!is_plain_utf8("text/plain"));
        assert!(!is_plain_utf8("text/html; charset=utf-8"));
        assert!(!is_plain_utf8("text/plain; charset=latin1"));
        assert!(!is_plain_utf8(""));
    }

    #[test]
    fn redirect_site_rule() {
        let u = |s: &str| Url::parse(s).unwrap();
        assert!(same_site(
            &u("https://example.gov/a"),
            &u("https://www.example.gov/b")
        ));
        assert!(same_site(
            &u("https://www.example.gov/a"),
            &u("https://example.gov/b")
        ));
        assert!(!same_site(
            &u("https://example.gov/"),
            &u("https://evil.example/")
        ));
        assert!(!same_site(
            &u("https://example.gov/"),
            &u("https://notexample.gov/")
        ));
    }

    #[test]
    fn http_only_on_loopback() {
        let u = |s: &str| Url::parse(s).unwrap();
        assert!(scheme_allowed(&u("https://example.gov/")));
        assert!(scheme_allowed(&u("http://127.0.0.1:8080/")));
        assert!(scheme_allowed(&u("http://[::1]:8080/")));
        assert!(!scheme_allowed(&u("http://example.gov/")));
    }
}
