//! Core of the Stated protocol: statements that organizations publish as
//! plain text under `/.well-known/statements.txt` on their own domain.
//!
//! This crate is pure and does no I/O. It covers
//!
//! * the statement envelope and its byte-exact canonical form ([`statement`]),
//! * content hashes and `statements.txt` files ([`hash`], [`file`]),
//! * the typed contents nested in a statement ([`content`]),
//! * same-domain revocation ([`supersession`]),
//! * web-of-trust confidence aggregation ([`trust`]),
//! * poll tallying ([`poll`]).
//!
//! ```
//! use stated_core::{hash_statement, parse_statement, parse_content, TypedContent};
//!
//! let text = "Publishing domain: example.gov
//! Author: Ministry of Foreign Affairs
//! Time: 2027-01-01T10:30:00Z
//! Format version: 4
//! Statement content:
//! \tType: Sign PDF
//! \tDescription: We hereby digitally sign the referenced PDF file.
//! \tPDF file hash: qg51IiW3RKIXSxiaF_hVQdZdtHzKsU4YePxFuZ2YVtQ";
//!
//! let statement = parse_statement(text).unwrap();
//! assert_eq!(statement.to_text().unwrap(), text);
//! assert!(matches!(parse_content(&statement.content), Ok(TypedContent::SignPdf(_))));
//! assert_eq!(
//!     hash_statement(text).unwrap().as_str(),
//!     "5rMSms8d0xPieom7erVnHKFj2UykehiWIc0mmH48h5c"
//! );
//! ```

pub mod content;
pub mod domain;
pub mod file;
pub mod hash;
mod parsed;
pub mod poll;
pub mod statement;
pub mod supersession;
pub mod time;
pub mod trust;

pub use content::{parse_content, serialize_content, ContentError, TypedContent};
pub use domain::{Domain, InvalidDomain};
pub use file::{split_statement_file, FileError, StatementFile};
pub use hash::{hash_statement, ContentHash, HashError, InvalidHash};
pub use parsed::{ParsedStatement, ValidationError};
pub use poll::{tally, RejectReason, Rejection, Tally, TallyError};
pub use statement::{parse_statement, serialize_statement, ParseError, SerializeError, Statement};
pub use supersession::{effective_statements, resolve_supersession, Resolution, Status};
pub use time::Timestamp;
pub use trust::{
    aggregate_confidence, assess_domain, TrustAssessment, TrustError, TrustGraph, VerificationEdge,
};
