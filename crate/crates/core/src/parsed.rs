use thiserror::Error;

use crate::content::{parse_content, ContentError, TypedContent};
use crate::hash::ContentHash;
use crate::statement::{ensure_canonical, ParseError, Statement};

/// A fully validated statement: envelope, decoded content and hash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedStatement {
    pub hash: ContentHash,
    pub statement: Statement,
    pub content: TypedContent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Statement(#[from] ParseError),
    #[error(transparent)]
    Content(#[from] ContentError),
}

impl ParsedStatement {
    pub fn from_text(text: &str) -> Result<Self, ValidationError> {
        let statement = ensure_canonical(text)?;
        let content = parse_content(&statement.content)?;
        Ok(ParsedStatement {
            hash: ContentHash::of_bytes(text.as_bytes()),
            statement,
            content,
        })
    }

    pub fn domain(&self) -> &crate::Domain {
        &self.statement.publishing_domain
    }
}
