//! `statements.txt` files: canonical statements separated by one blank line.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StatementFile {
    pub statements: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FileError {
    #[error("file is not valid UTF-8 (at byte {0})")]
    InvalidUtf8(usize),
    #[error("BOM present")]
    BomPresent,
    #[error("carriage return at byte {0}; line endings must be LF")]
    CarriageReturn(usize),
}

const BOM: &[u8] = b"\xEF\xBB\xBF";

/// Split raw file bytes into statement texts.
///
/// The statements themselves are not parsed; callers feed each one to
/// [`crate::parse_statement`].
pub fn split_statement_file(bytes: &[u8]) -> Result<StatementFile, FileError> {
    if bytes.starts_with(BOM) {
        return Err(FileError::BomPresent);
    }
    let text = std::str::from_utf8(bytes).map_err(|e| FileError::InvalidUtf8(e.valid_up_to()))?;
    if let Some(at) = text.find('\r') {
        return Err(FileError::CarriageReturn(at));
    }
    let text = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Ok(StatementFile::default());
    }
    Ok(StatementFile {
        statements: text.split("\n\n").map(str::to_owned).collect(),
    })
}

impl StatementFile {
    pub fn join(&self) -> String {
        self.statements.join("\n\n")
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }
}

impl FromIterator<String> for StatementFile {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        StatementFile {
            statements: iter.into_iter().collect(),
        }
    }
}
