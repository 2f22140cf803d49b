use super::{malformed, ContentError};

/// Reader over the de-indented lines of a typed content, after `Type:`.
pub(crate) struct Block<'a> {
    lines: &'a [&'a str],
    pos: usize,
}

fn value_of<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    line.strip_prefix(name)?.strip_prefix(": ")
}

fn check(name: &str, value: &str) -> Result<(), ContentError> {
    if value.is_empty() || value.trim() != value {
        return Err(malformed(format!(
            "{name} must be non-empty without surrounding whitespace"
        )));
    }
    Ok(())
}

impl<'a> Block<'a> {
    pub(crate) fn new(lines: &'a [&'a str]) -> Self {
        Block { lines, pos: 0 }
    }

    pub(crate) fn current(&self) -> Option<&'a str> {
        self.lines.get(self.pos).copied()
    }

    /// `true` if the next line is the field `name`.
    pub(crate) fn at(&self, name: &str) -> bool {
        self.current().and_then(|l| value_of(l, name)).is_some()
    }

    pub(crate) fn field(&mut self, name: &str) -> Result<&'a str, ContentError> {
        self.optional(name)?.ok_or_else(|| match self.current() {
            Some(line) => malformed(format!("expected field {name:?}, found {line:?}")),
            None => malformed(format!("missing field {name:?}")),
        })
    }

    pub(crate) fn optional(&mut self, name: &str) -> Result<Option<&'a str>, ContentError> {
        match self.current().and_then(|l| value_of(l, name)) {
            Some(value) => {
                check(name, value)?;
                self.pos += 1;
                Ok(Some(value))
            }
            None => Ok(None),
        }
    }

    /// A line consisting of `name:` alone, introducing second-level fields.
    pub(crate) fn header(&mut self, name: &str) -> Result<(), ContentError> {
        match self.current() {
            Some(line) if line.strip_prefix(name) == Some(":") => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(malformed(format!("expected {name:?} section"))),
        }
    }

    pub(crate) fn nested_field(&mut self, name: &str) -> Result<&'a str, ContentError> {
        match self
            .current()
            .and_then(|l| l.strip_prefix('\t'))
            .and_then(|l| value_of(l, name))
        {
            Some(value) => {
                check(name, value)?;
                self.pos += 1;
                Ok(value)
            }
            None => Err(malformed(format!("expected nested field {name:?}"))),
        }
    }

    pub(crate) fn finish(&self, type_label: &str) -> Result<(), ContentError> {
        match self.current() {
            None => Ok(()),
            Some(line) => Err(malformed(format!(
                "unexpected line in {type_label}: {line:?}"
            ))),
        }
    }
}

/// Builds a content body; the first invalid value aborts with an invariant
/// violation at [`Writer::finish`].
pub(crate) struct Writer {
    out: String,
    error: Option<ContentError>,
}

impl Writer {
    pub(crate) fn new() -> Self {
        Writer {
            out: String::new(),
            error: None,
        }
    }

    fn fail(&mut self, why: String) {
        if self.error.is_none() {
            self.error = Some(ContentError::InvariantViolation(why));
        }
    }

    fn checked(&mut self, name: &str, value: &str) {
        if value.is_empty() {
            self.fail(format!("{name} is empty"));
        } else if value.contains('\n') || value.contains('\r') {
            self.fail(format!("{name} contains a line break"));
        } else if value.trim() != value {
            self.fail(format!("{name} has surrounding whitespace"));
        }
    }

    pub(crate) fn field(&mut self, name: &str, value: &str) {
        self.checked(name, value);
        self.out.push_str(&format!("\n\t{name}: {value}"));
    }

    pub(crate) fn optional(&mut self, name: &str, value: Option<&str>) {
        if let Some(value) = value {
            self.field(name, value);
        }
    }

    pub(crate) fn header(&mut self, name: &str) {
        self.out.push_str(&format!("\n\t{name}:"));
    }

    pub(crate) fn nested_field(&mut self, name: &str, value: &str) {
        self.checked(name, value);
        self.out.push_str(&format!("\n\t\t{name}: {value}"));
    }

    pub(crate) fn raw(&mut self, text: &str) {
        if text.is_empty() {
            self.fail("content is empty".into());
        } else if text.contains("\n\n") || text.ends_with('\n') {
            self.fail("content contains a blank line".into());
        } else if text.contains('\r') {
            self.fail("content contains a carriage return".into());
        }
        self.out.push_str(text);
    }

    pub(crate) fn finish(self) -> Result<String, ContentError> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.out),
        }
    }
}
