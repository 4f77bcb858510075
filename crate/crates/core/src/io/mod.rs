//! Model files and run records.

mod native;
mod record;
mod uai;

use std::path::Path;

pub use native::{parse_native, serialize_native, NATIVE_HEADER};
pub use record::{model_hash, read_run_record, record_file_name, write_run_record, RunRecord, SCHEMA_VERSION};
pub use uai::parse_uai;

use crate::error::{Error, Result};
use crate::model::MrfModel;

/// Parses either format, chosen by the first token (`MARKOV` or `MRF-E`).
pub fn parse_model(text: &str) -> Result<MrfModel> {
    let mut tokens = Tokens::new(text, Some("#"));
    match tokens.peek() {
        Some("MRF-E") => parse_native(text),
        Some(t) if t.eq_ignore_ascii_case("MARKOV") => parse_uai(text),
        Some(t) => Err(Error::BadPreamble(format!(
            "unrecognized model format starting with `{t}`"
        ))),
        None => Err(Error::BadPreamble("empty model file".into())),
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MrfModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_model(&text)
}

/// Whitespace-separated tokens with their line numbers, comments removed.
pub(crate) struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(text: &'a str, comment: Option<&str>) -> Self {
        let mut items = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let content = match comment {
                Some(marker) => line.split(marker).next().unwrap_or(""),
                None => line,
            };
            items.extend(content.split_whitespace().map(|t| (n + 1, t)));
        }
        let last_line = text.lines().count().max(1);
        Self {
            items,
            pos: 0,
            last_line,
        }
    }

    pub(crate) fn peek(&mut self) -> Option<&'a str> {
        self.items.get(self.pos).map(|&(_, t)| t)
    }

    /// Line of the next token, or of the end of input.
    pub(crate) fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |&(l, _)| l)
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line(),
            msg: msg.into(),
        }
    }

    pub(crate) fn next(&mut self, what: &str) -> Result<&'a str> {
        let token = self
            .peek()
            .ok_or_else(|| self.error(format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(token)
    }

    pub(crate) fn next_usize(&mut self, what: &str) -> Result<usize> {
        let token = self
            .peek()
            .ok_or_else(|| self.error(format!("unexpected end of input, expected {what}")))?;
        let value = token
            .parse()
            .map_err(|_| self.error(format!("expected {what}, found `{token}`")))?;
        self.pos += 1;
        Ok(value)
    }

    pub(crate) fn next_f64(&mut self, what: &str) -> Result<f64> {
        let token = self
            .peek()
            .ok_or_else(|| self.error(format!("unexpected end of input, expected {what}")))?;
        let value: f64 = token
            .parse()
            .map_err(|_| self.error(format!("expected {what}, found `{token}`")))?;
        if !value.is_finite() {
            return Err(self.error(format!("{what} must be finite, found `{token}`")));
        }
        self.pos += 1;
        Ok(value)
    }

    pub(crate) fn is_empty(&mut self) -> bool {
        self.peek().is_none()
    }
}
