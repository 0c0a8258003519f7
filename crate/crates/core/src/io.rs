//! Line-delimited JSON files.
//!
//! Every file format in this crate is one JSON object per line. Blank lines
//! and lines starting with `#` are skipped, so outputs can carry comment
//! headers (e.g. a pointer to their run manifest).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: field `{field}`: {message}", .path.display())]
    Record {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },
}

impl FormatError {
    pub fn record(
        path: &Path,
        line: usize,
        field: impl Into<String>,
        message: impl ToString,
    ) -> Self {
        FormatError::Record {
            path: path.to_owned(),
            line,
            field: field.into(),
            message: message.to_string(),
        }
    }
}

/// A parsed record together with its 1-based line number.
#[derive(Debug, Clone)]
pub struct Line<T> {
    pub line: usize,
    pub value: T,
}

pub fn parse_jsonl<T: DeserializeOwned>(
    path: &Path,
    text: &str,
) -> Result<Vec<Line<T>>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(trimmed);
        match serde_path_to_error::deserialize::<_, T>(de) {
            Ok(value) => out.push(Line { line: i + 1, value }),
            Err(err) => {
                let field = err.path().to_string();
                let field = if field == "." {
                    "<record>".to_owned()
                } else {
                    field
                };
                return Err(FormatError::record(path, i + 1, field, err.into_inner()));
            }
        }
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<Line<T>>, FormatError> {
    let text = fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_jsonl(path, &text)
}

/// Render records as JSONL, one per line, after optional `#` comment lines.
pub fn to_jsonl<T: Serialize>(comments: &[String], records: &[T]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), FormatError> {
    let io_err = |source| FormatError::Io {
        path: path.to_owned(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(contents.as_bytes()).map_err(io_err)
}
