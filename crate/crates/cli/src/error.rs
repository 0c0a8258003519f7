//! Categorized failures and their exit codes.

use qud_core::backend::{BackendError, ErrorKind};
use qud_core::dcqa::IngestError;
use qud_core::io::FormatError;
use qud_core::parser::ParseError;

/// What went wrong, at the granularity a caller can act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Bad flag values that clap cannot check on its own.
    Usage,
    /// Unreadable paths or malformed input files.
    Input,
    /// Backend unreachable or too slow.
    Unreachable,
    /// Backend reachable but its answers break the wire contract.
    Protocol,
    /// Well-formed input that the requested computation rejects.
    Data,
    /// Writing outputs failed.
    Output,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Input => 3,
            Category::Unreachable => 4,
            Category::Protocol => 5,
            Category::Data => 6,
            Category::Output => 7,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Category::Usage => "usage error",
            Category::Input => "input error",
            Category::Unreachable => "backend unreachable",
            Category::Protocol => "backend protocol error",
            Category::Data => "invalid data",
            Category::Output => "output error",
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {}", .category.label(), chain(.source))]
pub struct CliError {
    pub category: Category,
    #[source]
    pub source: anyhow::Error,
}

/// The error chain joined by `: `, skipping causes whose text the previous
/// message already includes.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn new(category: Category, source: impl Into<anyhow::Error>) -> Self {
        CliError {
            category,
            source: source.into(),
        }
    }

    pub fn usage(msg: impl std::fmt::Display) -> Self {
        CliError::new(Category::Usage, anyhow::anyhow!("{msg}"))
    }
}

/// Attach a category to any error.
pub trait Categorize<T> {
    fn or_fail(self, category: Category) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Categorize<T> for Result<T, E> {
    fn or_fail(self, category: Category) -> CliResult<T> {
        self.map_err(|e| CliError::new(category, e))
    }
}

pub fn backend_category(e: &BackendError) -> Category {
    match e.kind {
        ErrorKind::Transport | ErrorKind::Timeout => Category::Unreachable,
        _ => Category::Protocol,
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        CliError::new(backend_category(&e), e)
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::new(Category::Input, e)
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let category = match e {
            IngestError::Format(_)
            | IngestError::DuplicateArticle { .. }
            | IngestError::Release(_) => Category::Input,
            _ => Category::Data,
        };
        CliError::new(category, e)
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        let category = match &e {
            ParseError::Config(_) => Category::Usage,
            ParseError::Backend { source, .. } => backend_category(source),
            ParseError::NoCandidates { .. } | ParseError::InvalidTree(_) => Category::Protocol,
            ParseError::Encoding { .. } => Category::Data,
        };
        CliError::new(category, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use qud_core::backend::Endpoint;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            Category::Usage,
            Category::Input,
            Category::Unreachable,
            Category::Protocol,
            Category::Data,
            Category::Output,
        ];
        let codes: std::collections::BTreeSet<i32> = all.iter().map(|c| c.exit_code()).collect();
        assert_eq!(codes.len(), all.len());
        assert!(!codes.contains(&0) && !codes.contains(&1));
    }

    #[test]
    fn backend_failures_split_by_kind() {
        let err = |kind| BackendError::new(Endpoint::Anchor, "a:2:anchor", kind, "x");
        for kind in [ErrorKind::Transport, ErrorKind::Timeout] {
            assert_eq!(CliError::from(err(kind)).category, Category::Unreachable);
        }
        for kind in [
            ErrorKind::Malformed,
            ErrorKind::Invariant,
            ErrorKind::InvalidRequest,
            ErrorKind::Remote,
        ] {
            assert_eq!(CliError::from(err(kind)).category, Category::Protocol);
        }
        let parse = ParseError::Backend {
            answer_index: 2,
            source: err(ErrorKind::Invariant),
        };
        assert_eq!(CliError::from(parse).category, Category::Protocol);
        let none = ParseError::NoCandidates { answer_index: 3 };
        assert_eq!(CliError::from(none).category, Category::Protocol);
    }

    #[test]
    fn chain_drops_repeated_causes() {
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        let e = CliError::new(
            Category::Input,
            anyhow::Error::new(io).context("f.jsonl: gone"),
        );
        assert_eq!(e.to_string(), "input error: f.jsonl: gone");
    }
}
