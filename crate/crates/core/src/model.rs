//! Documents, QUD trees and bare dependency trees.
//!
//! Sentence indices are 1-based everywhere. Index 0 never names a sentence; in
//! parent arrays it marks "no parent".

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Trim outer whitespace and collapse internal whitespace runs to one space.
pub fn normalize_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocumentError {
    #[error("document has no sentences")]
    Empty,
    #[error("sentence {index} is empty after trimming")]
    EmptySentence { index: usize },
    #[error("sentence indices not contiguous: expected {expected}, found {found}")]
    NonContiguous { expected: usize, found: usize },
}

/// One pre-segmented sentence in canonical form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    index: usize,
    text: String,
    tokens: Vec<String>,
}

impl Sentence {
    pub fn new(index: usize, text: &str) -> Result<Self, DocumentError> {
        let text = normalize_text(text);
        if text.is_empty() {
            return Err(DocumentError::EmptySentence { index });
        }
        let tokens = text.split(' ').map(str::to_owned).collect();
        Ok(Sentence {
            index,
            text,
            tokens,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Whitespace-delimited surface tokens; joined with single spaces they
    /// reproduce [`Sentence::text`].
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Serialize, Deserialize)]
struct RawSentence {
    index: usize,
    text: String,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    article_id: String,
    sentences: Vec<RawSentence>,
}

/// An article as an ordered list of sentences indexed `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDocument", into = "RawDocument")]
pub struct Document {
    article_id: String,
    sentences: Vec<Sentence>,
}

impl TryFrom<RawDocument> for Document {
    type Error = DocumentError;

    fn try_from(raw: RawDocument) -> Result<Self, Self::Error> {
        Document::from_indexed(
            raw.article_id,
            raw.sentences.into_iter().map(|s| (s.index, s.text)),
        )
    }
}

impl From<Document> for RawDocument {
    fn from(doc: Document) -> Self {
        RawDocument {
            article_id: doc.article_id,
            sentences: doc
                .sentences
                .into_iter()
                .map(|s| RawSentence {
                    index: s.index,
                    text: s.text,
                })
                .collect(),
        }
    }
}

impl Document {
    /// Build a document from sentence texts, numbering them from 1.
    pub fn from_texts<I, S>(article_id: impl Into<String>, texts: I) -> Result<Self, DocumentError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::from_indexed(
            article_id,
            texts
                .into_iter()
                .enumerate()
                .map(|(i, t)| (i + 1, t.as_ref().to_owned())),
        )
    }

    /// Build a document from `(index, text)` pairs that must already be in
    /// order `1, 2, ..., n`.
    pub fn from_indexed<I>(
        article_id: impl Into<String>,
        sentences: I,
    ) -> Result<Self, DocumentError>
    where
        I: IntoIterator<Item = (usize, String)>,
    {
        let mut out = Vec::new();
        for (pos, (index, text)) in sentences.into_iter().enumerate() {
            if index != pos + 1 {
                return Err(DocumentError::NonContiguous {
                    expected: pos + 1,
                    found: index,
                });
            }
            out.push(Sentence::new(index, &text)?);
        }
        if out.is_empty() {
            return Err(DocumentError::Empty);
        }
        Ok(Document {
            article_id: article_id.into(),
            sentences: out,
        })
    }

    pub fn article_id(&self) -> &str {
        &self.article_id
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    /// Sentence by 1-based index.
    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        index.checked_sub(1).and_then(|i| self.sentences.get(i))
    }
}

/// One edge of a QUD tree: `answer` is attached to `anchor` by `question`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QudEntry {
    pub answer: usize,
    pub anchor: usize,
    pub question: String,
}

/// A QUD dependency tree over a document with `n` sentences.
///
/// Sentence 1 is the root and carries no entry. A tree may be partial (some
/// answers missing) when it comes from annotators who skipped sentences, or
/// from a parse run with the `skip` failure policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QudTree {
    pub article_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotator: Option<String>,
    pub n: usize,
    pub entries: Vec<QudEntry>,
}

/// A broken QUD tree invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyTree,
    SizeMismatch { tree: usize, document: usize },
    ArticleMismatch { tree: String, document: String },
    RootHasEntry,
    AnswerOutOfRange { index: usize },
    DuplicateEntry { index: usize },
    MissingEntry { index: usize },
    AnchorNotEarlier { index: usize, anchor: usize },
    AnchorMissing { index: usize },
    EmptyQuestion { index: usize },
    Unreachable { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTree => write!(f, "tree has n = 0"),
            Violation::SizeMismatch { tree, document } => {
                write!(f, "tree has n={tree} but document has {document} sentences")
            }
            Violation::ArticleMismatch { tree, document } => {
                write!(
                    f,
                    "tree article '{tree}' does not match document '{document}'"
                )
            }
            Violation::RootHasEntry => write!(f, "root sentence 1 must not have an entry"),
            Violation::AnswerOutOfRange { index } => {
                write!(f, "answer index out of range at i={index}")
            }
            Violation::DuplicateEntry { index } => write!(f, "duplicate entry for i={index}"),
            Violation::MissingEntry { index } => write!(f, "missing entry for i={index}"),
            Violation::AnchorNotEarlier { index, anchor } => {
                write!(
                    f,
                    "anchor not strictly earlier at i={index} (anchor {anchor})"
                )
            }
            Violation::AnchorMissing { index } => write!(f, "anchor index 0 at i={index}"),
            Violation::EmptyQuestion { index } => write!(f, "empty question at i={index}"),
            Violation::Unreachable { index } => {
                write!(f, "sentence {index} is not reachable from the root")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("invalid QUD tree: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("parent array is empty")]
    Empty,
    #[error("parent of sentence {index} is {parent}, outside 0..={n}")]
    ParentOutOfRange {
        index: usize,
        parent: usize,
        n: usize,
    },
    #[error("sentence {index} is its own parent")]
    SelfLoop { index: usize },
    #[error("expected exactly one root, found {0}")]
    RootCount(usize),
    #[error("cycle through sentence {index}")]
    Cycle { index: usize },
    #[error("declared n={n}, root={root} disagree with the parent array")]
    HeaderMismatch { n: usize, root: usize },
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl QudTree {
    pub fn new(article_id: impl Into<String>, n: usize, entries: Vec<QudEntry>) -> Self {
        QudTree {
            article_id: article_id.into(),
            annotator: None,
            n,
            entries,
        }
    }

    /// The bare root tree of a one-sentence document.
    pub fn root_only(article_id: impl Into<String>) -> Self {
        Self::new(article_id, 1, Vec::new())
    }

    pub fn entry(&self, answer: usize) -> Option<&QudEntry> {
        self.entries.iter().find(|e| e.answer == answer)
    }

    /// Answer indices in `2..=n` with no entry.
    pub fn missing(&self) -> Vec<usize> {
        let present: BTreeSet<usize> = self.entries.iter().map(|e| e.answer).collect();
        (2..=self.n).filter(|i| !present.contains(i)).collect()
    }

    pub fn is_partial(&self) -> bool {
        !self.missing().is_empty()
    }

    /// Structural invariants only (no document).
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::EmptyTree);
        }
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if e.answer == 1 {
                out.push(Violation::RootHasEntry);
                continue;
            }
            if e.answer == 0 || e.answer > self.n {
                out.push(Violation::AnswerOutOfRange { index: e.answer });
                continue;
            }
            if !seen.insert(e.answer) {
                out.push(Violation::DuplicateEntry { index: e.answer });
            }
            if e.anchor == 0 {
                out.push(Violation::AnchorMissing { index: e.answer });
            } else if e.anchor >= e.answer {
                out.push(Violation::AnchorNotEarlier {
                    index: e.answer,
                    anchor: e.anchor,
                });
            }
            if e.question.trim().is_empty() {
                out.push(Violation::EmptyQuestion { index: e.answer });
            }
        }
        for i in 2..=self.n {
            if !seen.contains(&i) {
                out.push(Violation::MissingEntry { index: i });
            }
        }
        if out.is_empty() {
            // Implied by the rules above, checked anyway.
            let parents = self.parent_array();
            if let Err(TreeError::Cycle { index }) = check_acyclic(&parents) {
                out.push(Violation::Unreachable { index });
            }
        }
        out
    }

    /// Parent array (0 for the root and for missing answers).
    pub fn parent_array(&self) -> Vec<usize> {
        let mut parents = vec![0; self.n];
        for e in &self.entries {
            if (2..=self.n).contains(&e.answer) {
                parents[e.answer - 1] = e.anchor;
            }
        }
        parents
    }

    /// Project to a bare dependency tree: parent of `i` is its anchor.
    pub fn to_dep_tree(&self) -> Result<DepTree, TreeError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(TreeError::Invalid(violations));
        }
        DepTree::from_parents(self.parent_array())
    }

    /// Project a possibly partial tree to a forest. Missing answers become
    /// extra roots; any other violation is an error.
    pub fn to_dep_forest(&self) -> Result<DepForest, TreeError> {
        let violations: Vec<_> = self
            .validate()
            .into_iter()
            .filter(|v| !matches!(v, Violation::MissingEntry { .. }))
            .collect();
        if !violations.is_empty() {
            return Err(TreeError::Invalid(violations));
        }
        DepForest::from_parents(self.parent_array())
    }
}

/// Check every tree invariant plus agreement with `doc`.
pub fn validate_tree(tree: &QudTree, doc: &Document) -> Vec<Violation> {
    let mut out = Vec::new();
    if tree.article_id != doc.article_id() {
        out.push(Violation::ArticleMismatch {
            tree: tree.article_id.clone(),
            document: doc.article_id().to_owned(),
        });
    }
    if tree.n != doc.len() {
        out.push(Violation::SizeMismatch {
            tree: tree.n,
            document: doc.len(),
        });
    }
    out.extend(tree.validate());
    out
}

fn check_parent_range(parents: &[usize]) -> Result<(), TreeError> {
    let n = parents.len();
    if n == 0 {
        return Err(TreeError::Empty);
    }
    for (i, &p) in parents.iter().enumerate() {
        if p > n {
            return Err(TreeError::ParentOutOfRange {
                index: i + 1,
                parent: p,
                n,
            });
        }
        if p == i + 1 {
            return Err(TreeError::SelfLoop { index: i + 1 });
        }
    }
    Ok(())
}

fn check_acyclic(parents: &[usize]) -> Result<(), TreeError> {
    // 0 = unvisited, 1 = on the current path, 2 = done
    let mut state = vec![0u8; parents.len()];
    for start in 0..parents.len() {
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            match state[cur] {
                2 => break,
                1 => return Err(TreeError::Cycle { index: cur + 1 }),
                _ => {}
            }
            state[cur] = 1;
            path.push(cur);
            match parents[cur] {
                0 => break,
                p => cur = p - 1,
            }
        }
        for v in path {
            state[v] = 2;
        }
    }
    Ok(())
}

/// A single-rooted dependency tree over sentences `1..=n`.
///
/// `parents[i - 1]` is the parent of sentence `i`, or 0 for the root. QUD
/// trees are always rooted at 1; trees converted from RST may root anywhere.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDepTree", into = "RawDepTree")]
pub struct DepTree {
    parents: Vec<usize>,
    root: usize,
}

/// `n` and `root` are redundant with `parents`; they are always written and
/// checked when present on input.
#[derive(Serialize, Deserialize)]
struct RawDepTree {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    root: Option<usize>,
    parents: Vec<usize>,
}

impl TryFrom<RawDepTree> for DepTree {
    type Error = TreeError;

    fn try_from(raw: RawDepTree) -> Result<Self, Self::Error> {
        let tree = DepTree::from_parents(raw.parents)?;
        let n = raw.n.unwrap_or(tree.n());
        let root = raw.root.unwrap_or(tree.root());
        if tree.n() != n || tree.root() != root {
            return Err(TreeError::HeaderMismatch { n, root });
        }
        Ok(tree)
    }
}

impl From<DepTree> for RawDepTree {
    fn from(t: DepTree) -> Self {
        RawDepTree {
            n: Some(t.n()),
            root: Some(t.root),
            parents: t.parents,
        }
    }
}

impl DepTree {
    pub fn from_parents(parents: Vec<usize>) -> Result<Self, TreeError> {
        check_parent_range(&parents)?;
        let roots: Vec<usize> = (1..=parents.len())
            .filter(|&i| parents[i - 1] == 0)
            .collect();
        if roots.len() != 1 {
            return Err(TreeError::RootCount(roots.len()));
        }
        check_acyclic(&parents)?;
        Ok(DepTree {
            root: roots[0],
            parents,
        })
    }

    /// Tree rooted at 1 from the heads of sentences `2..=n`.
    pub fn from_heads(heads: &[usize]) -> Result<Self, TreeError> {
        let mut parents = Vec::with_capacity(heads.len() + 1);
        parents.push(0);
        parents.extend_from_slice(heads);
        Self::from_parents(parents)
    }

    pub fn chain(n: usize) -> Self {
        DepTree {
            parents: (0..n).collect(),
            root: 1,
        }
    }

    pub fn star(n: usize) -> Self {
        let mut parents = vec![1; n];
        parents[0] = 0;
        DepTree { parents, root: 1 }
    }

    pub fn n(&self) -> usize {
        self.parents.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        match self.parents.get(i.wrapping_sub(1)) {
            Some(&p) if p != 0 => Some(p),
            _ => None,
        }
    }

    /// Child lists indexed by `i - 1`, children in increasing order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n()];
        for (i, &p) in self.parents.iter().enumerate() {
            if p != 0 {
                out[p - 1].push(i + 1);
            }
        }
        out
    }
}

/// An acyclic parent array that may have several roots, as produced by
/// partial QUD trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepForest {
    parents: Vec<usize>,
}

impl DepForest {
    pub fn from_parents(parents: Vec<usize>) -> Result<Self, TreeError> {
        check_parent_range(&parents)?;
        check_acyclic(&parents)?;
        Ok(DepForest { parents })
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn is_tree(&self) -> bool {
        self.parents.iter().filter(|&&p| p == 0).count() == 1
    }

    /// Connected components, each relabelled to `1..=k` preserving sentence
    /// order. Returned with the original indices of their members.
    pub fn components(&self) -> Vec<(Vec<usize>, DepTree)> {
        let n = self.parents.len();
        let find_root = |mut i: usize| {
            while self.parents[i - 1] != 0 {
                i = self.parents[i - 1];
            }
            i
        };
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 1..=n {
            groups.entry(find_root(i)).or_default().push(i);
        }
        groups
            .into_values()
            .map(|members| {
                let mut local = vec![0; n + 1];
                for (k, &m) in members.iter().enumerate() {
                    local[m] = k + 1;
                }
                let parents = members
                    .iter()
                    .map(|&m| match self.parents[m - 1] {
                        0 => 0,
                        p => local[p],
                    })
                    .collect();
                let tree = DepTree::from_parents(parents)
                    .expect("component of an acyclic forest is a tree");
                (members, tree)
            })
            .collect()
    }
}
