//! RST constituency trees with sentence leaves, and their conversion to
//! dependency trees by nuclearity-driven head percolation.
//!
//! The head of a leaf is its sentence; the head of an internal node is the
//! head of its leftmost nucleus child. Every sentence other than the global
//! head attaches to the head of the parent of the highest node it heads.
//!
//! Trees are read from a bracketed notation, see `docs/rst-format.md`:
//!
//! ```text
//! @wsj_0600
//! (1-3 span root
//!   (1-2 span N (1 span N) (2 elaboration S))
//!   (3 elaboration S))
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DepTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RstError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("leaf {0}-{1} spans several sentences; leaves must be single sentences")]
    MultiSentenceLeaf(usize, usize),
    #[error("sentence {0} is split into sub-sentential units; convert EDUs to sentences first")]
    SubSentential(usize),
    #[error("children of node {lo}-{hi} do not partition it in order")]
    BadPartition { lo: usize, hi: usize },
    #[error("node {lo}-{hi} has no nucleus child")]
    NoNucleus { lo: usize, hi: usize },
    #[error("tree must cover sentences starting at 1, found {0}-{1}")]
    NotFromOne(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nuclearity {
    Nucleus,
    Satellite,
    /// The whole-document node, which has no sibling.
    Root,
}

impl fmt::Display for Nuclearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nuclearity::Nucleus => "N",
            Nuclearity::Satellite => "S",
            Nuclearity::Root => "root",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RstNode {
    /// Inclusive sentence range.
    pub span: (usize, usize),
    pub relation: String,
    pub nuclearity: Nuclearity,
    pub children: Vec<RstNode>,
}

impl RstNode {
    pub fn leaf(i: usize, nuclearity: Nuclearity, relation: &str) -> Self {
        RstNode {
            span: (i, i),
            relation: relation.to_owned(),
            nuclearity,
            children: Vec::new(),
        }
    }

    /// Internal node whose span is the union of its children's spans.
    pub fn node(nuclearity: Nuclearity, relation: &str, children: Vec<RstNode>) -> Self {
        let lo = children.first().map_or(0, |c| c.span.0);
        let hi = children.last().map_or(0, |c| c.span.1);
        RstNode {
            span: (lo, hi),
            relation: relation.to_owned(),
            nuclearity,
            children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn validate(&self) -> Result<(), RstError> {
        let (lo, hi) = self.span;
        if self.is_leaf() {
            if lo != hi {
                return Err(RstError::MultiSentenceLeaf(lo, hi));
            }
            return Ok(());
        }
        if lo == hi {
            return Err(RstError::SubSentential(lo));
        }
        let mut next = lo;
        for c in &self.children {
            if c.span.0 != next || c.span.1 < c.span.0 {
                return Err(RstError::BadPartition { lo, hi });
            }
            next = c.span.1 + 1;
        }
        if next != hi + 1 {
            return Err(RstError::BadPartition { lo, hi });
        }
        if !self
            .children
            .iter()
            .any(|c| c.nuclearity == Nuclearity::Nucleus)
        {
            return Err(RstError::NoNucleus { lo, hi });
        }
        self.children.iter().try_for_each(RstNode::validate)
    }

    /// Head sentence: the node itself for leaves, else the head of the
    /// leftmost nucleus child.
    pub fn head(&self) -> Result<usize, RstError> {
        if self.is_leaf() {
            return Ok(self.span.0);
        }
        self.children
            .iter()
            .find(|c| c.nuclearity == Nuclearity::Nucleus)
            .ok_or(RstError::NoNucleus {
                lo: self.span.0,
                hi: self.span.1,
            })?
            .head()
    }

    fn write_brackets(&self, out: &mut String) {
        let (lo, hi) = self.span;
        if lo == hi {
            out.push_str(&format!("({lo} {} {}", self.relation, self.nuclearity));
        } else {
            out.push_str(&format!("({lo}-{hi} {} {}", self.relation, self.nuclearity));
        }
        for c in &self.children {
            out.push(' ');
            c.write_brackets(out);
        }
        out.push(')');
    }
}

/// A validated sentence-level RST tree over sentences `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RstConstTree {
    pub article_id: String,
    root: RstNode,
}

impl RstConstTree {
    pub fn new(article_id: impl Into<String>, root: RstNode) -> Result<Self, RstError> {
        if root.span.0 != 1 {
            return Err(RstError::NotFromOne(root.span.0, root.span.1));
        }
        root.validate()?;
        Ok(RstConstTree {
            article_id: article_id.into(),
            root,
        })
    }

    pub fn root(&self) -> &RstNode {
        &self.root
    }

    pub fn n(&self) -> usize {
        self.root.span.1
    }

    pub fn to_brackets(&self) -> String {
        let mut out = String::new();
        self.root.write_brackets(&mut out);
        out
    }

    /// Dependency tree rooted at the head of the whole tree.
    pub fn to_dep(&self) -> Result<DepTree, RstError> {
        let mut parents = vec![0; self.n()];
        attach(&self.root, &mut parents)?;
        Ok(DepTree::from_parents(parents).expect("head percolation yields a tree"))
    }
}

/// Attach the heads of non-head children to this node's head, recursively.
fn attach(node: &RstNode, parents: &mut [usize]) -> Result<usize, RstError> {
    let head = node.head()?;
    for c in &node.children {
        let h = attach(c, parents)?;
        if h != head {
            parents[h - 1] = head;
        }
    }
    Ok(head)
}

/// Source of RST trees. The bracketed reader is built in; treebank-native
/// formats plug in by implementing this trait.
pub trait RstReader {
    fn read(&self, text: &str) -> Result<Vec<RstConstTree>, RstError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BracketReader;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
    Label(String),
}

fn tokenize(text: &str) -> Vec<(usize, Tok)> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let trimmed = line.trim();
        if trimmed.starts_with(';') || trimmed.starts_with('#') {
            continue;
        }
        if let Some(label) = trimmed.strip_prefix('@') {
            out.push((line_no, Tok::Label(label.trim().to_owned())));
            continue;
        }
        let mut atom = String::new();
        let flush = |atom: &mut String, out: &mut Vec<(usize, Tok)>| {
            if !atom.is_empty() {
                out.push((line_no, Tok::Atom(std::mem::take(atom))));
            }
        };
        for ch in line.chars() {
            match ch {
                '(' => {
                    flush(&mut atom, &mut out);
                    out.push((line_no, Tok::Open));
                }
                ')' => {
                    flush(&mut atom, &mut out);
                    out.push((line_no, Tok::Close));
                }
                c if c.is_whitespace() => flush(&mut atom, &mut out),
                c => atom.push(c),
            }
        }
        flush(&mut atom, &mut out);
    }
    out
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(1, |(l, _)| *l)
    }

    fn err(&self, message: impl Into<String>) -> RstError {
        RstError::Syntax {
            line: self.line(),
            message: message.into(),
        }
    }

    fn atom(&mut self, what: &str) -> Result<String, RstError> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Atom(a))) => {
                self.pos += 1;
                Ok(a.clone())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn node(&mut self) -> Result<RstNode, RstError> {
        match self.toks.get(self.pos) {
            Some((_, Tok::Open)) => self.pos += 1,
            _ => return Err(self.err("expected '('")),
        }
        let span_text = self.atom("span")?;
        let span =
            parse_span(&span_text).ok_or_else(|| self.err(format!("bad span '{span_text}'")))?;
        let relation = self.atom("relation")?;
        let nuc_text = self.atom("nuclearity")?;
        let nuclearity = match nuc_text.as_str() {
            "N" | "n" | "Nucleus" | "nucleus" => Nuclearity::Nucleus,
            "S" | "s" | "Satellite" | "satellite" => Nuclearity::Satellite,
            "root" | "Root" => Nuclearity::Root,
            other => return Err(self.err(format!("bad nuclearity '{other}'"))),
        };
        let mut children = Vec::new();
        loop {
            match self.toks.get(self.pos) {
                Some((_, Tok::Close)) => {
                    self.pos += 1;
                    break;
                }
                Some((_, Tok::Open)) => children.push(self.node()?),
                Some(_) => return Err(self.err("expected child or ')'")),
                None => return Err(self.err("unexpected end of input")),
            }
        }
        Ok(RstNode {
            span,
            relation,
            nuclearity,
            children,
        })
    }
}

fn parse_span(s: &str) -> Option<(usize, usize)> {
    match s.split_once('-') {
        Some((a, b)) => Some((a.parse().ok()?, b.parse().ok()?)),
        None => {
            let i = s.parse().ok()?;
            Some((i, i))
        }
    }
}

impl RstReader for BracketReader {
    fn read(&self, text: &str) -> Result<Vec<RstConstTree>, RstError> {
        let mut p = Parser {
            toks: tokenize(text),
            pos: 0,
        };
        let mut out = Vec::new();
        let mut label: Option<String> = None;
        while p.pos < p.toks.len() {
            if let (_, Tok::Label(l)) = &p.toks[p.pos] {
                label = Some(l.clone());
                p.pos += 1;
                continue;
            }
            let line = p.line();
            let root = p.node()?;
            let id = label
                .take()
                .unwrap_or_else(|| format!("tree{}", out.len() + 1));
            let tree = RstConstTree::new(id, root).map_err(|e| match e {
                RstError::Syntax { .. } => e,
                other => RstError::Syntax {
                    line,
                    message: other.to_string(),
                },
            })?;
            out.push(tree);
        }
        Ok(out)
    }
}
