//! Structural statistics of dependency trees over sentences.
//!
//! Conventions:
//! * height counts edges, so a chain of n sentences has height n - 1;
//! * the arc to node i has length |i - parent(i)|;
//! * attachment compares the parents of sentences 2..=n and divides by
//!   n - 1 unless [`AttachmentConvention::ArticleLength`] is asked for;
//! * a partial tree (forest) is measured per connected component and the
//!   component values are averaged.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use std::path::Path;

use crate::io::{self, FormatError};
use crate::model::{DepForest, DepTree, QudTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trees differ in size ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("tree lists do not align: {0}")]
    Alignment(String),
    #[error("no trees to report on")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeStats {
    pub height: f64,
    pub norm_arc_len: f64,
    pub prop_leaf: f64,
    pub avg_depth: f64,
    pub right_branch: f64,
}

impl TreeStats {
    pub fn mean(items: &[TreeStats]) -> Option<TreeStats> {
        if items.is_empty() {
            return None;
        }
        let k = items.len() as f64;
        let sum = |f: fn(&TreeStats) -> f64| items.iter().map(f).sum::<f64>() / k;
        Some(TreeStats {
            height: sum(|s| s.height),
            norm_arc_len: sum(|s| s.norm_arc_len),
            prop_leaf: sum(|s| s.prop_leaf),
            avg_depth: sum(|s| s.avg_depth),
            right_branch: sum(|s| s.right_branch),
        })
    }
}

/// Depth of every node (root 0), indexed by `i - 1`.
pub fn depths(tree: &DepTree) -> Vec<usize> {
    let n = tree.n();
    let mut depth: Vec<Option<usize>> = vec![None; n];
    for start in 1..=n {
        let mut path = Vec::new();
        let mut cur = start;
        let base = loop {
            if let Some(d) = depth[cur - 1] {
                break d;
            }
            match tree.parent(cur) {
                None => {
                    depth[cur - 1] = Some(0);
                    break 0;
                }
                Some(p) => {
                    path.push(cur);
                    cur = p;
                }
            }
        };
        for (k, node) in path.iter().rev().enumerate() {
            depth[node - 1] = Some(base + k + 1);
        }
    }
    depth
        .into_iter()
        .map(|d| d.expect("every node reached"))
        .collect()
}

pub fn stats(tree: &DepTree) -> TreeStats {
    let n = tree.n();
    let nf = n as f64;
    let depth = depths(tree);
    let mut has_child = vec![false; n];
    let mut arc_sum = 0usize;
    let mut right = 0usize;
    for i in 1..=n {
        if let Some(p) = tree.parent(i) {
            has_child[p - 1] = true;
            arc_sum += i.abs_diff(p);
            if p + 1 == i {
                right += 1;
            }
        }
    }
    let edges = n - 1;
    TreeStats {
        height: *depth.iter().max().expect("n >= 1") as f64,
        norm_arc_len: if edges == 0 {
            0.0
        } else {
            arc_sum as f64 / edges as f64 / nf
        },
        prop_leaf: has_child.iter().filter(|&&c| !c).count() as f64 / nf,
        avg_depth: depth.iter().sum::<usize>() as f64 / nf,
        right_branch: right as f64 / nf,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GapReport {
    /// Largest number of discontinuities in any node's yield.
    pub gap_degree_max: usize,
    /// Discontinuities summed over all nodes.
    pub gap_total: usize,
}

/// Gap degree: for each node, the number of maximal contiguous blocks in its
/// yield (itself plus descendants) minus one.
pub fn gap_report(tree: &DepTree) -> GapReport {
    let children = tree.children();
    let mut report = GapReport::default();
    for node in 1..=tree.n() {
        let mut yield_ = Vec::new();
        let mut stack = vec![node];
        while let Some(v) = stack.pop() {
            yield_.push(v);
            stack.extend(&children[v - 1]);
        }
        yield_.sort_unstable();
        let gaps = yield_.windows(2).filter(|w| w[1] != w[0] + 1).count();
        report.gap_degree_max = report.gap_degree_max.max(gaps);
        report.gap_total += gaps;
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentConvention {
    /// matches over sentences 2..=n, divided by n - 1
    #[default]
    NonRoot,
    /// the same matches divided by n
    ArticleLength,
}

/// Fraction of sentences 2..=n given the same parent by both parent arrays
/// (0 = no parent).
pub fn attachment_from_parents(
    a: &[usize],
    b: &[usize],
    convention: AttachmentConvention,
) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::SizeMismatch(a.len(), b.len()));
    }
    let n = a.len();
    let matches = (1..n).filter(|&k| a[k] == b[k]).count() as f64;
    Ok(match convention {
        AttachmentConvention::NonRoot if n <= 1 => 1.0,
        AttachmentConvention::NonRoot => matches / (n - 1) as f64,
        AttachmentConvention::ArticleLength => matches / n as f64,
    })
}

pub fn attachment_score(a: &DepTree, b: &DepTree) -> Result<f64, MetricsError> {
    attachment_from_parents(a.parents(), b.parents(), AttachmentConvention::NonRoot)
}

/// Measurements for one possibly partial tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestStats {
    pub stats: TreeStats,
    pub gaps: GapReport,
    pub components: usize,
    pub partial: bool,
}

pub fn forest_stats(forest: &DepForest) -> ForestStats {
    let comps = forest.components();
    let per: Vec<TreeStats> = comps.iter().map(|(_, t)| stats(t)).collect();
    let mut gaps = GapReport::default();
    for (_, t) in &comps {
        let g = gap_report(t);
        gaps.gap_degree_max = gaps.gap_degree_max.max(g.gap_degree_max);
        gaps.gap_total += g.gap_total;
    }
    ForestStats {
        stats: TreeStats::mean(&per).expect("forest has at least one component"),
        gaps,
        components: comps.len(),
        partial: comps.len() > 1,
    }
}

/// A tree tagged with the article it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeRecord {
    pub article_id: String,
    pub label: Option<String>,
    pub forest: DepForest,
}

impl TreeRecord {
    pub fn from_tree(article_id: impl Into<String>, tree: &DepTree) -> Self {
        TreeRecord {
            article_id: article_id.into(),
            label: None,
            forest: DepForest::from_parents(tree.parents().to_vec()).expect("a tree is a forest"),
        }
    }

    pub fn id(&self) -> String {
        match &self.label {
            Some(l) => format!("{}/{l}", self.article_id),
            None => self.article_id.clone(),
        }
    }
}

/// A bare dependency tree as stored in tree files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepTreeRecord {
    pub article_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(flatten)]
    pub tree: DepTree,
}

/// Read a tree file. Each record is either a QUD tree (it has `entries`;
/// partial trees are allowed) or a bare dependency tree (it has `parents`).
pub fn read_tree_records(path: &Path) -> Result<Vec<TreeRecord>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_tree_records(path, &text)
}

pub fn parse_tree_records(path: &Path, text: &str) -> Result<Vec<TreeRecord>, FormatError> {
    let lines: Vec<io::Line<serde_json::Value>> = io::parse_jsonl(path, text)?;
    lines
        .into_iter()
        .map(|l| {
            let bad = |field: &str, msg: String| FormatError::record(path, l.line, field, msg);
            if l.value.get("entries").is_some() {
                let t: QudTree =
                    serde_json::from_value(l.value).map_err(|e| bad("<record>", e.to_string()))?;
                let forest = t
                    .to_dep_forest()
                    .map_err(|e| bad("entries", e.to_string()))?;
                Ok(TreeRecord {
                    article_id: t.article_id,
                    label: t.annotator,
                    forest,
                })
            } else if l.value.get("parents").is_some() {
                let r: DepTreeRecord =
                    serde_json::from_value(l.value).map_err(|e| bad("parents", e.to_string()))?;
                Ok(TreeRecord {
                    forest: DepForest::from_parents(r.tree.parents().to_vec())
                        .expect("a tree is a forest"),
                    article_id: r.article_id,
                    label: r.label,
                })
            } else {
                Err(bad(
                    "<record>",
                    "neither `entries` nor `parents` present".to_owned(),
                ))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub trees: usize,
    pub partial: usize,
    pub stats: TreeStats,
    pub att_score: Option<f64>,
    pub gap_degree_max: f64,
    pub gap_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub convention: AttachmentConvention,
    pub rows: Vec<ReportRow>,
}

pub const COLUMNS: [&str; 6] = [
    "height",
    "norm_arc_len",
    "prop_leaf",
    "avg_depth",
    "right_branch",
    "att_score",
];

fn summarize(name: &str, trees: &[TreeRecord]) -> Result<ReportRow, MetricsError> {
    if trees.is_empty() {
        return Err(MetricsError::Empty);
    }
    let per: Vec<ForestStats> = trees.par_iter().map(|t| forest_stats(&t.forest)).collect();
    let stats: Vec<TreeStats> = per.iter().map(|f| f.stats).collect();
    let k = per.len() as f64;
    Ok(ReportRow {
        name: name.to_owned(),
        trees: per.len(),
        partial: per.iter().filter(|f| f.partial).count(),
        stats: TreeStats::mean(&stats).expect("non-empty"),
        att_score: None,
        gap_degree_max: per
            .iter()
            .map(|f| f.gaps.gap_degree_max as f64)
            .sum::<f64>()
            / k,
        gap_total: per.iter().map(|f| f.gaps.gap_total as f64).sum::<f64>() / k,
    })
}

/// Mean statistics for one tree list, or for two lists of trees over the
/// same articles together with their mean attachment score. Trees are paired
/// by article id; when an article has several trees on one side (e.g. one
/// per annotator) every cross pair is scored.
pub fn corpus_report(
    trees: &[TreeRecord],
    paired: Option<&[TreeRecord]>,
    names: (&str, &str),
    convention: AttachmentConvention,
) -> Result<CorpusReport, MetricsError> {
    let mut rows = vec![summarize(names.0, trees)?];
    if let Some(other) = paired {
        let mut right = summarize(names.1, other)?;
        let mut by_article: BTreeMap<&str, Vec<&TreeRecord>> = BTreeMap::new();
        for t in other {
            by_article.entry(&t.article_id).or_default().push(t);
        }
        let left_ids: std::collections::BTreeSet<&str> =
            trees.iter().map(|t| t.article_id.as_str()).collect();
        if let Some(extra) = by_article.keys().find(|a| !left_ids.contains(*a)) {
            return Err(MetricsError::Alignment(format!(
                "article '{extra}' only in second list"
            )));
        }
        let mut scores = Vec::new();
        for t in trees {
            let matches = by_article.get(t.article_id.as_str()).ok_or_else(|| {
                MetricsError::Alignment(format!("article '{}' only in first list", t.article_id))
            })?;
            for m in matches {
                scores.push(attachment_from_parents(
                    t.forest.parents(),
                    m.forest.parents(),
                    convention,
                )?);
            }
        }
        let att = scores.iter().sum::<f64>() / scores.len() as f64;
        rows[0].att_score = Some(att);
        right.att_score = Some(att);
        rows.push(right);
    }
    Ok(CorpusReport { convention, rows })
}

impl CorpusReport {
    fn header_comments(&self) -> Vec<String> {
        let att = match self.convention {
            AttachmentConvention::NonRoot => "matches over sentences 2..n / (n-1)",
            AttachmentConvention::ArticleLength => "matches over sentences 2..n / n",
        };
        vec![
            "height = edges on the longest root-to-leaf path".to_owned(),
            "arc length = |i - parent(i)|; norm_arc_len = mean arc length / n".to_owned(),
            format!("att_score = {att}"),
            "partial trees are measured per component and averaged".to_owned(),
        ]
    }

    fn cells(row: &ReportRow) -> Vec<String> {
        let s = &row.stats;
        let mut c: Vec<String> = [
            s.height,
            s.norm_arc_len,
            s.prop_leaf,
            s.avg_depth,
            s.right_branch,
        ]
        .iter()
        .map(|v| format!("{v:.2}"))
        .collect();
        c.push(
            row.att_score
                .map_or_else(|| "-".to_owned(), |a| format!("{a:.2}")),
        );
        c
    }

    /// Tab-separated metric table followed by a gap-degree table.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in self.header_comments() {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "tree\ttrees\t{}", COLUMNS.join("\t"));
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{}",
                row.name,
                row.trees,
                Self::cells(row).join("\t")
            );
        }
        out.push('\n');
        let _ = writeln!(out, "tree\tpartial\tgap_degree_max\tgap_total");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.2}\t{:.2}",
                row.name, row.partial, row.gap_degree_max, row.gap_total
            );
        }
        out
    }

    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        for c in self.header_comments() {
            let _ = writeln!(out, "# {c}");
        }
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        let _ = write!(out, "{:<width$}  {:>5}", "tree", "trees");
        for c in COLUMNS {
            let _ = write!(out, "  {c:>12}");
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{:<width$}  {:>5}", row.name, row.trees);
            for cell in Self::cells(row) {
                let _ = write!(out, "  {cell:>12}");
            }
            out.push('\n');
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "{:<width$}  {:>7}  {:>14}  {:>9}",
            "tree", "partial", "gap_degree_max", "gap_total"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>7}  {:>14.2}  {:>9.2}",
                row.name, row.partial, row.gap_degree_max, row.gap_total
            );
        }
        out
    }
}
