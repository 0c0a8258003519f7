//! Percentage tables over judge responses.
//!
//! Denominators count judge responses, not questions: 380 questions judged
//! by 3 people give 1140 responses. Q2 tables exclude skipped responses from
//! the denominator and are computed only over questions every judge rated
//! `Yes` or `MinorError` for Q1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::labels::{JudgmentRecord, Q1Coarse, Q1Label, Q2Label};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Q1Table {
    pub responses: usize,
    /// Percentage per leaf label, in [`Q1Label::ALL`] order.
    pub fine: Vec<(Q1Label, f64)>,
    pub coarse: Vec<(Q1Coarse, f64)>,
}

impl Q1Table {
    pub fn fine_pct(&self, label: Q1Label) -> f64 {
        self.fine
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn coarse_pct(&self, label: Q1Coarse) -> f64 {
        self.coarse
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(0.0, |(_, p)| *p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Q2Table {
    pub responses: usize,
    pub skipped: usize,
    pub questions: usize,
    pub pct: Vec<(Q2Label, f64)>,
}

impl Q2Table {
    pub fn pct_of(&self, label: Q2Label) -> f64 {
        self.pct
            .iter()
            .find(|(l, _)| *l == label)
            .map_or(0.0, |(_, p)| *p)
    }
}

fn pct(count: usize, total: usize) -> f64 {
    100.0 * count as f64 / total as f64
}

pub fn aggregate_q1(records: &[JudgmentRecord]) -> Result<Q1Table, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let total = records.len();
    let fine = Q1Label::ALL
        .into_iter()
        .map(|l| (l, pct(records.iter().filter(|r| r.q1 == l).count(), total)))
        .collect();
    let coarse = Q1Coarse::ALL
        .into_iter()
        .map(|c| {
            (
                c,
                pct(records.iter().filter(|r| r.q1.coarse() == c).count(), total),
            )
        })
        .collect();
    Ok(Q1Table {
        responses: total,
        fine,
        coarse,
    })
}

/// Group records by question id.
pub fn by_question(records: &[JudgmentRecord]) -> BTreeMap<&str, Vec<&JudgmentRecord>> {
    let mut out: BTreeMap<&str, Vec<&JudgmentRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.question_id.as_str()).or_default().push(r);
    }
    out
}

/// Every question must have the same number of judges.
pub fn judge_count(records: &[JudgmentRecord]) -> Result<usize, EvalError> {
    let groups = by_question(records);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for g in groups.values() {
        *counts.entry(g.len()).or_default() += 1;
    }
    let Some((&modal, _)) = counts.iter().max_by_key(|(k, c)| (**c, **k)) else {
        return Err(EvalError::Empty);
    };
    let odd: Vec<(String, usize)> = groups
        .iter()
        .filter(|(_, g)| g.len() != modal)
        .map(|(q, g)| ((*q).to_owned(), g.len()))
        .collect();
    if odd.is_empty() {
        Ok(modal)
    } else {
        Err(EvalError::UnevenJudges {
            expected: modal,
            odd,
        })
    }
}

/// Questions whose every Q1 label is `Yes` or `MinorError`.
pub fn q2_subset(records: &[JudgmentRecord]) -> Result<BTreeSet<String>, EvalError> {
    judge_count(records)?;
    Ok(by_question(records)
        .into_iter()
        .filter(|(_, g)| g.iter().all(|r| r.q1.is_acceptable()))
        .map(|(q, _)| q.to_owned())
        .collect())
}

/// Q2 percentages over the records given; skipped responses are left out of
/// the denominator.
pub fn aggregate_q2(records: &[&JudgmentRecord]) -> Result<Q2Table, EvalError> {
    let answered: Vec<&&JudgmentRecord> = records
        .iter()
        .filter(|r| r.q2 != Q2Label::Skipped)
        .collect();
    if answered.is_empty() {
        return Err(EvalError::EmptyDenominator);
    }
    let total = answered.len();
    let questions: BTreeSet<&str> = records.iter().map(|r| r.question_id.as_str()).collect();
    Ok(Q2Table {
        responses: total,
        skipped: records.len() - total,
        questions: questions.len(),
        pct: Q2Label::ANSWERED
            .into_iter()
            .map(|l| (l, pct(answered.iter().filter(|r| r.q2 == l).count(), total)))
            .collect(),
    })
}

/// [`q2_subset`] followed by [`aggregate_q2`] on the surviving records.
pub fn aggregate_q2_eligible(records: &[JudgmentRecord]) -> Result<Q2Table, EvalError> {
    let keep = q2_subset(records)?;
    let eligible: Vec<&JudgmentRecord> = records
        .iter()
        .filter(|r| keep.contains(&r.question_id))
        .collect();
    aggregate_q2(&eligible)
}

/// Split records by their `system` tag, keeping first-seen order. Untagged
/// records go under `default`.
pub fn by_system(records: &[JudgmentRecord], default: &str) -> Vec<(String, Vec<JudgmentRecord>)> {
    let mut out: Vec<(String, Vec<JudgmentRecord>)> = Vec::new();
    for r in records {
        let name = r.system.clone().unwrap_or_else(|| default.to_owned());
        match out.iter_mut().find(|(n, _)| *n == name) {
            Some((_, v)) => v.push(r.clone()),
            None => out.push((name, vec![r.clone()])),
        }
    }
    out
}

/// Rows in the layout `System | Yes | Minor | Hallu.(m) | ...`, one decimal.
pub fn render_q1(rows: &[(String, Q1Table)], pretty: bool) -> String {
    let mut headers = vec!["system".to_owned(), "responses".to_owned()];
    headers.extend(Q1Label::ALL.iter().map(|l| l.header().to_owned()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, t)| {
            let mut cells = vec![name.clone(), t.responses.to_string()];
            cells.extend(t.fine.iter().map(|(_, p)| format!("{p:.1}")));
            cells
        })
        .collect();
    render(&headers, &body, pretty)
}

pub fn render_q1_coarse(rows: &[(String, Q1Table)], pretty: bool) -> String {
    let mut headers = vec!["system".to_owned(), "responses".to_owned()];
    headers.extend(Q1Coarse::ALL.iter().map(|l| l.header().to_owned()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, t)| {
            let mut cells = vec![name.clone(), t.responses.to_string()];
            cells.extend(t.coarse.iter().map(|(_, p)| format!("{p:.1}")));
            cells
        })
        .collect();
    render(&headers, &body, pretty)
}

pub fn render_q2(rows: &[(String, Q2Table)], pretty: bool) -> String {
    let mut headers = vec!["system".to_owned(), "responses".to_owned()];
    headers.extend(Q2Label::ANSWERED.iter().map(|l| l.header().to_owned()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, t)| {
            let mut cells = vec![name.clone(), t.responses.to_string()];
            cells.extend(t.pct.iter().map(|(_, p)| format!("{p:.1}")));
            cells
        })
        .collect();
    render(&headers, &body, pretty)
}

/// Tab-separated, or space-aligned when `pretty`.
pub fn render(headers: &[String], rows: &[Vec<String>], pretty: bool) -> String {
    let mut out = String::new();
    if !pretty {
        let _ = writeln!(out, "{}", headers.join("\t"));
        for r in rows {
            let _ = writeln!(out, "{}", r.join("\t"));
        }
        return out;
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([headers[c].chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
    };
    let _ = writeln!(out, "{}", line(headers));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
    out
}
