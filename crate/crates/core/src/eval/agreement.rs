//! Inter-judge agreement summaries.

use std::collections::BTreeMap;

use serde::Serialize;

use super::aggregate::{by_question, judge_count};
use super::alpha::{krippendorff_alpha, nominal};
use super::labels::{JudgmentRecord, Q1Coarse, Q1Label, Q2Label};
use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementSummary {
    pub questions: usize,
    pub judges: usize,
    /// Percentage of questions where every judge chose the same fine label.
    pub all_agree_pct: f64,
    /// Percentage of questions where more than half the judges share a fine
    /// label.
    pub majority_pct: f64,
    pub alpha_yes_vs_others: f64,
    pub alpha_coarse: f64,
    pub alpha_fine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Q2Agreement {
    /// Questions with at least two answered (non-skipped) Q2 labels.
    pub questions: usize,
    pub all_agree_pct: f64,
    pub majority_pct: f64,
    pub alpha: f64,
}

fn tally<T: Ord + Copy>(labels: &[T]) -> (bool, bool) {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(*l).or_default() += 1;
    }
    let top = counts.values().copied().max().unwrap_or(0);
    (counts.len() == 1, 2 * top > labels.len())
}

fn matrix<T: Copy>(groups: &[Vec<T>], f: impl Fn(T) -> Option<T>) -> Vec<Vec<Option<T>>> {
    groups
        .iter()
        .map(|g| g.iter().map(|l| f(*l)).collect())
        .collect()
}

/// Q1 agreement. Judges are matched per question in input order; the judge
/// identity does not need to be the same across questions.
pub fn agreement_summary(records: &[JudgmentRecord]) -> Result<AgreementSummary, EvalError> {
    let judges = judge_count(records)?;
    let groups: Vec<Vec<Q1Label>> = by_question(records)
        .into_values()
        .map(|g| g.iter().map(|r| r.q1).collect())
        .collect();
    let questions = groups.len();
    let (mut all, mut maj) = (0usize, 0usize);
    for g in &groups {
        let (a, m) = tally(g);
        all += usize::from(a);
        maj += usize::from(m);
    }
    let yes: Vec<Vec<Option<bool>>> = groups
        .iter()
        .map(|g| g.iter().map(|l| Some(*l == Q1Label::Yes)).collect())
        .collect();
    let coarse: Vec<Vec<Option<Q1Coarse>>> = groups
        .iter()
        .map(|g| g.iter().map(|l| Some(l.coarse())).collect())
        .collect();
    let fine = matrix(&groups, Some);
    Ok(AgreementSummary {
        questions,
        judges,
        all_agree_pct: 100.0 * all as f64 / questions as f64,
        majority_pct: 100.0 * maj as f64 / questions as f64,
        alpha_yes_vs_others: krippendorff_alpha(&yes, nominal)?,
        alpha_coarse: krippendorff_alpha(&coarse, nominal)?,
        alpha_fine: krippendorff_alpha(&fine, nominal)?,
    })
}

/// Q2 agreement with skipped responses treated as missing values.
pub fn q2_agreement(records: &[&JudgmentRecord]) -> Result<Q2Agreement, EvalError> {
    let mut groups: BTreeMap<&str, Vec<Q2Label>> = BTreeMap::new();
    for r in records {
        groups.entry(r.question_id.as_str()).or_default().push(r.q2);
    }
    let rows: Vec<Vec<Option<Q2Label>>> = groups
        .values()
        .map(|g| {
            g.iter()
                .map(|l| (*l != Q2Label::Skipped).then_some(*l))
                .collect()
        })
        .collect();
    let answered: Vec<Vec<Q2Label>> = rows
        .iter()
        .map(|r| r.iter().flatten().copied().collect::<Vec<_>>())
        .filter(|r| r.len() >= 2)
        .collect();
    if answered.is_empty() {
        return Err(EvalError::NoPairableValues);
    }
    let (mut all, mut maj) = (0usize, 0usize);
    for g in &answered {
        let (a, m) = tally(g);
        all += usize::from(a);
        maj += usize::from(m);
    }
    let q = answered.len() as f64;
    Ok(Q2Agreement {
        questions: answered.len(),
        all_agree_pct: 100.0 * all as f64 / q,
        majority_pct: 100.0 * maj as f64 / q,
        alpha: krippendorff_alpha(&rows, nominal)?,
    })
}
