//! Agreement between predicted anchors and human anchors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dcqa::DcqaQuestion;
use crate::model::QudTree;

/// Key of one answer sentence: `(article_id, answer_index)`.
pub type AnswerKey = (String, usize);

/// One annotator's anchor for one answer sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnchor {
    pub article_id: String,
    pub answer: usize,
    pub annotator: String,
    pub anchor: usize,
}

impl From<&DcqaQuestion> for GoldAnchor {
    fn from(q: &DcqaQuestion) -> Self {
        GoldAnchor {
            article_id: q.article_id.clone(),
            answer: q.answer_sentence_id,
            annotator: q.worker_id.clone(),
            anchor: q.anchor_sentence_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorAgreement {
    pub instances: usize,
    pub matches: usize,
    pub agreement: f64,
    /// Gold instances without any prediction; they count as mismatches.
    pub missing: Vec<AnswerKey>,
}

/// Predicted anchors keyed by answer sentence.
pub fn predictions_from_trees(trees: &[QudTree]) -> BTreeMap<AnswerKey, usize> {
    trees
        .iter()
        .flat_map(|t| {
            t.entries
                .iter()
                .map(|e| ((t.article_id.clone(), e.answer), e.anchor))
        })
        .collect()
}

/// Gold instances from annotator trees, one per (annotator, answer).
pub fn gold_from_trees(trees: &[QudTree]) -> Vec<GoldAnchor> {
    trees
        .iter()
        .flat_map(|t| {
            t.entries.iter().map(|e| GoldAnchor {
                article_id: t.article_id.clone(),
                answer: e.answer,
                annotator: t.annotator.clone().unwrap_or_default(),
                anchor: e.anchor,
            })
        })
        .collect()
}

/// Fraction of gold instances whose anchor equals the prediction. Each
/// annotator's annotation is its own instance.
pub fn anchor_agreement(
    predicted: &BTreeMap<AnswerKey, usize>,
    gold: &[GoldAnchor],
) -> Result<AnchorAgreement, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut matches = 0;
    let mut missing = Vec::new();
    for g in gold {
        let key = (g.article_id.clone(), g.answer);
        match predicted.get(&key) {
            Some(&p) if p == g.anchor => matches += 1,
            Some(_) => {}
            None => missing.push(key),
        }
    }
    missing.sort();
    missing.dedup();
    Ok(AnchorAgreement {
        instances: gold.len(),
        matches,
        agreement: matches as f64 / gold.len() as f64,
        missing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gold(answer: usize, annotator: &str, anchor: usize) -> GoldAnchor {
        GoldAnchor {
            article_id: "a".into(),
            answer,
            annotator: annotator.into(),
            anchor,
        }
    }

    #[test]
    fn per_annotator_instances() {
        let pred = BTreeMap::from([(("a".to_owned(), 3), 1)]);
        let r = anchor_agreement(&pred, &[gold(3, "x", 1), gold(3, "y", 2)]).unwrap();
        assert_eq!(r.agreement, 0.5);
        let r = anchor_agreement(&pred, &[gold(3, "x", 1)]).unwrap();
        assert_eq!(r.agreement, 1.0);
    }

    #[test]
    fn missing_prediction_is_mismatch() {
        let pred = BTreeMap::from([(("a".to_owned(), 3), 1)]);
        let r = anchor_agreement(&pred, &[gold(3, "x", 1), gold(4, "x", 2)]).unwrap();
        assert_eq!(r.matches, 1);
        assert_eq!(r.instances, 2);
        assert_eq!(r.missing, vec![("a".to_owned(), 4)]);
        assert_eq!(anchor_agreement(&pred, &[]), Err(EvalError::Empty));
    }
}
