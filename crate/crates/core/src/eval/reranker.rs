//! Reranker training examples and the percentile-rank metric.

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::dcqa::DcqaQuestion;
use crate::model::Document;

/// One (question, anchor, answer) triple with its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RerankExample {
    pub article_id: String,
    pub question: String,
    pub anchor_index: usize,
    pub answer_index: usize,
    pub label: bool,
}

/// Negatives for one gold question: the anchor swapped with every other
/// sentence, then the answer swapped with every other sentence. Exactly
/// `2 * (n - 1)` examples, unfiltered: a swap may produce a pair that is
/// gold for another worker, or one where the anchor follows the answer.
pub fn synth_negatives(q: &DcqaQuestion, doc: &Document) -> Result<Vec<RerankExample>, EvalError> {
    let n = doc.len();
    if n < 2 {
        return Err(EvalError::TooFewSentences { n });
    }
    if q.article_id != doc.article_id() {
        return Err(EvalError::ForeignQuestion {
            expected: doc.article_id().to_owned(),
            found: q.article_id.clone(),
        });
    }
    for index in [q.anchor_sentence_id, q.answer_sentence_id] {
        if index == 0 || index > n {
            return Err(EvalError::SentenceOutOfRange { index, n });
        }
    }
    let make = |anchor_index, answer_index| RerankExample {
        article_id: q.article_id.clone(),
        question: q.question_text.clone(),
        anchor_index,
        answer_index,
        label: false,
    };
    let anchors = (1..=n)
        .filter(|&k| k != q.anchor_sentence_id)
        .map(|k| make(k, q.answer_sentence_id));
    let answers = (1..=n)
        .filter(|&k| k != q.answer_sentence_id)
        .map(|k| make(q.anchor_sentence_id, k));
    Ok(anchors.chain(answers).collect())
}

/// The gold example followed by its negatives.
pub fn training_examples(
    q: &DcqaQuestion,
    doc: &Document,
) -> Result<Vec<RerankExample>, EvalError> {
    let mut out = vec![RerankExample {
        article_id: q.article_id.clone(),
        question: q.question_text.clone(),
        anchor_index: q.anchor_sentence_id,
        answer_index: q.answer_sentence_id,
        label: true,
    }];
    out.extend(synth_negatives(q, doc)?);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct RerankEvalInstance {
    gold_rank: usize,
    num_options: usize,
}

#[derive(Deserialize)]
struct RawInstance {
    gold_rank: usize,
    num_options: usize,
}

impl TryFrom<RawInstance> for RerankEvalInstance {
    type Error = EvalError;
    fn try_from(r: RawInstance) -> Result<Self, Self::Error> {
        RerankEvalInstance::new(r.gold_rank, r.num_options)
    }
}

impl RerankEvalInstance {
    /// `gold_rank` is 1-based.
    pub fn new(gold_rank: usize, num_options: usize) -> Result<Self, EvalError> {
        if num_options < 2 || gold_rank == 0 || gold_rank > num_options {
            return Err(EvalError::BadInstance {
                gold_rank,
                num_options,
            });
        }
        Ok(Self {
            gold_rank,
            num_options,
        })
    }

    pub fn gold_rank(&self) -> usize {
        self.gold_rank
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    /// `(rank - 1) / (options - 1)`: 0 for first place, 1 for last.
    pub fn fraction(&self) -> f64 {
        (self.gold_rank - 1) as f64 / (self.num_options - 1) as f64
    }
}

/// 1-based rank of `scores[gold]` when sorted descending. Ties go to the
/// lower index, matching how the parser picks a winner.
pub fn gold_rank(scores: &[f64], gold: usize) -> Result<RerankEvalInstance, EvalError> {
    let Some(&g) = scores.get(gold) else {
        return Err(EvalError::BadInstance {
            gold_rank: gold + 1,
            num_options: scores.len(),
        });
    };
    let ahead = scores
        .iter()
        .enumerate()
        .filter(|&(j, &s)| s > g || (s == g && j < gold))
        .count();
    RerankEvalInstance::new(ahead + 1, scores.len())
}

/// Mean percentile of the gold option, as a percentage. Lower is better.
/// The sum runs in sorted order so the result does not depend on instance
/// order.
pub fn rerank_percentile(instances: &[RerankEvalInstance]) -> Result<f64, EvalError> {
    if instances.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut fractions: Vec<f64> = instances.iter().map(RerankEvalInstance::fraction).collect();
    fractions.sort_by(f64::total_cmp);
    let sum: f64 = fractions.iter().sum();
    Ok(100.0 * sum / instances.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn question(anchor: usize, answer: usize) -> DcqaQuestion {
        DcqaQuestion {
            article_id: "a".into(),
            worker_id: "w".into(),
            answer_sentence_id: answer,
            anchor_sentence_id: anchor,
            question_text: "Why?".into(),
        }
    }

    #[test]
    fn negative_counts() {
        let doc = Document::from_texts("a", ["s1", "s2", "s3", "s4", "s5"]).unwrap();
        let neg = synth_negatives(&question(2, 4), &doc).unwrap();
        assert_eq!(neg.len(), 8);
        assert!(neg.iter().all(|e| !e.label));
        assert!(neg
            .iter()
            .any(|e| e.anchor_index == 5 && e.answer_index == 4));
        let two = Document::from_texts("a", ["s1", "s2"]).unwrap();
        assert_eq!(synth_negatives(&question(1, 2), &two).unwrap().len(), 2);
        let one = Document::from_texts("a", ["s1"]).unwrap();
        assert_eq!(
            synth_negatives(&question(1, 2), &one),
            Err(EvalError::TooFewSentences { n: 1 })
        );
        assert_eq!(training_examples(&question(1, 2), &two).unwrap().len(), 3);
    }

    #[test]
    fn percentile() {
        let first = RerankEvalInstance::new(1, 11).unwrap();
        let mid = RerankEvalInstance::new(6, 11).unwrap();
        assert_eq!(rerank_percentile(&[first]).unwrap(), 0.0);
        assert_eq!(rerank_percentile(&[mid]).unwrap(), 50.0);
        assert_eq!(rerank_percentile(&[first, mid]).unwrap(), 25.0);
        assert!(RerankEvalInstance::new(1, 1).is_err());
        assert!(RerankEvalInstance::new(3, 2).is_err());
    }

    #[test]
    fn ranks() {
        assert_eq!(gold_rank(&[0.1, 0.9, 0.5], 2).unwrap().gold_rank(), 2);
        assert_eq!(gold_rank(&[0.5, 0.5], 1).unwrap().gold_rank(), 2);
        assert_eq!(gold_rank(&[0.5, 0.5], 0).unwrap().gold_rank(), 1);
    }
}
