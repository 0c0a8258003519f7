//! Evaluation: judgment aggregation, agreement, reranker metrics and anchor
//! agreement.

pub mod aggregate;
pub mod agreement;
pub mod alpha;
pub mod anchors;
pub mod labels;
pub mod reranker;

use thiserror::Error;

pub use aggregate::{
    aggregate_q1, aggregate_q2, aggregate_q2_eligible, q2_subset, Q1Table, Q2Table,
};
pub use agreement::{agreement_summary, q2_agreement, AgreementSummary, Q2Agreement};
pub use alpha::{krippendorff_alpha, masi_distance, nominal};
pub use anchors::{anchor_agreement, AnchorAgreement, GoldAnchor};
pub use labels::{JudgmentRecord, NoReason, Q1Coarse, Q1Label, Q2Label, SortOfReason};
pub use reranker::{
    gold_rank, rerank_percentile, synth_negatives, RerankEvalInstance, RerankExample,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no records")]
    Empty,
    #[error("empty denominator: every response was skipped")]
    EmptyDenominator,
    #[error("uneven judge counts: expected {expected} per question, found {}", fmt_odd(.odd))]
    UnevenJudges {
        expected: usize,
        odd: Vec<(String, usize)>,
    },
    #[error("no pairable values: need at least two values on one item")]
    NoPairableValues,
    #[error("document has {n} sentence(s); need at least 2")]
    TooFewSentences { n: usize },
    #[error("question belongs to article '{found}', not '{expected}'")]
    ForeignQuestion { expected: String, found: String },
    #[error("sentence {index} outside document of {n} sentences")]
    SentenceOutOfRange { index: usize, n: usize },
    #[error("invalid rerank instance: gold rank {gold_rank} of {num_options} options")]
    BadInstance {
        gold_rank: usize,
        num_options: usize,
    },
}

fn fmt_odd(odd: &[(String, usize)]) -> String {
    odd.iter()
        .map(|(q, c)| format!("{q} ({c})"))
        .collect::<Vec<_>>()
        .join(", ")
}
