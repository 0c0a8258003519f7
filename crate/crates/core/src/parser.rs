//! Greedy QUD parsing.
//!
//! Each answer sentence `i >= 2` is handled independently: predict its
//! anchor, optionally mask named entities in `s_i`, sample candidate
//! questions, and keep the reranker's favourite. No structural constraint
//! beyond "anchor precedes answer" is imposed, so crossing edges are fine.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::protocol::{DEFAULT_NUM_SAMPLES, DEFAULT_TOP_P};
use crate::backend::{
    AnchorRequest, Backend, BackendError, Checked, GenerateRequest, NerRequest, RerankRequest,
};
use crate::encoding::{encode_anchor_query, encode_generation_prompt, EncodingError, EntitySpan};
use crate::model::{validate_tree, Document, QudEntry, QudTree, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailPolicy {
    /// Abort the whole parse on the first failing sentence.
    #[default]
    Fast,
    /// Leave the failing sentence without an entry and carry on.
    Skip,
}

impl FromStr for FailPolicy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast" => Ok(FailPolicy::Fast),
            "skip" => Ok(FailPolicy::Skip),
            other => Err(ConfigError::UnknownPolicy(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("num_samples must be >= 1")]
    NumSamples,
    #[error("top_p must lie in (0, 1], got {0}")]
    TopP(f64),
    #[error("parallelism must be >= 1")]
    Parallelism,
    #[error("unknown variant '{0}' (expected full, -reranking or -ner)")]
    UnknownVariant(String),
    #[error("unknown failure policy '{0}' (expected fast or skip)")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseConfig {
    pub num_samples: usize,
    pub top_p: f64,
    pub mask_entities: bool,
    pub rerank: bool,
    pub seed: u64,
    pub fail_policy: FailPolicy,
    /// Worker threads for per-sentence work; 1 means sequential.
    pub parallelism: usize,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig {
            num_samples: DEFAULT_NUM_SAMPLES,
            top_p: DEFAULT_TOP_P,
            mask_entities: true,
            rerank: true,
            seed: 0,
            fail_policy: FailPolicy::Fast,
            parallelism: 1,
        }
    }
}

impl ParseConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_samples == 0 {
            return Err(ConfigError::NumSamples);
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(ConfigError::TopP(self.top_p));
        }
        if self.parallelism == 0 {
            return Err(ConfigError::Parallelism);
        }
        Ok(())
    }
}

/// System configurations compared in human evaluation. The ablations nest:
/// dropping NER masking also drops reranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Full,
    NoRerank,
    NoRerankNoMask,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::NoRerank, Variant::NoRerankNoMask];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "Full",
            Variant::NoRerank => "-Reranking",
            Variant::NoRerankNoMask => "-NER",
        }
    }

    /// `base` with this variant's flags applied; other settings are kept.
    pub fn apply(self, base: &ParseConfig) -> ParseConfig {
        let mut cfg = base.clone();
        match self {
            Variant::Full => {
                cfg.rerank = true;
                cfg.mask_entities = true;
            }
            Variant::NoRerank => {
                cfg.rerank = false;
                cfg.mask_entities = true;
            }
            Variant::NoRerankNoMask => {
                cfg.rerank = false;
                cfg.mask_entities = false;
            }
        }
        cfg
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Variant::Full),
            "-reranking" | "no-rerank" => Ok(Variant::NoRerank),
            "-ner" | "no-rerank-no-mask" => Ok(Variant::NoRerankNoMask),
            _ => Err(ConfigError::UnknownVariant(s.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub question: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceTrace {
    pub answer_index: usize,
    pub anchor_index: usize,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub entities: Vec<EntitySpan>,
    pub candidates: Vec<Candidate>,
    pub winner: usize,
    pub elapsed_ms: f64,
}

impl SentenceTrace {
    pub fn winning_question(&self) -> &str {
        &self.candidates[self.winner].question
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceFailure {
    pub answer_index: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseTrace {
    pub article_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub config: ParseConfig,
    pub sentences: Vec<SentenceTrace>,
    pub failures: Vec<SentenceFailure>,
    pub partial: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutput {
    pub tree: QudTree,
    pub trace: ParseTrace,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sentence {answer_index}: {source}")]
    Backend {
        answer_index: usize,
        #[source]
        source: BackendError,
    },
    #[error("sentence {answer_index}: {source}")]
    Encoding {
        answer_index: usize,
        #[source]
        source: EncodingError,
    },
    #[error("sentence {answer_index}: backend returned no candidate questions")]
    NoCandidates { answer_index: usize },
    #[error("assembled tree is invalid: {0:?}")]
    InvalidTree(Vec<Violation>),
}

impl ParseError {
    pub fn answer_index(&self) -> Option<usize> {
        match self {
            ParseError::Backend { answer_index, .. }
            | ParseError::Encoding { answer_index, .. }
            | ParseError::NoCandidates { answer_index } => Some(*answer_index),
            _ => None,
        }
    }
}

/// Index of the first maximal score.
pub fn select_winner(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

fn request_id(doc: &Document, i: usize, stage: &str) -> String {
    format!("{}:{i}:{stage}", doc.article_id())
}

/// Run anchor prediction, masking, generation and reranking for answer
/// sentence `i`. Responses are invariant-checked.
pub fn parse_sentence<B: Backend>(
    doc: &Document,
    i: usize,
    backend: &B,
    config: &ParseConfig,
) -> Result<SentenceTrace, ParseError> {
    let started = Instant::now();
    let backend = Checked(backend);
    let be = |source| ParseError::Backend {
        answer_index: i,
        source,
    };
    let enc = |source| ParseError::Encoding {
        answer_index: i,
        source,
    };

    let query = encode_anchor_query(doc, i).map_err(enc)?;
    let anchor = backend
        .anchor(&AnchorRequest {
            request_id: request_id(doc, i, "anchor"),
            encoding: query.text,
            n: doc.len(),
            answer_index: i,
        })
        .map_err(be)?
        .anchor_index;

    let answer = doc.sentence(i).expect("2 <= i <= n");
    let entities = if config.mask_entities {
        backend
            .ner(&NerRequest {
                request_id: request_id(doc, i, "ner"),
                sentence_index: i,
                tokens: answer.tokens().to_vec(),
            })
            .map_err(be)?
            .spans
    } else {
        Vec::new()
    };
    let prompt = encode_generation_prompt(doc, i, anchor, &entities, None).map_err(enc)?;

    let questions = backend
        .generate(&GenerateRequest {
            request_id: request_id(doc, i, "generate"),
            prompt: prompt.render(),
            num_samples: config.num_samples,
            top_p: config.top_p,
            seed: Some(config.seed.wrapping_add(i as u64)),
        })
        .map_err(be)?
        .questions;
    if questions.is_empty() {
        return Err(ParseError::NoCandidates { answer_index: i });
    }

    let (candidates, winner) = if config.rerank {
        let anchor_text = doc.sentence(anchor).expect("checked anchor").text();
        let mut candidates = Vec::with_capacity(questions.len());
        for (k, q) in questions.into_iter().enumerate() {
            let score = backend
                .rerank(&RerankRequest {
                    request_id: request_id(doc, i, &format!("rerank{k}")),
                    question: q.clone(),
                    anchor_text: anchor_text.to_owned(),
                    answer_text: answer.text().to_owned(),
                })
                .map_err(be)?
                .score;
            candidates.push(Candidate {
                question: q,
                score: Some(score),
            });
        }
        let scores: Vec<f64> = candidates.iter().filter_map(|c| c.score).collect();
        let winner = select_winner(&scores).expect("non-empty");
        (candidates, winner)
    } else {
        let candidates = questions
            .into_iter()
            .map(|question| Candidate {
                question,
                score: None,
            })
            .collect();
        (candidates, 0)
    };

    Ok(SentenceTrace {
        answer_index: i,
        anchor_index: anchor,
        entities,
        candidates,
        winner,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    })
}

/// Assemble per-sentence outcomes, given in any order, into a tree and a
/// trace ordered by sentence index.
pub fn assemble(
    doc: &Document,
    config: &ParseConfig,
    mut outcomes: Vec<(usize, Result<SentenceTrace, ParseError>)>,
) -> Result<ParseOutput, ParseError> {
    outcomes.sort_by_key(|(i, _)| *i);
    let mut sentences = Vec::new();
    let mut failures = Vec::new();
    for (i, outcome) in outcomes {
        match outcome {
            Ok(t) => sentences.push(t),
            Err(e) if config.fail_policy == FailPolicy::Fast => return Err(e),
            Err(e) => failures.push(SentenceFailure {
                answer_index: i,
                error: e.to_string(),
            }),
        }
    }
    let entries = sentences
        .iter()
        .map(|t| QudEntry {
            answer: t.answer_index,
            anchor: t.anchor_index,
            question: t.winning_question().to_owned(),
        })
        .collect();
    let tree = QudTree::new(doc.article_id(), doc.len(), entries);
    let violations: Vec<_> = validate_tree(&tree, doc)
        .into_iter()
        .filter(|v| !(matches!(v, Violation::MissingEntry { index } if failures.iter().any(|f| f.answer_index == *index))))
        .collect();
    if !violations.is_empty() {
        return Err(ParseError::InvalidTree(violations));
    }
    let mut notes = Vec::new();
    if doc.len() == 1 {
        notes.push("single-sentence document: root only".to_owned());
    }
    let partial = !failures.is_empty();
    if partial {
        notes.push(format!(
            "partial tree: {} sentence(s) failed",
            failures.len()
        ));
    }
    Ok(ParseOutput {
        tree,
        trace: ParseTrace {
            article_id: doc.article_id().to_owned(),
            variant: None,
            config: config.clone(),
            sentences,
            failures,
            partial,
            notes,
        },
    })
}

/// Parse a whole document.
pub fn parse<B: Backend>(
    doc: &Document,
    backend: &B,
    config: &ParseConfig,
) -> Result<ParseOutput, ParseError> {
    config.validate()?;
    let indices: Vec<usize> = (2..=doc.len()).collect();
    let outcomes: Vec<(usize, Result<SentenceTrace, ParseError>)> = if config.parallelism > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .expect("thread pool");
        pool.install(|| {
            indices
                .par_iter()
                .map(|&i| (i, parse_sentence(doc, i, backend, config)))
                .collect()
        })
    } else {
        let mut out = Vec::with_capacity(indices.len());
        for i in indices {
            let r = parse_sentence(doc, i, backend, config);
            let stop = r.is_err() && config.fail_policy == FailPolicy::Fast;
            out.push((i, r));
            if stop {
                break;
            }
        }
        out
    };
    assemble(doc, config, outcomes)
}

/// Parse with one of the evaluation variants; the trace is tagged with it.
pub fn parse_variant<B: Backend>(
    doc: &Document,
    backend: &B,
    base: &ParseConfig,
    variant: Variant,
) -> Result<ParseOutput, ParseError> {
    let mut out = parse(doc, backend, &variant.apply(base))?;
    out.trace.variant = Some(variant.name().to_owned());
    Ok(out)
}
