//! Marker-annotated plain-text inputs for the anchor and question models.
//!
//! Renderings are byte-stable: the serving layer maps the literal markers
//! below onto its tokenizer's special tokens.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Document, Sentence};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const SOS: &str = "[sos]";
pub const ANCHOR_START: &str = "[A_START]";
pub const ANCHOR_END: &str = "[A_END]";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("answer index {answer} outside 2..={n}")]
    AnswerOutOfRange { answer: usize, n: usize },
    #[error("anchor index {anchor} must satisfy 1 <= anchor < answer ({answer})")]
    AnchorOutOfRange { anchor: usize, answer: usize },
    #[error("entity span {start}..={end} invalid for sentence {sentence} with {len} tokens")]
    SpanOutOfRange {
        sentence: usize,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("entity span for sentence {span} applied to sentence {sentence}")]
    SpanSentenceMismatch { span: usize, sentence: usize },
    #[error("entity spans overlap at token {token} of sentence {sentence}")]
    OverlappingSpans { sentence: usize, token: usize },
}

/// The anchor-model input plus where each `[sos] <id>` marker sits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchorQueryEncoding {
    pub text: String,
    /// Character (not byte) ranges of each sentence's `[sos] <id>` prefix.
    pub sentence_marker_offsets: BTreeMap<usize, Range<usize>>,
}

/// `[CLS] <answer> [SEP] [sos] 1 <s1> [sos] 2 <s2> ...` over the whole document.
pub fn encode_anchor_query(
    doc: &Document,
    answer_index: usize,
) -> Result<AnchorQueryEncoding, EncodingError> {
    let n = doc.len();
    if answer_index < 2 || answer_index > n {
        return Err(EncodingError::AnswerOutOfRange {
            answer: answer_index,
            n,
        });
    }
    let answer = doc.sentence(answer_index).expect("range checked");
    let mut text = format!("{CLS} {} {SEP}", answer.text());
    let mut chars = text.chars().count();
    let mut offsets = BTreeMap::new();
    for s in doc.sentences() {
        let marker = format!("{SOS} {}", s.index());
        let start = chars + 1;
        let end = start + marker.chars().count();
        offsets.insert(s.index(), start..end);
        text.push(' ');
        text.push_str(&marker);
        text.push(' ');
        text.push_str(s.text());
        chars = end + 1 + s.text().chars().count();
    }
    Ok(AnchorQueryEncoding {
        text,
        sentence_marker_offsets: offsets,
    })
}

/// A named-entity mention over `token_start..=token_end` of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub sentence_index: usize,
    pub token_start: usize,
    pub token_end: usize,
    pub entity_type: String,
}

/// Check spans against a sentence of `len` tokens: in range, right sentence,
/// pairwise disjoint.
pub fn check_spans(
    sentence_index: usize,
    len: usize,
    spans: &[EntitySpan],
) -> Result<(), EncodingError> {
    let mut owner = vec![false; len];
    for sp in spans {
        if sp.sentence_index != sentence_index {
            return Err(EncodingError::SpanSentenceMismatch {
                span: sp.sentence_index,
                sentence: sentence_index,
            });
        }
        if sp.token_start > sp.token_end || sp.token_end >= len {
            return Err(EncodingError::SpanOutOfRange {
                sentence: sentence_index,
                start: sp.token_start,
                end: sp.token_end,
                len,
            });
        }
        for (t, taken) in owner
            .iter_mut()
            .enumerate()
            .take(sp.token_end + 1)
            .skip(sp.token_start)
        {
            if *taken {
                return Err(EncodingError::OverlappingSpans {
                    sentence: sentence_index,
                    token: t,
                });
            }
            *taken = true;
        }
    }
    Ok(())
}

/// Replace every entity token with its entity type, one label per token.
pub fn mask_entities(sentence: &Sentence, spans: &[EntitySpan]) -> Result<String, EncodingError> {
    let tokens = sentence.tokens();
    check_spans(sentence.index(), tokens.len(), spans)?;
    let mut out: Vec<&str> = tokens.iter().map(String::as_str).collect();
    for sp in spans {
        for slot in &mut out[sp.token_start..=sp.token_end] {
            *slot = &sp.entity_type;
        }
    }
    Ok(out.join(" "))
}

/// The four-part question-generation input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationPrompt {
    /// Sentences before the answer, anchor wrapped in `[A_START] ... [A_END]`.
    pub context_part: String,
    pub anchor_part: String,
    /// Answer sentence after entity masking.
    pub answer_part: String,
    /// Present only for training instances.
    pub question_part: Option<String>,
}

impl GenerationPrompt {
    /// `<context> [SEP] <anchor> [SEP] <answer>[ [SEP] <question>]`
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} {SEP} {} {SEP} {}",
            self.context_part, self.anchor_part, self.answer_part
        );
        if let Some(q) = &self.question_part {
            out.push_str(&format!(" {SEP} {q}"));
        }
        out
    }

    /// Split a rendering back into its parts. Only unambiguous when no
    /// sentence contains a literal `[SEP]`.
    pub fn parse(rendering: &str) -> Option<Self> {
        let delim = format!(" {SEP} ");
        let parts: Vec<&str> = rendering.split(delim.as_str()).collect();
        match parts.as_slice() {
            [c, a, s] => Some(GenerationPrompt {
                context_part: (*c).to_owned(),
                anchor_part: (*a).to_owned(),
                answer_part: (*s).to_owned(),
                question_part: None,
            }),
            [c, a, s, q] => Some(GenerationPrompt {
                context_part: (*c).to_owned(),
                anchor_part: (*a).to_owned(),
                answer_part: (*s).to_owned(),
                question_part: Some((*q).to_owned()),
            }),
            _ => None,
        }
    }
}

pub fn encode_generation_prompt(
    doc: &Document,
    answer_index: usize,
    anchor_index: usize,
    spans: &[EntitySpan],
    question: Option<&str>,
) -> Result<GenerationPrompt, EncodingError> {
    let n = doc.len();
    if answer_index < 2 || answer_index > n {
        return Err(EncodingError::AnswerOutOfRange {
            answer: answer_index,
            n,
        });
    }
    if anchor_index == 0 || anchor_index >= answer_index {
        return Err(EncodingError::AnchorOutOfRange {
            anchor: anchor_index,
            answer: answer_index,
        });
    }
    let context_part = doc.sentences()[..answer_index - 1]
        .iter()
        .map(|s| {
            if s.index() == anchor_index {
                format!("{ANCHOR_START} {} {ANCHOR_END}", s.text())
            } else {
                s.text().to_owned()
            }
        })
        .collect::<Vec<_>>()
        .join(" ");
    let anchor = doc.sentence(anchor_index).expect("range checked");
    let answer = doc.sentence(answer_index).expect("range checked");
    Ok(GenerationPrompt {
        context_part,
        anchor_part: anchor.text().to_owned(),
        answer_part: mask_entities(answer, spans)?,
        question_part: question.map(str::to_owned),
    })
}

/// A stored rendering case: a small document plus the indices to encode.
/// Without `anchor` the case renders the anchor query, otherwise the
/// generation prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingCase {
    pub name: String,
    pub sentences: Vec<String>,
    pub answer: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<EntitySpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<String>,
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case '{0}': {1}")]
    Document(String, crate::model::DocumentError),
    #[error("case '{0}': {1}")]
    Encoding(String, EncodingError),
}

impl EncodingCase {
    pub fn render(&self) -> Result<String, CaseError> {
        let doc = Document::from_texts(self.name.clone(), &self.sentences)
            .map_err(|e| CaseError::Document(self.name.clone(), e))?;
        let enc = |e| CaseError::Encoding(self.name.clone(), e);
        match self.anchor {
            None => Ok(encode_anchor_query(&doc, self.answer).map_err(enc)?.text),
            Some(a) => Ok(encode_generation_prompt(
                &doc,
                self.answer,
                a,
                &self.spans,
                self.question.as_deref(),
            )
            .map_err(enc)?
            .render()),
        }
    }
}
