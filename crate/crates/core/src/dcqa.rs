//! Loading DCQA-style articles and question annotations.
//!
//! Two line-delimited JSON formats:
//!
//! * articles: `{"article_id": "...", "sentences": [{"index": 1, "text": "..."}, ...]}`
//! * questions: `{"article_id", "worker_id", "answer_sentence_id", "anchor_sentence_id", "question_text"}`
//!
//! [`adapt_release`] maps the per-article JSON layout of the public DCQA
//! release onto these records.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, FormatError};
use crate::model::{normalize_text, Document, DocumentError, QudEntry, QudTree};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("duplicate article_id '{article_id}' (lines {first} and {second})")]
    DuplicateArticle {
        article_id: String,
        first: usize,
        second: usize,
    },
    #[error("question for article '{found}' passed with document '{expected}'")]
    ForeignQuestion { expected: String, found: String },
    #[error("question answers sentence {answer} but the document has {n} sentences")]
    AnswerOutOfDocument { answer: usize, n: usize },
    #[error("release layout: {0}")]
    Release(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub article_id: String,
    pub sentences: Vec<SentenceRecord>,
}

impl From<&Document> for ArticleRecord {
    fn from(doc: &Document) -> Self {
        ArticleRecord {
            article_id: doc.article_id().to_owned(),
            sentences: doc
                .sentences()
                .iter()
                .map(|s| SentenceRecord {
                    index: s.index(),
                    text: s.text().to_owned(),
                })
                .collect(),
        }
    }
}

fn record_to_document(
    path: &Path,
    line: usize,
    rec: ArticleRecord,
) -> Result<Document, IngestError> {
    let pairs: Vec<(usize, String)> = rec
        .sentences
        .into_iter()
        .map(|s| (s.index, s.text))
        .collect();
    Document::from_indexed(rec.article_id, pairs).map_err(|e| {
        let field = match &e {
            DocumentError::Empty => "sentences".to_owned(),
            DocumentError::EmptySentence { index } => format!("sentences[{}].text", index - 1),
            DocumentError::NonContiguous { expected, .. } => {
                format!("sentences[{}].index", expected - 1)
            }
        };
        FormatError::record(path, line, field, e).into()
    })
}

/// One Document per record. An empty file yields an empty list.
pub fn load_articles(path: &Path) -> Result<Vec<Document>, IngestError> {
    let records = io::read_jsonl::<ArticleRecord>(path)?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut docs = Vec::with_capacity(records.len());
    for rec in records {
        if let Some(&first) = seen.get(&rec.value.article_id) {
            return Err(IngestError::DuplicateArticle {
                article_id: rec.value.article_id,
                first,
                second: rec.line,
            });
        }
        seen.insert(rec.value.article_id.clone(), rec.line);
        docs.push(record_to_document(path, rec.line, rec.value)?);
    }
    Ok(docs)
}

pub fn serialize_articles(docs: &[Document]) -> String {
    let records: Vec<ArticleRecord> = docs.iter().map(ArticleRecord::from).collect();
    io::to_jsonl(&[], &records)
}

/// One crowdsourced question: `worker_id` asked `question_text` at
/// `anchor_sentence_id`, answered by `answer_sentence_id`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DcqaQuestion {
    pub article_id: String,
    pub worker_id: String,
    pub answer_sentence_id: usize,
    pub anchor_sentence_id: usize,
    pub question_text: String,
}

impl DcqaQuestion {
    /// Ordering and range problems, if any.
    pub fn check(&self) -> Option<String> {
        if self.answer_sentence_id < 2 {
            Some(format!(
                "answer_sentence_id {} < 2",
                self.answer_sentence_id
            ))
        } else if self.anchor_sentence_id == 0 {
            Some("anchor_sentence_id is 0".to_owned())
        } else if self.anchor_sentence_id >= self.answer_sentence_id {
            Some(format!(
                "anchor {} >= answer {}",
                self.anchor_sentence_id, self.answer_sentence_id
            ))
        } else if self.question_text.trim().is_empty() {
            Some("empty question_text".to_owned())
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct QuestionSet {
    pub questions: Vec<DcqaQuestion>,
    pub rejected: Vec<Rejection>,
    pub warnings: Vec<String>,
}

/// Parse and check question records. Records violating the ordering rule are
/// rejected with a diagnostic; records for articles absent from `docs` are
/// kept with a warning.
pub fn check_questions(
    records: Vec<io::Line<DcqaQuestion>>,
    docs: Option<&[Document]>,
) -> QuestionSet {
    let sizes: Option<HashMap<&str, usize>> =
        docs.map(|d| d.iter().map(|doc| (doc.article_id(), doc.len())).collect());
    let mut out = QuestionSet::default();
    for rec in records {
        let q = rec.value;
        if let Some(reason) = q.check() {
            out.rejected.push(Rejection {
                line: rec.line,
                reason,
            });
            continue;
        }
        if let Some(sizes) = &sizes {
            match sizes.get(q.article_id.as_str()) {
                None => out.warnings.push(format!(
                    "line {}: unknown article_id '{}'",
                    rec.line, q.article_id
                )),
                Some(&n) if q.answer_sentence_id > n => {
                    out.rejected.push(Rejection {
                        line: rec.line,
                        reason: format!("answer {} beyond {} sentences", q.answer_sentence_id, n),
                    });
                    continue;
                }
                Some(_) => {}
            }
        }
        out.questions.push(q);
    }
    out
}

pub fn load_questions(path: &Path, docs: Option<&[Document]>) -> Result<QuestionSet, IngestError> {
    let set = check_questions(io::read_jsonl(path)?, docs);
    for w in &set.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(set)
}

/// A question dropped because its worker already asked one for the same
/// answer sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateQuestion {
    pub worker_id: String,
    pub answer: usize,
    pub question_text: String,
}

/// Per-worker QUD trees for one article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatorTreeSet {
    pub article_id: String,
    pub trees: BTreeMap<String, QudTree>,
    pub duplicates: Vec<DuplicateQuestion>,
}

impl AnnotatorTreeSet {
    /// Answer sentences each worker left without a question.
    pub fn missing(&self) -> BTreeMap<&str, Vec<usize>> {
        self.trees
            .iter()
            .map(|(w, t)| (w.as_str(), t.missing()))
            .filter(|(_, m)| !m.is_empty())
            .collect()
    }
}

/// Group questions by worker into trees over `doc`. When one worker asked
/// several questions for the same answer sentence, the first in input order
/// is kept and the rest are reported.
pub fn build_trees(
    questions: &[DcqaQuestion],
    doc: &Document,
) -> Result<AnnotatorTreeSet, IngestError> {
    let mut trees: BTreeMap<String, QudTree> = BTreeMap::new();
    let mut taken: HashSet<(String, usize)> = HashSet::new();
    let mut duplicates = Vec::new();
    for q in questions {
        if q.article_id != doc.article_id() {
            return Err(IngestError::ForeignQuestion {
                expected: doc.article_id().to_owned(),
                found: q.article_id.clone(),
            });
        }
        if q.answer_sentence_id > doc.len() {
            return Err(IngestError::AnswerOutOfDocument {
                answer: q.answer_sentence_id,
                n: doc.len(),
            });
        }
        if !taken.insert((q.worker_id.clone(), q.answer_sentence_id)) {
            duplicates.push(DuplicateQuestion {
                worker_id: q.worker_id.clone(),
                answer: q.answer_sentence_id,
                question_text: q.question_text.clone(),
            });
            continue;
        }
        let tree = trees.entry(q.worker_id.clone()).or_insert_with(|| QudTree {
            article_id: doc.article_id().to_owned(),
            annotator: Some(q.worker_id.clone()),
            n: doc.len(),
            entries: Vec::new(),
        });
        tree.entries.push(QudEntry {
            answer: q.answer_sentence_id,
            anchor: q.anchor_sentence_id,
            question: normalize_text(&q.question_text),
        });
    }
    for tree in trees.values_mut() {
        tree.entries.sort_by_key(|e| e.answer);
    }
    Ok(AnnotatorTreeSet {
        article_id: doc.article_id().to_owned(),
        trees,
        duplicates,
    })
}

/// Group loaded questions by article and build tree sets for every document.
pub fn build_all_trees(
    questions: &[DcqaQuestion],
    docs: &[Document],
) -> Result<Vec<AnnotatorTreeSet>, IngestError> {
    let mut by_article: HashMap<&str, Vec<DcqaQuestion>> = HashMap::new();
    for q in questions {
        by_article
            .entry(q.article_id.as_str())
            .or_default()
            .push(q.clone());
    }
    docs.iter()
        .filter_map(|d| by_article.get(d.article_id()).map(|qs| build_trees(qs, d)))
        .collect()
}

#[derive(Deserialize)]
struct ReleaseQuestion {
    #[serde(
        alias = "AnchorSentenceID",
        alias = "anchor_sentence_id",
        alias = "anchor"
    )]
    anchor: usize,
    #[serde(
        alias = "AnswerSentenceID",
        alias = "answer_sentence_id",
        alias = "answer"
    )]
    answer: usize,
    #[serde(alias = "Question", alias = "question_text")]
    question: String,
    #[serde(
        default,
        alias = "AnnotatorID",
        alias = "WorkerID",
        alias = "WorkerId",
        alias = "worker_id"
    )]
    worker: Option<serde_json::Value>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ReleaseSentences {
    List(Vec<String>),
    Keyed(BTreeMap<String, String>),
}

#[derive(Deserialize)]
struct ReleaseArticle {
    #[serde(alias = "Sentences", alias = "text")]
    sentences: ReleaseSentences,
    #[serde(alias = "Questions", alias = "annotations", default)]
    questions: Vec<ReleaseQuestion>,
}

/// Map a release file (a JSON object keyed by article id, each value holding
/// `sentences` as a list or an id-keyed map and a `questions` list) onto the
/// canonical records.
pub fn adapt_release(json: &str) -> Result<(Vec<Document>, Vec<DcqaQuestion>), IngestError> {
    let articles: BTreeMap<String, ReleaseArticle> =
        serde_json::from_str(json).map_err(|e| IngestError::Release(e.to_string()))?;
    let mut docs = Vec::new();
    let mut questions = Vec::new();
    for (article_id, art) in articles {
        let texts: Vec<(usize, String)> = match art.sentences {
            ReleaseSentences::List(v) => {
                v.into_iter().enumerate().map(|(i, t)| (i + 1, t)).collect()
            }
            ReleaseSentences::Keyed(m) => {
                let mut v = m
                    .into_iter()
                    .map(|(k, t)| {
                        k.trim().parse::<usize>().map(|i| (i, t)).map_err(|_| {
                            IngestError::Release(format!("{article_id}: bad sentence id '{k}'"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                v.sort_by_key(|(i, _)| *i);
                v
            }
        };
        let doc = Document::from_indexed(article_id.clone(), texts)
            .map_err(|e| IngestError::Release(format!("{article_id}: {e}")))?;
        for q in art.questions {
            let worker = match q.worker {
                Some(serde_json::Value::String(s)) => s,
                Some(v) => v.to_string(),
                None => "unknown".to_owned(),
            };
            questions.push(DcqaQuestion {
                article_id: article_id.clone(),
                worker_id: worker,
                answer_sentence_id: q.answer,
                anchor_sentence_id: q.anchor,
                question_text: q.question,
            });
        }
        docs.push(doc);
    }
    Ok((docs, questions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn q(worker: &str, anchor: usize, answer: usize) -> DcqaQuestion {
        DcqaQuestion {
            article_id: "a".into(),
            worker_id: worker.into(),
            answer_sentence_id: answer,
            anchor_sentence_id: anchor,
            question_text: format!("q {anchor}->{answer}?"),
        }
    }

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_one_article() {
        let f = write_tmp(
            r#"{"article_id":"a","sentences":[{"index":1,"text":"One."},{"index":2,"text":"Two."},{"index":3,"text":"Three."}]}"#,
        );
        let docs = load_articles(f.path()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].len(), 3);
    }

    #[test]
    fn gap_in_sentence_ids_names_line_and_field() {
        let f = write_tmp(
            "# comment\n{\"article_id\":\"a\",\"sentences\":[{\"index\":1,\"text\":\"x\"},{\"index\":2,\"text\":\"y\"},{\"index\":4,\"text\":\"z\"}]}\n",
        );
        let msg = load_articles(f.path()).unwrap_err().to_string();
        assert!(msg.contains(":2: field `sentences[2].index`"), "{msg}");
        assert!(msg.contains("not contiguous"), "{msg}");
    }

    #[test]
    fn empty_file_is_empty_list() {
        let f = write_tmp("");
        assert!(load_articles(f.path()).unwrap().is_empty());
    }

    #[test]
    fn duplicate_article_is_error() {
        let line = r#"{"article_id":"a","sentences":[{"index":1,"text":"x"}]}"#;
        let f = write_tmp(&format!("{line}\n{line}\n"));
        assert!(matches!(
            load_articles(f.path()),
            Err(IngestError::DuplicateArticle {
                first: 1,
                second: 2,
                ..
            })
        ));
    }

    #[test]
    fn ordering_rule_on_questions() {
        let lines = [q("w", 3, 7), q("w", 7, 3), q("w", 3, 3)];
        let text: String = lines
            .iter()
            .map(|q| serde_json::to_string(q).unwrap() + "\n")
            .collect();
        let f = write_tmp(&text);
        let set = load_questions(f.path(), None).unwrap();
        assert_eq!(set.questions, vec![q("w", 3, 7)]);
        assert_eq!(
            set.rejected.iter().map(|r| r.line).collect::<Vec<_>>(),
            vec![2, 3]
        );
    }

    #[test]
    fn unknown_article_is_kept_with_warning() {
        let doc = Document::from_texts("other", ["x", "y"]).unwrap();
        let recs = vec![io::Line {
            line: 1,
            value: q("w", 1, 2),
        }];
        let set = check_questions(recs, Some(std::slice::from_ref(&doc)));
        assert_eq!(set.questions.len(), 1);
        assert_eq!(set.warnings.len(), 1);
    }

    #[test]
    fn complete_partial_and_multiple_workers() {
        let doc = Document::from_texts("a", ["x", "y", "z"]).unwrap();
        let set = build_trees(&[q("A", 1, 2), q("A", 2, 3)], &doc).unwrap();
        assert!(set.trees["A"].validate().is_empty());

        let set = build_trees(&[q("A", 1, 2)], &doc).unwrap();
        assert_eq!(set.missing()["A"], vec![3]);

        let set = build_trees(&[q("A", 1, 2), q("B", 1, 3), q("B", 1, 2)], &doc).unwrap();
        assert_eq!(set.trees.len(), 2);
        assert_eq!(set.trees["B"].entries.len(), 2);
    }

    #[test]
    fn first_question_wins_per_worker_and_answer() {
        let doc = Document::from_texts("a", ["x", "y", "z"]).unwrap();
        let mut second = q("A", 1, 3);
        second.question_text = "later?".into();
        let set = build_trees(&[q("A", 2, 3), second, q("A", 1, 2)], &doc).unwrap();
        assert_eq!(set.trees["A"].entry(3).unwrap().anchor, 2);
        assert_eq!(set.duplicates.len(), 1);
        assert_eq!(set.duplicates[0].question_text, "later?");
    }

    #[test]
    fn release_layout_adapter() {
        let json = r#"{
          "0001": {"sentences": {"1": "First.", "2": "Second.", "3": "Third."},
                   "questions": [{"AnchorSentenceID": 1, "AnswerSentenceID": 3, "Question": "Why?", "AnnotatorID": 7}]},
          "0002": {"sentences": ["A.", "B."], "questions": []}
        }"#;
        let (docs, qs) = adapt_release(json).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].len(), 3);
        assert_eq!(qs[0].worker_id, "7");
        assert_eq!(qs[0].answer_sentence_id, 3);
    }
}
