//! Reference implementations and fixtures shared by the integration tests.
//!
//! The oracles here deliberately avoid the library's code paths: they work
//! from raw parent arrays by walking up to the root, and count things the
//! slow way.
#![allow(dead_code)]

use std::collections::BTreeMap;

use qud_core::eval::{JudgmentRecord, NoReason, Q1Label, Q2Label, SortOfReason};
use qud_core::Document;
use rand::seq::SliceRandom;
use rand::Rng;

/// Uniformly shuffled node order, each node hanging off an earlier one. The
/// root lands anywhere in `1..=n`.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=n).collect();
    order.shuffle(rng);
    let mut parents = vec![0; n];
    for k in 1..n {
        let p = order[rng.random_range(0..k)];
        parents[order[k] - 1] = p;
    }
    parents
}

/// Tree rooted at 1 where every parent precedes its child, as in QUD trees.
pub fn random_forward_tree<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut parents = vec![0; n];
    for i in 2..=n {
        parents[i - 1] = rng.random_range(1..i);
    }
    parents
}

fn ancestors(parents: &[usize], node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = parents[node - 1];
    while cur != 0 {
        out.push(cur);
        cur = parents[cur - 1];
    }
    out
}

fn is_in_yield(parents: &[usize], top: usize, node: usize) -> bool {
    node == top || ancestors(parents, node).contains(&top)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleStats {
    pub height: f64,
    pub norm_arc_len: f64,
    pub prop_leaf: f64,
    pub avg_depth: f64,
    pub right_branch: f64,
}

pub fn oracle_stats(parents: &[usize]) -> OracleStats {
    let n = parents.len();
    let depth: Vec<usize> = (1..=n).map(|i| ancestors(parents, i).len()).collect();
    let leaves = (1..=n).filter(|i| !parents.contains(i)).count();
    let arcs: Vec<usize> = (1..=n)
        .filter(|&i| parents[i - 1] != 0)
        .map(|i| i.abs_diff(parents[i - 1]))
        .collect();
    let right = (2..=n).filter(|&i| parents[i - 1] == i - 1).count();
    let nf = n as f64;
    OracleStats {
        height: *depth.iter().max().unwrap() as f64,
        norm_arc_len: if arcs.is_empty() {
            0.0
        } else {
            arcs.iter().sum::<usize>() as f64 / arcs.len() as f64 / nf
        },
        prop_leaf: leaves as f64 / nf,
        avg_depth: depth.iter().sum::<usize>() as f64 / nf,
        right_branch: right as f64 / nf,
    }
}

/// (max, total) of per-node yield discontinuities, counting block starts
/// over a membership scan of 1..=n.
pub fn oracle_gaps(parents: &[usize]) -> (usize, usize) {
    let n = parents.len();
    let mut max = 0;
    let mut total = 0;
    for top in 1..=n {
        let member: Vec<bool> = (1..=n).map(|j| is_in_yield(parents, top, j)).collect();
        let blocks = (0..n)
            .filter(|&k| member[k] && (k == 0 || !member[k - 1]))
            .count();
        max = max.max(blocks - 1);
        total += blocks - 1;
    }
    (max, total)
}

/// Nominal alpha through an explicit coincidence matrix:
/// `1 - (N - 1) * sum_{c != k} o_ck / sum_{c != k} n_c n_k`.
pub fn oracle_alpha_nominal(matrix: &[Vec<Option<u8>>]) -> Option<f64> {
    let mut o: BTreeMap<(u8, u8), f64> = BTreeMap::new();
    for row in matrix {
        let vals: Vec<u8> = row.iter().flatten().copied().collect();
        let m = vals.len();
        if m < 2 {
            continue;
        }
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    *o.entry((vals[a], vals[b])).or_default() += 1.0 / (m - 1) as f64;
                }
            }
        }
    }
    let mut nc: BTreeMap<u8, f64> = BTreeMap::new();
    for (&(c, _), &v) in &o {
        *nc.entry(c).or_default() += v;
    }
    let total: f64 = nc.values().sum();
    if total < 2.0 - 1e-9 {
        return None;
    }
    let disagree: f64 = o.iter().filter(|((c, k), _)| c != k).map(|(_, v)| v).sum();
    if disagree == 0.0 {
        return Some(1.0);
    }
    let mut expected = 0.0;
    for (c, a) in &nc {
        for (k, b) in &nc {
            if c != k {
                expected += a * b;
            }
        }
    }
    Some(1.0 - (total - 1.0) * disagree / expected)
}

/// Response counts reproducing the "Full" rows of the two judgment tables:
/// 1000 questions, 3 judges each.
pub const Q1_FULL_COUNTS: [(Q1Label, usize); 9] = [
    (Q1Label::Yes, 2145),
    (Q1Label::MinorError, 126),
    (Q1Label::SortOf(SortOfReason::HalluMinor), 213),
    (Q1Label::SortOf(SortOfReason::AnsMinor), 120),
    (Q1Label::No(NoReason::Nonsense), 192),
    (Q1Label::No(NoReason::IrrelevantAnchor), 6),
    (Q1Label::No(NoReason::IrrelevantSentence), 90),
    (Q1Label::No(NoReason::HalluMajor), 72),
    (Q1Label::No(NoReason::AnsMajor), 36),
];

pub const Q2_FULL_COUNTS: [(Q2Label, usize); 5] = [
    (Q2Label::Yes, 1576),
    (Q2Label::NotMainPoint, 62),
    (Q2Label::SortOf, 210),
    (Q2Label::No, 152),
    (Q2Label::Skipped, 271),
];

pub const Q1_FULL_ROW: [f64; 9] = [71.5, 4.2, 7.1, 4.0, 6.4, 0.2, 3.0, 2.4, 1.2];
pub const Q2_FULL_ROW: [f64; 4] = [78.8, 3.1, 10.5, 7.6];

fn expand<T: Copy>(counts: &[(T, usize)]) -> Vec<T> {
    counts
        .iter()
        .flat_map(|&(l, c)| std::iter::repeat_n(l, c))
        .collect()
}

/// Acceptable labels fill the first 757 questions, so exactly those are
/// eligible for the answer-question table; the remaining 243 questions
/// carry only unacceptable labels and a skipped Q2.
pub fn table_full_fixture() -> Vec<JudgmentRecord> {
    let q1 = expand(&Q1_FULL_COUNTS);
    let q2 = expand(&Q2_FULL_COUNTS);
    let acceptable = q1.iter().filter(|l| l.is_acceptable()).count();
    assert_eq!(acceptable, q2.len());
    q1.chunks(3)
        .enumerate()
        .flat_map(|(qi, triple)| {
            let q2 = &q2;
            triple.iter().enumerate().map(move |(j, &label)| {
                let flat = qi * 3 + j;
                JudgmentRecord {
                    question_id: format!("art{:03}:{}", qi / 20, qi % 20 + 2),
                    judge_id: format!("judge{j}"),
                    q1: label,
                    q2: if flat < acceptable {
                        q2[flat]
                    } else {
                        Q2Label::Skipped
                    },
                    system: Some("Full".to_owned()),
                }
            })
        })
        .collect()
}

pub fn doc(id: &str, n: usize) -> Document {
    Document::from_texts(
        id,
        (1..=n).map(|i| format!("Sentence {i} reports that event {i} happened in the city.")),
    )
    .unwrap()
}

#[derive(serde::Deserialize)]
struct EncodingCase {
    name: String,
    sentences: Vec<String>,
    kind: String,
    answer: usize,
    #[serde(default)]
    anchor: usize,
    #[serde(default)]
    spans: Vec<qud_core::encoding::EntitySpan>,
    #[serde(default)]
    question: Option<String>,
    #[serde(default)]
    offsets: BTreeMap<usize, (usize, usize)>,
}

pub fn golden_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Render every stored encoding case and compare byte-for-byte with its
/// golden file. Returns the number of cases checked.
pub fn check_encoding_goldens(dir: &std::path::Path) -> Result<usize, String> {
    use qud_core::encoding::{encode_anchor_query, encode_generation_prompt};
    let cases: Vec<EncodingCase> = serde_json::from_str(
        &std::fs::read_to_string(dir.join("cases.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    for c in &cases {
        let doc = Document::from_texts(c.name.clone(), &c.sentences).map_err(|e| e.to_string())?;
        let rendered = match c.kind.as_str() {
            "anchor" => {
                let enc = encode_anchor_query(&doc, c.answer).map_err(|e| e.to_string())?;
                for (i, &(s, e)) in &c.offsets {
                    let got = enc.sentence_marker_offsets.get(i).cloned();
                    if got != Some(s..e) {
                        return Err(format!(
                            "{}: offsets of sentence {i}: {got:?} != {s}..{e}",
                            c.name
                        ));
                    }
                }
                enc.text
            }
            "generation" => {
                encode_generation_prompt(&doc, c.answer, c.anchor, &c.spans, c.question.as_deref())
                    .map_err(|e| e.to_string())?
                    .render()
            }
            other => return Err(format!("{}: unknown kind {other}", c.name)),
        };
        let want = std::fs::read_to_string(dir.join(format!("{}.txt", c.name)))
            .map_err(|e| e.to_string())?;
        if format!("{rendered}\n") != want {
            return Err(format!(
                "{}: rendering differs\n got: {rendered}\nwant: {want}",
                c.name
            ));
        }
    }
    Ok(cases.len())
}

/// Random sentence plus valid, disjoint entity spans over it.
pub fn random_masking_case<R: Rng>(
    rng: &mut R,
) -> (qud_core::Sentence, Vec<qud_core::encoding::EntitySpan>) {
    const WORDS: [&str; 8] = [
        "the",
        "Senate",
        "voted",
        "on",
        "Tuesday",
        "in",
        "Washington",
        "ÉtéCo",
    ];
    const TYPES: [&str; 4] = ["PER", "ORG", "LOC", "MISC"];
    let len = rng.random_range(1..=25);
    let text: Vec<&str> = (0..len)
        .map(|_| WORDS[rng.random_range(0..WORDS.len())])
        .collect();
    let sentence = qud_core::Sentence::new(1, &text.join(" ")).unwrap();
    let mut spans = Vec::new();
    let mut t = 0;
    while t < len {
        if rng.random_bool(0.3) {
            let end = rng.random_range(t..len.min(t + 3));
            spans.push(qud_core::encoding::EntitySpan {
                sentence_index: 1,
                token_start: t,
                token_end: end,
                entity_type: TYPES[rng.random_range(0..TYPES.len())].to_owned(),
            });
            t = end + 1;
        } else {
            t += 1;
        }
    }
    spans.shuffle(rng);
    (sentence, spans)
}

/// Backend with scripted anchors; everything else comes from the mock.
pub struct ScriptedBackend {
    pub anchors: BTreeMap<usize, usize>,
    pub inner: qud_core::backend::MockBackend,
    pub calls: std::sync::Mutex<Vec<String>>,
}

impl ScriptedBackend {
    pub fn new(anchors: impl IntoIterator<Item = (usize, usize)>, seed: u64) -> Self {
        ScriptedBackend {
            anchors: anchors.into_iter().collect(),
            inner: qud_core::backend::MockBackend::new(seed),
            calls: std::sync::Mutex::new(Vec::new()),
        }
    }

    fn log(&self, id: &str) {
        self.calls.lock().unwrap().push(id.to_owned());
    }
}

mod scripted {
    use qud_core::backend::*;

    impl Backend for super::ScriptedBackend {
        fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
            self.log(&req.request_id);
            let anchor_index = self
                .anchors
                .get(&req.answer_index)
                .copied()
                .unwrap_or(req.answer_index - 1);
            Ok(AnchorResponse {
                request_id: req.request_id.clone(),
                anchor_index,
                scores: None,
            })
        }
        fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
            self.log(&req.request_id);
            self.inner.generate(req)
        }
        fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
            self.log(&req.request_id);
            self.inner.rerank(req)
        }
        fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
            self.log(&req.request_id);
            self.inner.ner(req)
        }
        fn health(&self) -> Result<HealthResponse, BackendError> {
            self.inner.health()
        }
    }
}

/// Random nuclearity tree over `lo..=hi`: binary splits, occasionally a
/// three-way split, each internal node with at least one nucleus.
pub fn random_rst<R: Rng>(
    rng: &mut R,
    lo: usize,
    hi: usize,
    nuc: qud_core::rst::Nuclearity,
) -> qud_core::rst::RstNode {
    use qud_core::rst::{Nuclearity, RstNode};
    const RELATIONS: [&str; 4] = ["elaboration", "cause", "contrast", "list"];
    let relation = RELATIONS[rng.random_range(0..RELATIONS.len())];
    if lo == hi {
        return RstNode::leaf(lo, nuc, relation);
    }
    let width = hi - lo + 1;
    let arity = if width >= 3 && rng.random_bool(0.2) {
        3
    } else {
        2
    };
    let mut cuts: Vec<usize> = (lo + 1..=hi).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<usize> = cuts.into_iter().take(arity - 1).collect();
    cuts.sort_unstable();
    let mut bounds = vec![lo];
    bounds.extend(&cuts);
    bounds.push(hi + 1);
    let mut kinds: Vec<Nuclearity> = (0..arity)
        .map(|_| {
            if rng.random_bool(0.5) {
                Nuclearity::Nucleus
            } else {
                Nuclearity::Satellite
            }
        })
        .collect();
    if !kinds.contains(&Nuclearity::Nucleus) {
        let k = rng.random_range(0..arity);
        kinds[k] = Nuclearity::Nucleus;
    }
    let children = bounds
        .windows(2)
        .zip(kinds)
        .map(|(w, k)| random_rst(rng, w[0], w[1] - 1, k))
        .collect();
    RstNode::node(nuc, relation, children)
}

fn oracle_head(node: &qud_core::rst::RstNode) -> usize {
    if node.children.is_empty() {
        return node.span.0;
    }
    let first_nucleus = node
        .children
        .iter()
        .find(|c| c.nuclearity == qud_core::rst::Nuclearity::Nucleus)
        .expect("validated");
    oracle_head(first_nucleus)
}

/// Parent array by the literal rule: walk from the root towards leaf `e`;
/// the first node headed by `e` is the highest one, and `e` attaches to the
/// head of that node's parent.
pub fn oracle_rst_dep(root: &qud_core::rst::RstNode) -> Vec<usize> {
    let n = root.span.1;
    let mut parents = vec![0; n];
    for e in 1..=n {
        let mut parent_node: Option<&qud_core::rst::RstNode> = None;
        let mut cur = root;
        loop {
            if oracle_head(cur) == e {
                parents[e - 1] = parent_node.map_or(0, oracle_head);
                break;
            }
            parent_node = Some(cur);
            cur = cur
                .children
                .iter()
                .find(|c| c.span.0 <= e && e <= c.span.1)
                .expect("children partition the span");
        }
    }
    parents
}
