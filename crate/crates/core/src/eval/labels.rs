//! Human-judgment label sets.
//!
//! Q1 asks whether the generated question is reasonable given the context up
//! to the anchor; Q2 asks whether the answer sentence answers it. Labels are
//! written in files as `Yes`, `MinorError`, `SortOf/HalluMinor`,
//! `No/IrrelevantAnchor`, and so on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} label '{label}'")]
pub struct LabelError {
    pub kind: &'static str,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SortOfReason {
    /// minor hallucination
    HalluMinor,
    /// minor answer leakage
    AnsMinor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoReason {
    Nonsense,
    IrrelevantAnchor,
    IrrelevantSentence,
    HalluMajor,
    AnsMajor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Q1Label {
    Yes,
    MinorError,
    SortOf(SortOfReason),
    No(NoReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Q1Coarse {
    Yes,
    MinorError,
    SortOf,
    No,
}

impl Q1Coarse {
    pub const ALL: [Q1Coarse; 4] = [
        Q1Coarse::Yes,
        Q1Coarse::MinorError,
        Q1Coarse::SortOf,
        Q1Coarse::No,
    ];

    pub fn header(self) -> &'static str {
        match self {
            Q1Coarse::Yes => "Yes",
            Q1Coarse::MinorError => "Minor error",
            Q1Coarse::SortOf => "Sort of",
            Q1Coarse::No => "No",
        }
    }
}

impl Q1Label {
    /// Leaf labels in report column order.
    pub const ALL: [Q1Label; 9] = [
        Q1Label::Yes,
        Q1Label::MinorError,
        Q1Label::SortOf(SortOfReason::HalluMinor),
        Q1Label::SortOf(SortOfReason::AnsMinor),
        Q1Label::No(NoReason::Nonsense),
        Q1Label::No(NoReason::IrrelevantAnchor),
        Q1Label::No(NoReason::IrrelevantSentence),
        Q1Label::No(NoReason::HalluMajor),
        Q1Label::No(NoReason::AnsMajor),
    ];

    pub fn coarse(self) -> Q1Coarse {
        match self {
            Q1Label::Yes => Q1Coarse::Yes,
            Q1Label::MinorError => Q1Coarse::MinorError,
            Q1Label::SortOf(_) => Q1Coarse::SortOf,
            Q1Label::No(_) => Q1Coarse::No,
        }
    }

    /// Acceptable enough for the answer question to be asked of it.
    pub fn is_acceptable(self) -> bool {
        matches!(self, Q1Label::Yes | Q1Label::MinorError)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Q1Label::Yes => "Yes",
            Q1Label::MinorError => "MinorError",
            Q1Label::SortOf(SortOfReason::HalluMinor) => "SortOf/HalluMinor",
            Q1Label::SortOf(SortOfReason::AnsMinor) => "SortOf/AnsMinor",
            Q1Label::No(NoReason::Nonsense) => "No/Nonsense",
            Q1Label::No(NoReason::IrrelevantAnchor) => "No/IrrelevantAnchor",
            Q1Label::No(NoReason::IrrelevantSentence) => "No/IrrelevantSentence",
            Q1Label::No(NoReason::HalluMajor) => "No/HalluMajor",
            Q1Label::No(NoReason::AnsMajor) => "No/AnsMajor",
        }
    }

    /// Short column header used in printed tables.
    pub fn header(self) -> &'static str {
        match self {
            Q1Label::Yes => "Yes",
            Q1Label::MinorError => "Minor",
            Q1Label::SortOf(SortOfReason::HalluMinor) => "Hallu.(m)",
            Q1Label::SortOf(SortOfReason::AnsMinor) => "Ans.(m)",
            Q1Label::No(NoReason::Nonsense) => "Nonsense",
            Q1Label::No(NoReason::IrrelevantAnchor) => "Irre.(a)",
            Q1Label::No(NoReason::IrrelevantSentence) => "Irre.(s)",
            Q1Label::No(NoReason::HalluMajor) => "Hallu.(M)",
            Q1Label::No(NoReason::AnsMajor) => "Ans.(M)",
        }
    }
}

impl fmt::Display for Q1Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Q1Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Q1Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| LabelError {
                kind: "Q1",
                label: s.to_owned(),
            })
    }
}

impl TryFrom<String> for Q1Label {
    type Error = LabelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Q1Label> for String {
    fn from(l: Q1Label) -> Self {
        l.as_str().to_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Q2Label {
    Yes,
    NotMainPoint,
    SortOf,
    No,
    /// The judge declined to answer Q2.
    Skipped,
}

impl Q2Label {
    /// Answered labels in report column order.
    pub const ANSWERED: [Q2Label; 4] = [
        Q2Label::Yes,
        Q2Label::NotMainPoint,
        Q2Label::SortOf,
        Q2Label::No,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Q2Label::Yes => "Yes",
            Q2Label::NotMainPoint => "NotMainPoint",
            Q2Label::SortOf => "SortOf",
            Q2Label::No => "No",
            Q2Label::Skipped => "Skipped",
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Q2Label::Yes => "Yes",
            Q2Label::NotMainPoint => "Not main point",
            Q2Label::SortOf => "Sort of",
            Q2Label::No => "No",
            Q2Label::Skipped => "Skipped",
        }
    }
}

impl fmt::Display for Q2Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Q2Label {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Q2Label::ANSWERED
            .into_iter()
            .chain([Q2Label::Skipped])
            .find(|l| l.as_str() == s)
            .ok_or_else(|| LabelError {
                kind: "Q2",
                label: s.to_owned(),
            })
    }
}

impl TryFrom<String> for Q2Label {
    type Error = LabelError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Q2Label> for String {
    fn from(l: Q2Label) -> Self {
        l.as_str().to_owned()
    }
}

/// One judge's answers for one generated question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub question_id: String,
    pub judge_id: String,
    #[serde(rename = "q1_fine_label")]
    pub q1: Q1Label,
    #[serde(rename = "q2_label")]
    pub q2: Q2Label,
    /// System that produced the question, e.g. `Full` or `-NER`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}
