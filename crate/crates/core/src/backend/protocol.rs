//! Wire messages exchanged with model backends.
//!
//! Bodies are JSON objects. Every request carries a `request_id` that the
//! response must echo, so concurrent in-flight calls can be matched.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{check_spans, EntitySpan};

pub const DEFAULT_TOP_P: f64 = 0.9;
pub const DEFAULT_NUM_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Anchor,
    Generate,
    Rerank,
    Ner,
    Health,
}

impl Endpoint {
    pub const ALL: [Endpoint; 5] = [
        Endpoint::Anchor,
        Endpoint::Generate,
        Endpoint::Rerank,
        Endpoint::Ner,
        Endpoint::Health,
    ];

    pub fn path(self) -> &'static str {
        match self {
            Endpoint::Anchor => "/anchor",
            Endpoint::Generate => "/generate",
            Endpoint::Rerank => "/rerank",
            Endpoint::Ner => "/ner",
            Endpoint::Health => "/health",
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.path())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Transport,
    Timeout,
    Malformed,
    Invariant,
    InvalidRequest,
    Remote,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorKind::Transport => "transport failure",
            ErrorKind::Timeout => "timeout",
            ErrorKind::Malformed => "malformed body",
            ErrorKind::Invariant => "invariant violation",
            ErrorKind::InvalidRequest => "invalid request",
            ErrorKind::Remote => "backend error",
        };
        f.write_str(s)
    }
}

/// A failed backend call, tagged with where it happened.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{endpoint} [{request_id}]: {kind}: {message}")]
pub struct BackendError {
    pub endpoint: Endpoint,
    pub request_id: String,
    pub kind: ErrorKind,
    pub message: String,
}

impl BackendError {
    pub fn new(
        endpoint: Endpoint,
        request_id: &str,
        kind: ErrorKind,
        message: impl Into<String>,
    ) -> Self {
        BackendError {
            endpoint,
            request_id: request_id.to_owned(),
            kind,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRequest {
    pub request_id: String,
    pub encoding: String,
    pub n: usize,
    pub answer_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorResponse {
    pub request_id: String,
    pub anchor_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub request_id: String,
    pub prompt: String,
    pub num_samples: usize,
    pub top_p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub request_id: String,
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankRequest {
    pub request_id: String,
    pub question: String,
    pub anchor_text: String,
    pub answer_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankResponse {
    pub request_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerRequest {
    pub request_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerResponse {
    pub request_id: String,
    pub spans: Vec<EntitySpan>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model_ids: BTreeMap<String, String>,
}

/// Error body returned by servers on non-2xx responses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

/// Request/response pair bound to one endpoint.
pub trait Exchange: Serialize + DeserializeOwned {
    type Response: Serialize + DeserializeOwned;
    const ENDPOINT: Endpoint;

    fn request_id(&self) -> &str;

    /// Reject requests no conforming backend could answer.
    fn check_request(&self) -> Result<(), String> {
        Ok(())
    }

    /// Invariants a response must satisfy for this request.
    fn check_response(&self, resp: &Self::Response) -> Result<(), String>;

    fn response_id(resp: &Self::Response) -> &str;
}

impl Exchange for AnchorRequest {
    type Response = AnchorResponse;
    const ENDPOINT: Endpoint = Endpoint::Anchor;

    fn request_id(&self) -> &str {
        &self.request_id
    }

    fn check_request(&self) -> Result<(), String> {
        if self.answer_index < 2 || self.answer_index > self.n {
            return Err(format!(
                "answer_index {} outside 2..={}",
                self.answer_index, self.n
            ));
        }
        Ok(())
    }

    fn check_response(&self, resp: &AnchorResponse) -> Result<(), String> {
        if resp.anchor_index >= self.answer_index {
            return Err(format!(
                "anchor >= answer ({} >= {})",
                resp.anchor_index, self.answer_index
            ));
        }
        if resp.anchor_index == 0 {
            return Err("anchor index 0".to_owned());
        }
        if let Some(scores) = &resp.scores {
            if scores.iter().any(|s| !s.is_finite()) {
                return Err("non-finite anchor score".to_owned());
            }
        }
        Ok(())
    }

    fn response_id(resp: &AnchorResponse) -> &str {
        &resp.request_id
    }
}

impl Exchange for GenerateRequest {
    type Response = GenerateResponse;
    const ENDPOINT: Endpoint = Endpoint::Generate;

    fn request_id(&self) -> &str {
        &self.request_id
    }

    fn check_request(&self) -> Result<(), String> {
        if self.num_samples == 0 {
            return Err("num_samples must be >= 1".to_owned());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(format!("top_p {} outside (0, 1]", self.top_p));
        }
        Ok(())
    }

    fn check_response(&self, resp: &GenerateResponse) -> Result<(), String> {
        if resp.questions.len() > self.num_samples {
            return Err(format!(
                "{} questions for num_samples={}",
                resp.questions.len(),
                self.num_samples
            ));
        }
        if let Some(i) = resp.questions.iter().position(|q| q.trim().is_empty()) {
            return Err(format!("question {i} is empty"));
        }
        Ok(())
    }

    fn response_id(resp: &GenerateResponse) -> &str {
        &resp.request_id
    }
}

impl Exchange for RerankRequest {
    type Response = RerankResponse;
    const ENDPOINT: Endpoint = Endpoint::Rerank;

    fn request_id(&self) -> &str {
        &self.request_id
    }

    fn check_response(&self, resp: &RerankResponse) -> Result<(), String> {
        if !(0.0..=1.0).contains(&resp.score) {
            return Err(format!("score {} outside [0, 1]", resp.score));
        }
        Ok(())
    }

    fn response_id(resp: &RerankResponse) -> &str {
        &resp.request_id
    }
}

impl Exchange for NerRequest {
    type Response = NerResponse;
    const ENDPOINT: Endpoint = Endpoint::Ner;

    fn request_id(&self) -> &str {
        &self.request_id
    }

    fn check_response(&self, resp: &NerResponse) -> Result<(), String> {
        check_spans(self.sentence_index, self.tokens.len(), &resp.spans).map_err(|e| e.to_string())
    }

    fn response_id(resp: &NerResponse) -> &str {
        &resp.request_id
    }
}

pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("protocol messages serialize")
}

pub fn decode<T: DeserializeOwned>(
    endpoint: Endpoint,
    request_id: &str,
    body: &str,
) -> Result<T, BackendError> {
    serde_json::from_str(body)
        .map_err(|e| BackendError::new(endpoint, request_id, ErrorKind::Malformed, e.to_string()))
}

/// Full response check: echoed id plus the endpoint invariants.
pub fn verify<E: Exchange>(req: &E, resp: &E::Response) -> Result<(), BackendError> {
    let got = E::response_id(resp);
    if got != req.request_id() {
        return Err(BackendError::new(
            E::ENDPOINT,
            req.request_id(),
            ErrorKind::Malformed,
            format!("response id '{got}' does not match request"),
        ));
    }
    req.check_response(resp)
        .map_err(|m| BackendError::new(E::ENDPOINT, req.request_id(), ErrorKind::Invariant, m))
}
