use std::io;
use std::time::Duration;

use qud_core::backend::protocol::{decode, encode, verify, ErrorBody};
use qud_core::backend::{
    AnchorRequest, AnchorResponse, Backend, BackendError, Endpoint, ErrorKind, Exchange,
    GenerateRequest, GenerateResponse, HealthResponse, NerRequest, NerResponse, RerankRequest,
    RerankResponse,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpConfig {
    /// Per-request timeout covering connect, send and receive.
    pub timeout: Duration,
    /// Extra attempts after a transport failure or timeout. Each attempt
    /// sends the same bytes.
    pub retries: u32,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            timeout: Duration::from_secs(60),
            retries: 0,
        }
    }
}

/// Blocking client for a model server. Cheap to share across threads; each
/// call is independent and matched to its response by request id.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    agent: ureq::Agent,
    base: String,
    config: HttpConfig,
}

impl HttpBackend {
    pub fn new(base_url: &str) -> Self {
        Self::with_config(base_url, HttpConfig::default())
    }

    pub fn with_config(base_url: &str, config: HttpConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpBackend {
            agent,
            base: base_url.trim_end_matches('/').to_owned(),
            config,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn url(&self, endpoint: Endpoint) -> String {
        format!("{}{}", self.base, endpoint.path())
    }

    fn call<E: Exchange>(&self, req: &E) -> Result<E::Response, BackendError> {
        let id = req.request_id();
        let body = encode(req);
        let text = self.with_retries(E::ENDPOINT, id, || {
            self.agent
                .post(&self.url(E::ENDPOINT))
                .header("content-type", "application/json")
                .send(body.as_bytes())
        })?;
        let resp: E::Response = decode(E::ENDPOINT, id, &text)?;
        verify(req, &resp)?;
        Ok(resp)
    }

    fn with_retries<F>(&self, endpoint: Endpoint, id: &str, send: F) -> Result<String, BackendError>
    where
        F: Fn() -> Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    {
        let mut attempt = 0;
        loop {
            let outcome = send()
                .map_err(|e| transport_error(endpoint, id, e))
                .and_then(|resp| read_response(endpoint, id, resp));
            match outcome {
                Err(e)
                    if attempt < self.config.retries
                        && matches!(e.kind, ErrorKind::Transport | ErrorKind::Timeout) =>
                {
                    attempt += 1;
                    log::warn!("{e}; retry {attempt}/{}", self.config.retries);
                }
                other => return other,
            }
        }
    }
}

fn transport_error(endpoint: Endpoint, id: &str, e: ureq::Error) -> BackendError {
    let kind = match &e {
        ureq::Error::Timeout(_) => ErrorKind::Timeout,
        ureq::Error::Io(io) if io.kind() == io::ErrorKind::TimedOut => ErrorKind::Timeout,
        _ => ErrorKind::Transport,
    };
    BackendError::new(endpoint, id, kind, e.to_string())
}

fn read_response(
    endpoint: Endpoint,
    id: &str,
    mut resp: ureq::http::Response<ureq::Body>,
) -> Result<String, BackendError> {
    let status = resp.status();
    let text = resp
        .body_mut()
        .read_to_string()
        .map_err(|e| transport_error(endpoint, id, e))?;
    if status.is_success() {
        return Ok(text);
    }
    let detail = match serde_json::from_str::<ErrorBody>(&text) {
        Ok(b) => format!("{}: {}", b.error, b.message),
        Err(_) => text.chars().take(200).collect(),
    };
    let kind = if status.is_client_error() {
        ErrorKind::InvalidRequest
    } else {
        ErrorKind::Remote
    };
    Err(BackendError::new(
        endpoint,
        id,
        kind,
        format!("HTTP {}: {detail}", status.as_u16()),
    ))
}

impl Backend for HttpBackend {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
        self.call(req)
    }

    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        self.call(req)
    }

    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
        self.call(req)
    }

    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
        self.call(req)
    }

    fn health(&self) -> Result<HealthResponse, BackendError> {
        let text = self.with_retries(Endpoint::Health, "health", || {
            self.agent.get(&self.url(Endpoint::Health)).call()
        })?;
        decode(Endpoint::Health, "health", &text)
    }
}
