//! Model backends: the wire contract, an invariant-checking wrapper, and a
//! deterministic in-process mock.

mod mock;
pub mod protocol;

pub use mock::MockBackend;
pub use protocol::{
    AnchorRequest, AnchorResponse, BackendError, Endpoint, ErrorKind, Exchange, GenerateRequest,
    GenerateResponse, HealthResponse, NerRequest, NerResponse, RerankRequest, RerankResponse,
};

/// The four model endpoints plus health.
///
/// Implementations must be reentrant: the parser may issue calls for
/// different sentences concurrently.
pub trait Backend: Send + Sync {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError>;
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError>;
    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError>;
    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError>;
    fn health(&self) -> Result<HealthResponse, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
        (**self).anchor(req)
    }
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        (**self).generate(req)
    }
    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
        (**self).rerank(req)
    }
    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
        (**self).ner(req)
    }
    fn health(&self) -> Result<HealthResponse, BackendError> {
        (**self).health()
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
        (**self).anchor(req)
    }
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        (**self).generate(req)
    }
    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
        (**self).rerank(req)
    }
    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
        (**self).ner(req)
    }
    fn health(&self) -> Result<HealthResponse, BackendError> {
        (**self).health()
    }
}

/// Wraps a backend so that every response is checked against the protocol
/// invariants before it is returned. A violation is an error, never a
/// silently accepted value.
#[derive(Debug, Clone)]
pub struct Checked<B>(pub B);

fn checked_call<E, F>(req: &E, call: F) -> Result<E::Response, BackendError>
where
    E: Exchange,
    F: FnOnce(&E) -> Result<E::Response, BackendError>,
{
    req.check_request().map_err(|m| {
        BackendError::new(E::ENDPOINT, req.request_id(), ErrorKind::InvalidRequest, m)
    })?;
    let resp = call(req)?;
    protocol::verify(req, &resp)?;
    Ok(resp)
}

impl<B: Backend> Backend for Checked<B> {
    fn anchor(&self, req: &AnchorRequest) -> Result<AnchorResponse, BackendError> {
        checked_call(req, |r| self.0.anchor(r))
    }
    fn generate(&self, req: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        checked_call(req, |r| self.0.generate(r))
    }
    fn rerank(&self, req: &RerankRequest) -> Result<RerankResponse, BackendError> {
        checked_call(req, |r| self.0.rerank(r))
    }
    fn ner(&self, req: &NerRequest) -> Result<NerResponse, BackendError> {
        checked_call(req, |r| self.0.ner(r))
    }
    fn health(&self) -> Result<HealthResponse, BackendError> {
        self.0.health()
    }
}
