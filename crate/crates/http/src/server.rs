use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use qud_core::backend::protocol::{encode, ErrorBody};
use qud_core::backend::{Backend, BackendError, ErrorKind, Exchange};
use serde::Serialize;
use tokio::sync::oneshot;

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, "application/json")],
        encode(body),
    )
        .into_response()
}

fn error(status: StatusCode, kind: &str, message: String) -> Response {
    json(
        status,
        &ErrorBody {
            error: kind.to_owned(),
            message,
        },
    )
}

fn backend_error(e: BackendError) -> Response {
    let status = match e.kind {
        ErrorKind::InvalidRequest => StatusCode::BAD_REQUEST,
        ErrorKind::Timeout => StatusCode::GATEWAY_TIMEOUT,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    };
    let kind = serde_json::to_value(e.kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    error(status, &kind, e.message)
}

async fn handle<B, E, F>(backend: Arc<B>, body: Bytes, call: F) -> Response
where
    B: Backend + 'static,
    E: Exchange + Send + 'static,
    E::Response: Send,
    F: FnOnce(&B, &E) -> Result<E::Response, BackendError> + Send + 'static,
{
    let req: E = match decode_request(&body) {
        Ok(r) => r,
        Err(m) => return error(StatusCode::BAD_REQUEST, "invalid_request", m),
    };
    if let Err(m) = req.check_request() {
        return error(StatusCode::BAD_REQUEST, "invalid_request", m);
    }
    let joined = tokio::task::spawn_blocking(move || call(&backend, &req)).await;
    match joined {
        Ok(Ok(resp)) => json(StatusCode::OK, &resp),
        Ok(Err(e)) => backend_error(e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "remote", e.to_string()),
    }
}

/// Parse a request body, naming the offending field on failure.
fn decode_request<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, String> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.into_inner().to_string()
        } else {
            format!("field `{path}`: {}", e.into_inner())
        }
    })
}

/// Routes for the five endpoints over `backend`.
pub fn router<B: Backend + 'static>(backend: B) -> Router {
    let state = Arc::new(backend);
    Router::new()
        .route(
            "/anchor",
            post(|State(b): State<Arc<B>>, body: Bytes| handle(b, body, |b: &B, r| b.anchor(r))),
        )
        .route(
            "/generate",
            post(|State(b): State<Arc<B>>, body: Bytes| handle(b, body, |b: &B, r| b.generate(r))),
        )
        .route(
            "/rerank",
            post(|State(b): State<Arc<B>>, body: Bytes| handle(b, body, |b: &B, r| b.rerank(r))),
        )
        .route(
            "/ner",
            post(|State(b): State<Arc<B>>, body: Bytes| handle(b, body, |b: &B, r| b.ner(r))),
        )
        .route(
            "/health",
            get(|State(b): State<Arc<B>>| async move {
                match tokio::task::spawn_blocking(move || b.health()).await {
                    Ok(Ok(h)) => json(StatusCode::OK, &h),
                    Ok(Err(e)) => backend_error(e),
                    Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "remote", e.to_string()),
                }
            }),
        )
        .with_state(state)
}

/// Serve `backend` on `addr` until the process exits.
pub fn serve<B: Backend + 'static>(
    backend: B,
    addr: SocketAddr,
    on_bound: impl FnOnce(SocketAddr),
) -> io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_io()
        .build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        on_bound(listener.local_addr()?);
        axum::serve(listener, router(backend)).await
    })
}

/// A server running on a background thread; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Start serving `backend` on `addr` (port 0 picks a free port) in the
/// background.
pub fn spawn<B: Backend + 'static>(backend: B, addr: SocketAddr) -> io::Result<ServerHandle> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_io()
        .build()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(addr))?;
    let bound = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            axum::serve(listener, router(backend))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await
        })
    });
    Ok(ServerHandle {
        addr: bound,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
