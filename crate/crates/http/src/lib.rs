//! HTTP transport for model backends.
//!
//! [`HttpBackend`] talks to a model server over `POST /anchor`, `/generate`,
//! `/rerank`, `/ner` and `GET /health` with JSON bodies. [`router`] and
//! [`spawn`] expose any [`Backend`] (usually the mock) under the same
//! endpoints, which is how the client is tested and how the CLI's
//! `mock-serve` works.

mod client;
mod server;

pub use client::{HttpBackend, HttpConfig};
pub use server::{router, serve, spawn, ServerHandle};

#[doc(no_inline)]
pub use qud_core::backend::Backend;
