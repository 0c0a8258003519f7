//! Questions-Under-Discussion (QUD) dependency structures over documents.
//!
//! A QUD tree attaches every sentence after the first to an earlier *anchor*
//! sentence, and labels the edge with a free-form question that the later
//! sentence answers. This crate provides:
//!
//! * the document and tree data model with validation ([`model`]),
//! * loaders for DCQA-style question annotations ([`dcqa`]),
//! * the marker-annotated model inputs ([`encoding`]),
//! * the backend wire contract plus a deterministic mock backend ([`backend`]),
//! * the greedy two-stage parser ([`parser`]),
//! * tree statistics and gap degree ([`metrics`]),
//! * RST constituency to dependency conversion ([`rst`]),
//! * human-evaluation aggregation and agreement statistics ([`eval`]).
//!
//! ```
//! use qud_core::backend::MockBackend;
//! use qud_core::model::Document;
//! use qud_core::parser::{parse, ParseConfig};
//!
//! let doc = Document::from_texts("a1", ["Rain fell.", "Streets flooded.", "Schools closed."]).unwrap();
//! let out = parse(&doc, &MockBackend::new(1), &ParseConfig::default()).unwrap();
//! assert_eq!(out.tree.to_dep_tree().unwrap().parents(), &[0, 1, 2]);
//! ```

pub mod backend;
pub mod dcqa;
pub mod encoding;
pub mod eval;
pub mod io;
pub mod metrics;
pub mod model;
pub mod parser;
pub mod rst;

pub use model::{DepTree, Document, QudEntry, QudTree, Sentence, Violation};
