//! Entity-oriented search over a joint hypergraph of terms, entities and
//! documents.
//!
//! The index is a mixed hypergraph: term and entity nodes, undirected
//! document hyperedges grouping a document's keywords and mentioned
//! entities, and directed hyperedges for entity relations and for the
//! terms of an entity's name. Documents are reduced to keyword profiles
//! before indexing (co-occurrence graph + PageRank + ratio cutoff), and a
//! single random-walk score ranks documents or entities for all supported
//! tasks. An inverted-index baseline (TF-IDF / BM25) and a TREC-style
//! evaluation harness round out the toolkit.

pub mod baseline;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod hypergraph;
pub mod indexer;
pub mod keywords;
pub mod ranking;
pub mod synth;

pub use error::Error;
pub use hypergraph::{GraphStats, Hypergraph, HypergraphBuilder};
pub use indexer::IndexConfig;
pub use keywords::KeywordProfile;
pub use ranking::{RankedList, RwsParams, TargetKind};

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
