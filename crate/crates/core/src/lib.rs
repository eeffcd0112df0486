//! Subgraph matching over large labeled directed graphs.
//!
//! The engine follows a filtering-and-joining strategy: candidate nodes are
//! pruned in bulk along a query plan, candidate edges are collected per query
//! edge, and the edge tables are joined into full matches. Data graphs that are
//! too large can be compressed into a weighted graph first; matches found on the
//! compressed graph are expanded back to the original nodes.
//!
//! Every bulk stage is written against the [`primitives`] module so that it can
//! run on one thread or many with identical output.

pub mod bench;
pub mod compress;
pub mod extract;
pub mod graph;
pub mod matcher;
pub mod oracle;
pub mod primitives;
pub mod query;
pub mod synth;

mod error;

pub use error::{Error, Result};

/// Dense node identifier inside a [`graph::DataGraph`].
pub type NodeId = u32;
/// Dense identifier of an edge label (relation) or node label.
pub type LabelId = u32;

/// Placeholder id for a query term that is missing from the dictionary.
///
/// Nothing in a data graph carries this id, so a query node or edge that
/// references it simply has no candidates.
pub const UNRESOLVED: u32 = u32::MAX;
