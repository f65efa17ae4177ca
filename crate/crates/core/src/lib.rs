//! Survivable probability of cross-layer (logical-over-physical) networks.
//!
//! A logical network is embedded into a physical network: every logical node
//! sits on a distinct physical node and every logical link is routed along a
//! simple physical path. Physical links fail independently with known
//! probabilities. This crate answers how likely the logical network is to stay
//! connected, using protecting spanning trees, Steiner trees in the physical
//! layer, and exhaustive oracles for small instances.
//!
//! Module map:
//!
//! - [`model`]: instances, failure models, validation and the JSON format.
//! - [`routing`]: candidate physical paths, link mappings and co-mappings.
//! - [`trees`]: spanning-tree enumeration and protecting-tree probabilities.
//! - [`engine`]: critical links, the survivable probability search, base sets.
//! - [`steiner`]: exact and approximate Steiner trees, disjoint-tree packing.
//! - [`gen`]: seeded instance generation and failure-probability sweeps.

pub mod edgeset;
pub mod engine;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod gen;
pub mod graph;
pub mod model;
pub mod routing;
pub mod steiner;
pub mod trees;

pub use edgeset::EdgeSet;
pub use error::{Error, Result};
pub use model::{
    CrossLayerInstance, FailureModel, InstanceDoc, LogicalNetwork, NodeMapping, PhysicalNetwork,
    Violation,
};
pub use routing::{LinkMapping, PhysicalPath, PoolPolicy};
pub use trees::{ProtectingTree, ProtectingTreeSet};
