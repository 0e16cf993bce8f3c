//! Node model, label arithmetic, and the reference trie.

pub mod ideal;
pub mod msd;
pub mod node;

pub use ideal::{build_ideal_hpt, IdealHpt, MsdPlacement};
pub use msd::{edge_between, lcp, msd_index, msd_label, msd_length, msd_missing};
pub use node::{node_children_count, HptNode, NodeKind};
