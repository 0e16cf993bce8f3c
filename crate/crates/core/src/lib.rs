//! Simulator for a self-stabilizing hashed Patricia trie stored in a DHT.

pub mod dht;
pub mod error;
pub mod harness;
pub mod label;
pub mod protocol;
pub mod search;
pub mod trie;

pub use error::{LabelError, ScenarioError, SearchError, TrieError};
pub use label::{bl, BitLabel, DEFAULT_LMAX};
pub use trie::{build_ideal_hpt, HptNode, IdealHpt, NodeKind};
