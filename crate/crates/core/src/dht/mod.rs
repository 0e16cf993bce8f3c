//! Simulated DHT substrate: ring placement, storage, channels and rounds.

pub mod hash;
pub mod message;
pub mod metrics;
pub mod peer;
pub mod system;

pub use message::{Message, MessageKind};
pub use metrics::AccessCounters;
pub use peer::Peer;
pub use system::{InsertVerdict, PeerProtocol, SystemState};
