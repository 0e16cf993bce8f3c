//! The repair protocol run by every peer.

pub mod checks;
pub mod instrumentation;
pub mod linearize;

use crate::dht::message::{Message, MessageKind};
use crate::dht::system::{InsertVerdict, PeerProtocol, SystemState};
use crate::trie::node::HptNode;

pub use checks::{Creation, Flow};
pub use instrumentation::PhaseInstrumentation;

use checks::{
    check_child_edge_info, check_key2_info, check_node_info, check_parent_edge_info,
    check_validity, local, write_back,
};
use linearize::{handle_key2_probe, handle_leaf_present, linearize_into, linearize_timeout, Source};

/// Protocol state. The protocol itself is stateless; this only carries an
/// optional log of node creations.
#[derive(Debug, Default)]
pub struct Shpt {
    pub creations: Option<Vec<Creation>>,
}

impl Shpt {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_creation_log() -> Self {
        Self {
            creations: Some(Vec::new()),
        }
    }

    /// Turns keys held outside nodes into key nodes of their own.
    fn integrate_keys(&mut self, sys: &mut SystemState, peer: usize) {
        let loose = std::mem::take(&mut sys.peer_mut(peer).loose_keys);
        let mut kept = Vec::new();
        for k in loose {
            match sys.dht_insert(HptNode::key_node(k.clone())) {
                InsertVerdict::Rejected => kept.push(k),
                InsertVerdict::Stored => {
                    if let Some(log) = &mut self.creations {
                        log.push(Creation::Key { label: k });
                    }
                }
                InsertVerdict::KeptExisting => {}
            }
        }
        sys.peer_mut(peer).loose_keys.extend(kept);
    }
}

impl PeerProtocol for Shpt {
    fn deliver(&mut self, sys: &mut SystemState, peer: usize, msg: Message) {
        let Some(mut v) = local(sys, peer, &msg.target) else {
            return;
        };
        match &msg.kind {
            MessageKind::Linearize { presented } => {
                let before = v.clone();
                linearize_into(sys, &mut v, presented, Source::Message);
                if v != before {
                    write_back(sys, peer, v);
                }
            }
            MessageKind::Key2Probe { origin, hops_left } => {
                handle_key2_probe(sys, &v, origin, *hops_left);
            }
            MessageKind::LeafPresent { origin, hops_left } => {
                if handle_leaf_present(sys, &mut v, origin, *hops_left) {
                    write_back(sys, peer, v);
                }
            }
        }
    }

    fn timeout(&mut self, sys: &mut SystemState, peer: usize) {
        if !sys.peer(peer).loose_keys.is_empty() {
            self.integrate_keys(sys, peer);
        }
        let Some(label) = sys.peer_mut(peer).advance_cursor() else {
            return;
        };
        let mut host = peer;
        let owner = sys.responsible_peer(&label);
        if owner != peer {
            // check position in DHT
            let node = sys
                .peer_mut(peer)
                .store
                .remove(&label)
                .expect("cursor points at a stored node");
            let key = node.key.clone();
            match sys.dht_insert(node) {
                InsertVerdict::Stored => host = owner,
                InsertVerdict::Rejected => {
                    if let Some(k) = key {
                        sys.park_loose_key(k);
                    }
                    return;
                }
                InsertVerdict::KeptExisting => return,
            }
        }
        let log = &mut self.creations;
        if check_node_info(sys, host, &label, log) == Flow::Deleted
            || check_parent_edge_info(sys, host, &label, log) == Flow::Deleted
            || check_child_edge_info(sys, host, &label) == Flow::Deleted
            || check_validity(sys, host, &label) == Flow::Deleted
            || check_key2_info(sys, host, &label) == Flow::Deleted
        {
            return;
        }
        if let Some(v) = sys.peer(host).store.get(&label).cloned() {
            linearize_timeout(sys, &v);
        }
    }
}
