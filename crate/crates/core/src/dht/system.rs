use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dht::hash::label_position;
use crate::dht::message::Message;
use crate::dht::metrics::AccessCounters;
use crate::dht::peer::Peer;
use crate::label::BitLabel;
use crate::trie::node::HptNode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertVerdict {
    Stored,
    /// An equal key node already existed; it was left untouched.
    KeptExisting,
    /// A key-storing Patricia node with a different key occupies the label.
    Rejected,
}

/// Per-peer behaviour driven by [`SystemState::run_round`].
pub trait PeerProtocol {
    fn deliver(&mut self, sys: &mut SystemState, peer: usize, msg: Message);
    fn timeout(&mut self, sys: &mut SystemState, peer: usize);
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemState {
    peers: Vec<Peer>,
    pub round: u64,
    pub seed: u64,
    #[serde(skip)]
    pub metrics: AccessCounters,
    #[serde(skip)]
    positions: RefCell<HashMap<u64, BitLabel>>,
}

impl SystemState {
    /// `peer_count` peers at distinct pseudo-random ring positions.
    pub fn new(peer_count: usize, seed: u64) -> Self {
        assert!(peer_count >= 1, "a DHT needs at least one peer");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ids = BTreeSet::new();
        while ids.len() < peer_count {
            ids.insert(rng.gen::<u64>());
        }
        Self::with_peers(ids.into_iter().map(Peer::new).collect(), seed)
    }

    /// Builds a system from explicit peers, sorted by ring position.
    pub fn with_peers(mut peers: Vec<Peer>, seed: u64) -> Self {
        assert!(!peers.is_empty(), "a DHT needs at least one peer");
        peers.sort_by_key(|p| p.id);
        assert!(
            peers.windows(2).all(|w| w[0].id != w[1].id),
            "peer ids must be distinct"
        );
        Self {
            peers,
            round: 0,
            seed,
            metrics: AccessCounters::default(),
            positions: RefCell::new(HashMap::new()),
        }
    }

    pub fn peers(&self) -> &[Peer] {
        &self.peers
    }

    pub fn peer(&self, i: usize) -> &Peer {
        &self.peers[i]
    }

    pub fn peer_mut(&mut self, i: usize) -> &mut Peer {
        &mut self.peers[i]
    }

    pub fn peer_count(&self) -> usize {
        self.peers.len()
    }

    /// Ring position of a label; panics if two labels collide.
    pub fn position(&self, label: &BitLabel) -> u64 {
        let pos = label_position(self.seed, label);
        let mut seen = self.positions.borrow_mut();
        match seen.get(&pos) {
            Some(prev) => assert!(prev == label, "hash collision between {prev} and {label}"),
            None => {
                seen.insert(pos, label.clone());
            }
        }
        pos
    }

    /// Index of the peer owning `label`: the first peer at or after its
    /// position, wrapping around the ring.
    pub fn responsible_peer(&self, label: &BitLabel) -> usize {
        let pos = self.position(label);
        let i = self.peers.partition_point(|p| p.id < pos);
        if i == self.peers.len() {
            0
        } else {
            i
        }
    }

    /// Node stored under `label` at its responsible peer, without accounting.
    pub fn peek(&self, label: &BitLabel) -> Option<&HptNode> {
        self.peers[self.responsible_peer(label)].store.get(label)
    }

    pub fn dht_search(&mut self, label: &BitLabel) -> Option<HptNode> {
        self.metrics.dht_reads += 1;
        self.peek(label).cloned()
    }

    /// Stores `node` at its responsible peer and presents it to its
    /// neighbours when it is a Patricia node.
    pub fn dht_insert(&mut self, node: HptNode) -> InsertVerdict {
        self.metrics.dht_writes += 1;
        let host = self.responsible_peer(&node.label);
        if let Some(existing) = self.peers[host].store.get(&node.label) {
            if let Some(k) = &existing.key {
                if node.key.as_ref() == Some(k) {
                    return InsertVerdict::KeptExisting;
                }
                if existing.is_patricia() {
                    return InsertVerdict::Rejected;
                }
                let k = k.clone();
                self.park_loose_key(k);
            }
        }
        let presentations: Vec<BitLabel> = if node.is_patricia() {
            node.parent_label().into_iter().chain(node.child_labels()).collect()
        } else {
            Vec::new()
        };
        let label = node.label.clone();
        self.peers[host].store.insert(label.clone(), node);
        for target in presentations {
            self.send(Message::linearize(target, label.clone()));
        }
        InsertVerdict::Stored
    }

    /// Remote write to an existing node. Returns false if it is absent.
    pub fn dht_update<F: FnOnce(&mut HptNode)>(&mut self, label: &BitLabel, f: F) -> bool {
        self.metrics.dht_writes += 1;
        let host = self.responsible_peer(label);
        match self.peers[host].store.get_mut(label) {
            Some(node) => {
                f(node);
                true
            }
            None => false,
        }
    }

    pub fn send(&mut self, msg: Message) {
        self.metrics.messages_sent += 1;
        let host = self.responsible_peer(&msg.target);
        self.peers[host].channel.push_back(msg);
    }

    /// Hands a key to the peer responsible for its label, outside any node.
    pub fn park_loose_key(&mut self, key: BitLabel) {
        let host = self.responsible_peer(&key);
        self.peers[host].loose_keys.push(key);
    }

    /// Removes a node from `peer`'s store; a key it held becomes loose.
    pub fn delete_local(&mut self, peer: usize, label: &BitLabel) -> Option<HptNode> {
        let node = self.peers[peer].store.remove(label)?;
        if let Some(k) = &node.key {
            self.park_loose_key(k.clone());
        }
        Some(node)
    }

    /// Every stored node with the index of the peer holding it.
    pub fn all_nodes(&self) -> impl Iterator<Item = (usize, &HptNode)> {
        self.peers
            .iter()
            .enumerate()
            .flat_map(|(i, p)| p.store.values().map(move |n| (i, n)))
    }

    pub fn pending_messages(&self) -> impl Iterator<Item = &Message> {
        self.peers.iter().flat_map(|p| p.channel.iter())
    }

    /// Every key held in a node or loose, with multiplicity.
    pub fn key_multiset(&self) -> Vec<BitLabel> {
        let mut keys: Vec<BitLabel> = self
            .all_nodes()
            .filter_map(|(_, n)| n.key.clone())
            .chain(self.peers.iter().flat_map(|p| p.loose_keys.iter().cloned()))
            .collect();
        keys.sort();
        keys
    }

    /// One synchronous round: every peer handles the messages that were
    /// queued at round start, then every peer runs one Timeout.
    pub fn run_round<P: PeerProtocol>(&mut self, protocol: &mut P) {
        let pending: Vec<usize> = self.peers.iter().map(|p| p.channel.len()).collect();
        for (i, count) in pending.into_iter().enumerate() {
            for _ in 0..count {
                let msg = self.peers[i]
                    .channel
                    .pop_front()
                    .expect("channel holds the counted messages");
                protocol.deliver(self, i, msg);
            }
        }
        for i in 0..self.peers.len() {
            self.metrics.begin_timeout();
            protocol.timeout(self, i);
            self.metrics.end_timeout();
        }
        self.round += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dht::message::MessageKind;
    use crate::label::bl;

    struct Recorder {
        delivered: Vec<(u64, BitLabel)>,
        timeouts: usize,
    }

    impl PeerProtocol for Recorder {
        fn deliver(&mut self, sys: &mut SystemState, _peer: usize, msg: Message) {
            self.delivered.push((sys.round, msg.target.clone()));
            if msg.target == bl("0") {
                sys.send(Message::linearize(bl("1"), bl("0")));
            }
        }

        fn timeout(&mut self, _sys: &mut SystemState, _peer: usize) {
            self.timeouts += 1;
        }
    }

    #[test]
    fn single_peer_owns_everything() {
        let s = SystemState::new(1, 5);
        for l in ["", "0", "0110"] {
            assert_eq!(s.responsible_peer(&bl(l)), 0);
        }
    }

    #[test]
    fn mapping_is_stable_for_fixed_seed() {
        let a = SystemState::new(8, 42);
        let b = SystemState::new(8, 42);
        for v in 0..64u64 {
            let l = BitLabel::from_u64(v, 6);
            assert_eq!(a.responsible_peer(&l), b.responsible_peer(&l));
        }
        let ids: Vec<_> = a.peers().iter().map(|p| p.id).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    #[should_panic(expected = "hash collision")]
    fn collisions_are_caught() {
        let s = SystemState::new(2, 1);
        let a = bl("01");
        let pos = s.position(&a);
        s.positions.borrow_mut().insert(pos, bl("10"));
        s.position(&a);
    }

    #[test]
    fn search_and_insert() {
        let mut s = SystemState::new(4, 9);
        assert_eq!(s.dht_search(&bl("01")), None);
        let mut n = HptNode::key_node(bl("01"));
        n.parent_edge = Some(bl("1"));
        n.child1 = Some(bl("1"));
        assert_eq!(s.dht_insert(n.clone()), InsertVerdict::Stored);
        assert_eq!(s.dht_search(&bl("01")), Some(n));
        assert_eq!(s.metrics.dht_reads, 2);
        assert_eq!(s.metrics.messages_sent, 2);
        let targets: BTreeSet<_> = s.pending_messages().map(|m| m.target.clone()).collect();
        assert_eq!(targets, [bl("0"), bl("011")].into_iter().collect());
    }

    #[test]
    fn insert_over_key_node_is_rejected_or_kept() {
        let mut s = SystemState::new(3, 2);
        s.dht_insert(HptNode::key_node(bl("10")));
        assert_eq!(s.dht_insert(HptNode::patricia(bl("10"))), InsertVerdict::Rejected);
        assert_eq!(s.dht_insert(HptNode::key_node(bl("10"))), InsertVerdict::KeptExisting);
        assert_eq!(s.peek(&bl("10")).unwrap().key, Some(bl("10")));
    }

    #[test]
    fn msd_insert_sends_nothing() {
        let mut s = SystemState::new(3, 2);
        let mut m = HptNode::msd(bl("00"));
        m.parent_edge = Some(bl("0"));
        m.child1 = Some(bl("1"));
        assert_eq!(s.dht_insert(m), InsertVerdict::Stored);
        assert_eq!(s.metrics.messages_sent, 0);
    }

    #[test]
    fn misplaced_node_is_invisible_to_search() {
        let mut s = SystemState::new(8, 3);
        let l = bl("0110");
        let right = s.responsible_peer(&l);
        let wrong = (right + 1) % 8;
        s.peer_mut(wrong).store.insert(l.clone(), HptNode::key_node(l.clone()));
        assert_eq!(s.dht_search(&l), None);
    }

    #[test]
    fn messages_spawned_in_a_round_wait_for_the_next() {
        let mut s = SystemState::new(4, 11);
        let mut p = Recorder {
            delivered: Vec::new(),
            timeouts: 0,
        };
        s.run_round(&mut p);
        assert_eq!(s.round, 1);
        assert_eq!(p.timeouts, 4);
        s.send(Message::linearize(bl("0"), bl("")));
        s.send(Message::linearize(bl("0"), bl("1")));
        let first: Vec<_> = s.pending_messages().cloned().collect();
        assert!(matches!(&first[0].kind, MessageKind::Linearize { presented } if presented.is_empty()));
        s.run_round(&mut p);
        assert_eq!(p.delivered, vec![(1, bl("0")), (1, bl("0"))]);
        s.run_round(&mut p);
        assert_eq!(p.delivered.len(), 4);
        assert_eq!(p.delivered[2], (2, bl("1")));
    }
}
