//! Key sets, corruption scripts and initial-state generation.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dht::message::Message;
use crate::dht::system::SystemState;
use crate::error::ScenarioError;
use crate::label::BitLabel;
use crate::trie::ideal::IdealHpt;
use crate::trie::node::HptNode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MutationKind {
    ClearEdge,
    ScrambleEdge,
    DeleteNode,
    AddSpuriousPatricia,
    AddSpuriousMsd,
    MoveKeyToWrongLabel,
    #[serde(rename = "misplace-node-at-wrong-peer")]
    MisplaceNode,
    CorruptKey2Slot,
    CorruptR,
    InjectStrayMessage,
}

impl MutationKind {
    pub const ALL: [MutationKind; 10] = [
        MutationKind::ClearEdge,
        MutationKind::ScrambleEdge,
        MutationKind::DeleteNode,
        MutationKind::AddSpuriousPatricia,
        MutationKind::AddSpuriousMsd,
        MutationKind::MoveKeyToWrongLabel,
        MutationKind::MisplaceNode,
        MutationKind::CorruptKey2Slot,
        MutationKind::CorruptR,
        MutationKind::InjectStrayMessage,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutation {
    pub kind: MutationKind,
    /// Node to mutate; picked at random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BitLabel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorruptionLevel {
    None,
    Low,
    Medium,
    High,
    /// Delete every node that does not store a key.
    Strip,
}

impl CorruptionLevel {
    /// Mutations per category.
    pub fn intensity(self) -> usize {
        match self {
            CorruptionLevel::None | CorruptionLevel::Strip => 0,
            CorruptionLevel::Low => 1,
            CorruptionLevel::Medium => 3,
            CorruptionLevel::High => 8,
        }
    }
}

impl FromStr for CorruptionLevel {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "low" => Ok(Self::Low),
            "medium" => Ok(Self::Medium),
            "high" => Ok(Self::High),
            "strip" => Ok(Self::Strip),
            other => Err(ScenarioError::Malformed(format!("unknown corruption level {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionScript {
    pub seed: u64,
    /// Applied first, in order.
    #[serde(default)]
    pub ops: Vec<Mutation>,
    /// Additional untargeted mutations per category.
    #[serde(default)]
    pub intensity: BTreeMap<MutationKind, usize>,
    /// Delete every key-less node after the other mutations.
    #[serde(default)]
    pub strip: bool,
}

impl CorruptionScript {
    pub fn from_level(level: CorruptionLevel, seed: u64) -> Self {
        let n = level.intensity();
        Self {
            seed,
            ops: Vec::new(),
            intensity: if n > 0 {
                MutationKind::ALL.iter().map(|k| (*k, n)).collect()
            } else {
                BTreeMap::new()
            },
            strip: level == CorruptionLevel::Strip,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    /// The full mutation sequence, targeted ops first.
    fn expanded(&self) -> Vec<Mutation> {
        let mut out = self.ops.clone();
        for (kind, n) in &self.intensity {
            out.extend((0..*n).map(|_| Mutation { kind: *kind, target: None }));
        }
        out
    }
}

/// `count` distinct keys with lengths drawn uniformly from `1..=max_len`.
pub fn random_keys(count: usize, max_len: usize, seed: u64) -> Result<Vec<BitLabel>, ScenarioError> {
    let space: u128 = (1u128 << (max_len.min(64) + 1)) - 2;
    if max_len == 0 || max_len > 64 || count as u128 > space {
        return Err(ScenarioError::KeySpaceTooSmall { wanted: count, len: max_len });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys = BTreeSet::new();
    while keys.len() < count {
        let len = rng.gen_range(1..=max_len);
        let bits: u64 = rng.gen();
        keys.insert(BitLabel::from_u64(bits, len));
    }
    let mut keys: Vec<BitLabel> = keys.into_iter().collect();
    keys.shuffle(&mut rng);
    Ok(keys)
}

/// One binary string per line; blank lines and `#` comments are skipped.
pub fn parse_keys(text: &str) -> Result<Vec<BitLabel>, ScenarioError> {
    let mut seen = BTreeSet::new();
    let mut keys = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.chars().all(|c| c == '0' || c == '1') {
            return Err(ScenarioError::KeysFile {
                line: i + 1,
                message: format!("{line:?} is not a binary string"),
            });
        }
        let key: BitLabel = line.parse()?;
        if !seen.insert(key.clone()) {
            return Err(ScenarioError::KeysFile {
                line: i + 1,
                message: format!("duplicate key {key}"),
            });
        }
        keys.push(key);
    }
    Ok(keys)
}

/// Stores every ideal node at its responsible peer.
pub fn materialize(ideal: &IdealHpt, peers: usize, seed: u64) -> SystemState {
    let mut sys = SystemState::new(peers, seed);
    for n in ideal.nodes() {
        let host = sys.responsible_peer(&n.label);
        sys.peer_mut(host).store.insert(n.label.clone(), n);
    }
    sys.metrics.d_bits = ideal.d_bits() as u64;
    sys
}

/// Builds the ideal trie for `keys`, spreads it over the peers and applies
/// the script.
pub fn generate_initial_state(
    keys: &[BitLabel],
    script: &CorruptionScript,
    peers: usize,
    seed: u64,
) -> Result<(SystemState, IdealHpt), ScenarioError> {
    let ideal = IdealHpt::build(keys)?;
    let mut sys = materialize(&ideal, peers, seed);
    apply_script(&mut sys, &ideal, script)?;
    let mut want: Vec<BitLabel> = keys.to_vec();
    want.sort();
    if sys.key_multiset() != want {
        return Err(ScenarioError::KeyPreservation(
            "key multiset changed while applying the script".into(),
        ));
    }
    Ok((sys, ideal))
}

struct Corrupter<'a> {
    sys: &'a mut SystemState,
    rng: ChaCha8Rng,
    /// Labels that random labels are grown from.
    seeds: Vec<BitLabel>,
}

impl Corrupter<'_> {
    fn locate(&self, label: &BitLabel) -> Option<usize> {
        (0..self.sys.peer_count()).find(|&i| self.sys.peer(i).store.contains_key(label))
    }

    fn labels(&self) -> Vec<(usize, BitLabel)> {
        self.sys
            .all_nodes()
            .map(|(p, n)| (p, n.label.clone()))
            .collect()
    }

    fn pick_node(&mut self, target: &Option<BitLabel>, filter: impl Fn(&HptNode) -> bool) -> Result<Option<(usize, BitLabel)>, ScenarioError> {
        if let Some(t) = target {
            let peer = self
                .locate(t)
                .ok_or_else(|| ScenarioError::Malformed(format!("no node labelled {t}")))?;
            return Ok(Some((peer, t.clone())));
        }
        let candidates: Vec<(usize, BitLabel)> = self
            .labels()
            .into_iter()
            .filter(|(p, l)| filter(&self.sys.peer(*p).store[l]))
            .collect();
        Ok(candidates.choose(&mut self.rng).cloned())
    }

    fn random_bits(&mut self, max: usize) -> BitLabel {
        let len = self.rng.gen_range(0..=max);
        BitLabel::from_bits((0..len).map(|_| self.rng.gen::<bool>()))
    }

    fn random_label(&mut self) -> BitLabel {
        let base = self.seeds.choose(&mut self.rng).cloned().unwrap_or_default();
        let cut = self.rng.gen_range(0..=base.len());
        let tail = self.random_bits(3);
        base.prefix(cut).concat(&tail)
    }

    fn fresh_label(&mut self) -> Option<BitLabel> {
        for _ in 0..32 {
            let l = self.random_label();
            if self.locate(&l).is_none() {
                return Some(l);
            }
        }
        None
    }

    fn node_mut(&mut self, peer: usize, label: &BitLabel) -> &mut HptNode {
        self.sys.peer_mut(peer).store.get_mut(label).expect("picked node exists")
    }

    fn apply(&mut self, m: &Mutation) -> Result<(), ScenarioError> {
        match m.kind {
            MutationKind::ClearEdge => {
                if let Some((p, l)) = self.pick_node(&m.target, |n| {
                    n.parent_edge.is_some() || n.children_count() > 0
                })? {
                    let n = self.node_mut(p, &l);
                    let mut present: Vec<u8> = Vec::new();
                    if n.parent_edge.is_some() {
                        present.push(0);
                    }
                    if n.child0.is_some() {
                        present.push(1);
                    }
                    if n.child1.is_some() {
                        present.push(2);
                    }
                    let which = present.choose(&mut self.rng).copied();
                    let n = self.node_mut(p, &l);
                    match which {
                        Some(0) => n.parent_edge = None,
                        Some(1) => n.child0 = None,
                        Some(2) => n.child1 = None,
                        _ => {}
                    }
                }
            }
            MutationKind::ScrambleEdge => {
                if let Some((p, l)) = self.pick_node(&m.target, |_| true)? {
                    let edge = self.random_bits(6);
                    let which = self.rng.gen_range(0..3);
                    let n = self.node_mut(p, &l);
                    match which {
                        0 => n.parent_edge = Some(edge),
                        1 => n.child0 = Some(edge),
                        _ => n.child1 = Some(edge),
                    }
                }
            }
            MutationKind::DeleteNode => {
                if let Some((p, l)) = self.pick_node(&m.target, |_| true)? {
                    let n = self.sys.peer_mut(p).store.remove(&l).expect("picked node exists");
                    if let Some(k) = n.key {
                        self.sys.peer_mut(p).loose_keys.push(k);
                    }
                }
            }
            MutationKind::AddSpuriousPatricia | MutationKind::AddSpuriousMsd => {
                let label = match &m.target {
                    Some(t) if self.locate(t).is_none() => Some(t.clone()),
                    Some(t) => return Err(ScenarioError::Malformed(format!("{t} already stored"))),
                    None => self.fresh_label(),
                };
                if let Some(label) = label {
                    let mut n = if m.kind == MutationKind::AddSpuriousMsd {
                        HptNode::msd(label.clone())
                    } else {
                        HptNode::patricia(label.clone())
                    };
                    if !label.is_empty() && self.rng.gen_bool(0.7) {
                        let cut = self.rng.gen_range(0..label.len());
                        n.parent_edge = Some(label.suffix_from(cut));
                    }
                    let bit = self.rng.gen::<bool>();
                    let mut edge = BitLabel::empty().with_bit(bit);
                    edge = edge.concat(&self.random_bits(4));
                    *n.child_edge_mut(bit) = Some(edge);
                    let host = self.sys.responsible_peer(&label);
                    self.sys.peer_mut(host).store.insert(label, n);
                }
            }
            MutationKind::MoveKeyToWrongLabel => {
                if let Some((p, l)) = self.pick_node(&m.target, |n| n.key.is_some())? {
                    if let Some(new_label) = self.fresh_label() {
                        let mut n = self.sys.peer_mut(p).store.remove(&l).expect("picked node exists");
                        n.label = new_label.clone();
                        let host = self.sys.responsible_peer(&new_label);
                        self.sys.peer_mut(host).store.insert(new_label, n);
                    }
                }
            }
            MutationKind::MisplaceNode => {
                if self.sys.peer_count() < 2 {
                    return Ok(());
                }
                if let Some((p, l)) = self.pick_node(&m.target, |_| true)? {
                    let shift = self.rng.gen_range(1..self.sys.peer_count());
                    let to = (p + shift) % self.sys.peer_count();
                    let n = self.sys.peer_mut(p).store.remove(&l).expect("picked node exists");
                    self.sys.peer_mut(to).store.insert(l, n);
                }
            }
            MutationKind::CorruptKey2Slot => {
                if let Some((p, l)) = self.pick_node(&m.target, |_| true)? {
                    let count = self.rng.gen_range(0..=3);
                    let slots: Vec<BitLabel> = (0..count).map(|_| self.random_label()).collect();
                    self.node_mut(p, &l).key2 = slots;
                }
            }
            MutationKind::CorruptR => {
                if let Some((p, l)) = self.pick_node(&m.target, |_| true)? {
                    let r = if self.rng.gen_bool(0.2) { None } else { Some(self.random_label()) };
                    self.node_mut(p, &l).r_ref = r;
                }
            }
            MutationKind::InjectStrayMessage => {
                let target = match &m.target {
                    Some(t) => t.clone(),
                    None => self.random_label(),
                };
                let other = self.random_label();
                let hops = self.rng.gen_range(0..=other.len() as u32);
                let msg = match self.rng.gen_range(0..3) {
                    0 => Message::linearize(target, other),
                    1 => Message::key2_probe(target, other, hops),
                    _ => Message::leaf_present(target, other, hops),
                };
                self.sys.send(msg);
            }
        }
        Ok(())
    }
}

/// Applies `script` deterministically under its seed.
pub fn apply_script(
    sys: &mut SystemState,
    ideal: &IdealHpt,
    script: &CorruptionScript,
) -> Result<(), ScenarioError> {
    let mut c = Corrupter {
        sys,
        rng: ChaCha8Rng::seed_from_u64(script.seed),
        seeds: ideal.keys().iter().cloned().collect(),
    };
    for m in script.expanded() {
        c.apply(&m)?;
    }
    if script.strip {
        for (p, l) in c.labels() {
            if c.sys.peer(p).store[&l].key.is_none() {
                c.sys.peer_mut(p).store.remove(&l);
            }
        }
    }
    c.sys.metrics = Default::default();
    c.sys.metrics.d_bits = ideal.d_bits() as u64;
    Ok(())
}
