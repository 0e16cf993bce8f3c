//! Progress counters computed from a global snapshot.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dht::system::SystemState;
use crate::label::BitLabel;
use crate::trie::ideal::IdealHpt;
use crate::trie::node::HptNode;

/// One counter per repair phase. All are zero in a legal state; during
/// stabilization they may rise temporarily.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseInstrumentation {
    /// Key occurrences not held by the Patricia node of the same label at
    /// its responsible peer (loose keys and wrong labels included).
    pub misstored_keys: usize,
    /// Fields that the local consistency check would clear.
    pub malformed_fields: usize,
    /// 1 + the longest label of a key-less node below which no key lies.
    pub empty_subtree_depth: usize,
    /// Patricia nodes outside the ideal node set; the root is exempt.
    pub unnecessary_nodes: usize,
    /// Non-root Patricia nodes without key and with fewer than two children.
    pub locally_unnecessary: usize,
    /// Non-root Patricia nodes without a parent edge.
    pub parentless: usize,
    /// Msd nodes that are not at an ideal Msd label with the ideal edges.
    pub incorrect_msd: usize,
    /// Ideal Msd labels with no correct Msd node.
    pub missing_msd: usize,
    /// Ideal key₂ nodes that should hold a slot but hold none.
    pub unmatched_key2: usize,
    /// Ideal leaves without a consistent `r` reference.
    pub unmatched_r: usize,
}

pub const COUNTER_NAMES: [&str; 10] = [
    "misstored_keys",
    "malformed_fields",
    "empty_subtree_depth",
    "unnecessary_nodes",
    "locally_unnecessary",
    "parentless",
    "incorrect_msd",
    "missing_msd",
    "unmatched_key2",
    "unmatched_r",
];

fn malformed(n: &HptNode) -> usize {
    let mut bad = 0;
    if n.parent_edge
        .as_ref()
        .is_some_and(|e| e.is_empty() || !e.is_suffix_of(&n.label))
    {
        bad += 1;
    }
    for bit in [false, true] {
        if n.child_edge(bit).is_some_and(|e| e.first() != Some(bit)) {
            bad += 1;
        }
    }
    if n.is_msd() {
        return bad + n.key.is_some() as usize + n.key2.len() + n.r_ref.is_some() as usize;
    }
    if n.is_key2_node() {
        let mut seen: Vec<&BitLabel> = Vec::new();
        for s in &n.key2 {
            if !n.label.is_proper_prefix_of(s) || seen.contains(&s) {
                bad += 1;
            }
            seen.push(s);
        }
        bad += n.key2.len().saturating_sub(n.key2_capacity());
    } else {
        bad += n.key2.len();
    }
    if let Some(r) = &n.r_ref {
        if !r.is_proper_prefix_of(&n.label) || n.children_count() > 0 {
            bad += 1;
        }
    }
    bad
}

impl PhaseInstrumentation {
    pub fn measure(sys: &SystemState, ideal: &IdealHpt) -> Self {
        let mut c = PhaseInstrumentation::default();
        let keys = ideal.keys();
        // nodes at their responsible peer, by label
        let mut placed: BTreeMap<&BitLabel, &HptNode> = BTreeMap::new();
        for (peer, n) in sys.all_nodes() {
            if sys.responsible_peer(&n.label) == peer {
                placed.insert(&n.label, n);
            }
        }

        for p in sys.peers() {
            c.misstored_keys += p.loose_keys.len();
        }
        for (peer, n) in sys.all_nodes() {
            if let Some(k) = &n.key {
                if !(n.is_patricia() && *k == n.label && sys.responsible_peer(&n.label) == peer) {
                    c.misstored_keys += 1;
                }
            }
            c.malformed_fields += malformed(n);
            if !n.is_root() && n.key.is_none() && !keys.iter().any(|k| n.label.is_prefix_of(k)) {
                c.empty_subtree_depth = c.empty_subtree_depth.max(n.label.len() + 1);
            }
            if n.is_patricia() && !n.is_root() {
                if !ideal.is_patricia(&n.label) {
                    c.unnecessary_nodes += 1;
                }
                if n.key.is_none() && n.children_count() < 2 {
                    c.locally_unnecessary += 1;
                }
                if n.parent_edge.is_none() {
                    c.parentless += 1;
                }
            }
            if n.is_msd() {
                let correct = ideal.msd_placement(&n.label).is_some_and(|place| {
                    n.parent_edge.as_ref() == Some(&n.label.suffix_from(place.upper.len()))
                        && n.msd_child_edge().map(|(_, e)| n.label.concat(e)).as_ref()
                            == Some(&place.lower)
                });
                if !correct {
                    c.incorrect_msd += 1;
                }
            }
        }

        for m in ideal.msd_labels() {
            let place = ideal.msd_placement(m).expect("listed label");
            let ok = placed.get(m).is_some_and(|n| {
                n.is_msd()
                    && n.parent_edge.as_ref() == Some(&m.suffix_from(place.upper.len()))
                    && n.msd_child_edge().map(|(_, e)| m.concat(e)).as_ref() == Some(&place.lower)
            });
            if !ok {
                c.missing_msd += 1;
            }
        }

        for w in ideal.key2_nodes() {
            let needs = if w.is_empty() {
                ideal.root_children() > 0
            } else {
                true
            };
            if needs && placed.get(w).is_none_or(|n| n.key2.is_empty()) {
                c.unmatched_key2 += 1;
            }
        }

        for leaf in ideal.leaves().filter(|l| !l.is_empty()) {
            let ok = placed.get(leaf).and_then(|n| n.r_ref.as_ref()).is_some_and(|r| {
                ideal.is_key2_node(r)
                    && r.is_proper_prefix_of(leaf)
                    && placed.get(r).is_some_and(|w| w.key2.contains(leaf))
            });
            if !ok {
                c.unmatched_r += 1;
            }
        }
        c
    }

    pub fn values(&self) -> [usize; 10] {
        [
            self.misstored_keys,
            self.malformed_fields,
            self.empty_subtree_depth,
            self.unnecessary_nodes,
            self.locally_unnecessary,
            self.parentless,
            self.incorrect_msd,
            self.missing_msd,
            self.unmatched_key2,
            self.unmatched_r,
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.values().iter().all(|&v| v == 0)
    }
}
