//! The correct trie for a key set, used as the reference model.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::TrieError;
use crate::label::BitLabel;
use crate::trie::msd::{edge_between, msd_label};
use crate::trie::node::HptNode;

/// An Msd node together with the Patricia pair it sits between.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MsdPlacement {
    pub upper: BitLabel,
    pub lower: BitLabel,
}

#[derive(Clone, Debug)]
pub struct IdealHpt {
    keys: BTreeSet<BitLabel>,
    patricia: BTreeSet<BitLabel>,
    msd: BTreeMap<BitLabel, MsdPlacement>,
    parent: BTreeMap<BitLabel, BitLabel>,
    children: BTreeMap<BitLabel, [Option<BitLabel>; 2]>,
    key2_assignment: BTreeMap<BitLabel, Vec<BitLabel>>,
    r_assignment: BTreeMap<BitLabel, BitLabel>,
}

impl IdealHpt {
    pub fn build<'a, I>(keys: I) -> Result<Self, TrieError>
    where
        I: IntoIterator<Item = &'a BitLabel>,
    {
        let mut key_set = BTreeSet::new();
        for k in keys {
            if !key_set.insert(k.clone()) {
                return Err(TrieError::DuplicateKey(k.clone()));
            }
        }
        if key_set.is_empty() {
            return Err(TrieError::EmptyKeySet);
        }

        // In lexicographic order the lcp of every pair already occurs as the
        // lcp of some adjacent pair.
        let mut patricia: BTreeSet<BitLabel> = key_set.iter().cloned().collect();
        patricia.insert(BitLabel::empty());
        let sorted: Vec<&BitLabel> = key_set.iter().collect();
        for pair in sorted.windows(2) {
            patricia.insert(pair[0].lcp(pair[1]));
        }

        let mut parent = BTreeMap::new();
        let mut children: BTreeMap<BitLabel, [Option<BitLabel>; 2]> =
            patricia.iter().map(|p| (p.clone(), [None, None])).collect();
        for label in patricia.iter().filter(|l| !l.is_empty()) {
            let up = (0..label.len())
                .rev()
                .map(|n| label.prefix(n))
                .find(|p| patricia.contains(p))
                .expect("root is a prefix of every label");
            let side = label.bit(up.len()) as usize;
            children.get_mut(&up).expect("parent is Patricia")[side] = Some(label.clone());
            parent.insert(label.clone(), up);
        }

        let mut msd = BTreeMap::new();
        for (child, up) in &parent {
            if let Some(m) = msd_label(up, child)? {
                msd.insert(
                    m,
                    MsdPlacement {
                        upper: up.clone(),
                        lower: child.clone(),
                    },
                );
            }
        }

        let mut ideal = IdealHpt {
            keys: key_set,
            patricia,
            msd,
            parent,
            children,
            key2_assignment: BTreeMap::new(),
            r_assignment: BTreeMap::new(),
        };
        ideal.assign_key2();
        Ok(ideal)
    }

    /// Deepest-first greedy matching of leaves to key₂ nodes above them.
    fn assign_key2(&mut self) {
        let mut leaves: Vec<BitLabel> = self.leaves().filter(|l| !l.is_empty()).cloned().collect();
        leaves.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        for leaf in leaves {
            let mut cursor = self.parent.get(&leaf).cloned();
            while let Some(w) = cursor {
                let cap = if w.is_empty() { 2 } else { 1 };
                if self.is_key2_node(&w) {
                    let slots = self.key2_assignment.entry(w.clone()).or_default();
                    if slots.len() < cap {
                        slots.push(leaf.clone());
                        self.r_assignment.insert(leaf.clone(), w);
                        break;
                    }
                }
                cursor = self.parent.get(&w).cloned();
            }
            assert!(
                self.r_assignment.contains_key(&leaf),
                "no key2 node available for leaf {leaf}"
            );
        }
        self.key2_assignment.retain(|_, v| !v.is_empty());
    }

    pub fn keys(&self) -> &BTreeSet<BitLabel> {
        &self.keys
    }

    pub fn patricia_labels(&self) -> &BTreeSet<BitLabel> {
        &self.patricia
    }

    pub fn msd_labels(&self) -> impl Iterator<Item = &BitLabel> {
        self.msd.keys()
    }

    pub fn msd_placement(&self, label: &BitLabel) -> Option<&MsdPlacement> {
        self.msd.get(label)
    }

    pub fn msd_count(&self) -> usize {
        self.msd.len()
    }

    pub fn is_patricia(&self, label: &BitLabel) -> bool {
        self.patricia.contains(label)
    }

    pub fn is_msd(&self, label: &BitLabel) -> bool {
        self.msd.contains_key(label)
    }

    pub fn contains(&self, label: &BitLabel) -> bool {
        self.is_patricia(label) || self.is_msd(label)
    }

    pub fn node_count(&self) -> usize {
        self.patricia.len() + self.msd.len()
    }

    /// Patricia parent of a non-root Patricia label.
    pub fn parent_of(&self, label: &BitLabel) -> Option<&BitLabel> {
        self.parent.get(label)
    }

    pub fn children_of(&self, label: &BitLabel) -> Option<&[Option<BitLabel>; 2]> {
        self.children.get(label)
    }

    pub fn children_count(&self, label: &BitLabel) -> usize {
        self.children
            .get(label)
            .map_or(0, |c| c.iter().filter(|x| x.is_some()).count())
    }

    pub fn is_key2_node(&self, label: &BitLabel) -> bool {
        self.is_patricia(label) && (label.is_empty() || self.children_count(label) == 2)
    }

    pub fn key2_nodes(&self) -> impl Iterator<Item = &BitLabel> {
        self.patricia.iter().filter(|l| self.is_key2_node(l))
    }

    pub fn leaves(&self) -> impl Iterator<Item = &BitLabel> {
        self.patricia.iter().filter(|l| self.children_count(l) == 0)
    }

    pub fn is_leaf(&self, label: &BitLabel) -> bool {
        self.is_patricia(label) && self.children_count(label) == 0
    }

    pub fn key2_assignment(&self) -> &BTreeMap<BitLabel, Vec<BitLabel>> {
        &self.key2_assignment
    }

    pub fn root_children(&self) -> usize {
        self.children_count(&BitLabel::empty())
    }

    /// Σ |k| over the keys.
    pub fn d_bits(&self) -> usize {
        self.keys.iter().map(BitLabel::len).sum()
    }

    /// All nodes with edges, keys, and the chosen key₂/r matching filled in.
    pub fn nodes(&self) -> Vec<HptNode> {
        let mut out = Vec::with_capacity(self.node_count());
        for label in &self.patricia {
            let mut node = HptNode::patricia(label.clone());
            if self.keys.contains(label) {
                node.key = Some(label.clone());
            }
            if let Some(up) = self.parent.get(label) {
                node.parent_edge = Some(edge_between(up, label).expect("parent is a proper prefix"));
            }
            let [c0, c1] = &self.children[label];
            node.child0 = c0.as_ref().map(|c| c.suffix_from(label.len()));
            node.child1 = c1.as_ref().map(|c| c.suffix_from(label.len()));
            if let Some(slots) = self.key2_assignment.get(label) {
                node.key2 = slots.clone();
            }
            node.r_ref = self.r_assignment.get(label).cloned();
            out.push(node);
        }
        for (label, place) in &self.msd {
            let mut node = HptNode::msd(label.clone());
            node.parent_edge = Some(label.suffix_from(place.upper.len()));
            *node.child_edge_mut(place.lower.bit(label.len())) =
                Some(place.lower.suffix_from(label.len()));
            out.push(node);
        }
        out
    }
}

/// Convenience wrapper over [`IdealHpt::build`].
pub fn build_ideal_hpt<'a, I>(keys: I) -> Result<IdealHpt, TrieError>
where
    I: IntoIterator<Item = &'a BitLabel>,
{
    IdealHpt::build(keys)
}
