use serde::{Deserialize, Serialize};

use crate::label::BitLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Patricia,
    Msd,
}

/// One stored trie node.
///
/// Edges are stored as bit strings relative to the node's own label:
/// the parent is `label` with `parent_edge` stripped from the end, a child
/// is `label ∘ child_edge`. Corrupted states may hold edges of the wrong
/// form, so nothing here is enforced on construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HptNode {
    pub label: BitLabel,
    pub kind: NodeKind,
    #[serde(default)]
    pub parent_edge: Option<BitLabel>,
    #[serde(default)]
    pub child0: Option<BitLabel>,
    #[serde(default)]
    pub child1: Option<BitLabel>,
    #[serde(default)]
    pub key: Option<BitLabel>,
    /// Occupied key₂ slots. Capacity is 2 at the root and 1 elsewhere.
    #[serde(default)]
    pub key2: Vec<BitLabel>,
    #[serde(default)]
    pub r_ref: Option<BitLabel>,
}

impl HptNode {
    pub fn patricia(label: BitLabel) -> Self {
        Self::bare(label, NodeKind::Patricia)
    }

    pub fn msd(label: BitLabel) -> Self {
        Self::bare(label, NodeKind::Msd)
    }

    /// A Patricia node storing `key` at label `key`.
    pub fn key_node(key: BitLabel) -> Self {
        let mut node = Self::patricia(key.clone());
        node.key = Some(key);
        node
    }

    fn bare(label: BitLabel, kind: NodeKind) -> Self {
        Self {
            label,
            kind,
            parent_edge: None,
            child0: None,
            child1: None,
            key: None,
            key2: Vec::new(),
            r_ref: None,
        }
    }

    pub fn is_msd(&self) -> bool {
        self.kind == NodeKind::Msd
    }

    pub fn is_patricia(&self) -> bool {
        self.kind == NodeKind::Patricia
    }

    pub fn is_root(&self) -> bool {
        self.label.is_empty()
    }

    pub fn children_count(&self) -> usize {
        self.child0.is_some() as usize + self.child1.is_some() as usize
    }

    /// Root, or a node with two children.
    pub fn is_key2_node(&self) -> bool {
        self.is_patricia() && (self.is_root() || self.children_count() == 2)
    }

    pub fn key2_capacity(&self) -> usize {
        if self.is_root() {
            2
        } else {
            1
        }
    }

    pub fn has_free_key2_slot(&self) -> bool {
        self.key2.len() < self.key2_capacity()
    }

    pub fn child_edge(&self, bit: bool) -> Option<&BitLabel> {
        if bit {
            self.child1.as_ref()
        } else {
            self.child0.as_ref()
        }
    }

    pub fn child_edge_mut(&mut self, bit: bool) -> &mut Option<BitLabel> {
        if bit {
            &mut self.child1
        } else {
            &mut self.child0
        }
    }

    /// Label of the child on side `bit`, if that edge is set.
    pub fn child_label(&self, bit: bool) -> Option<BitLabel> {
        self.child_edge(bit).map(|e| self.label.concat(e))
    }

    pub fn child_labels(&self) -> impl Iterator<Item = BitLabel> + '_ {
        [false, true].into_iter().filter_map(|b| self.child_label(b))
    }

    /// Label obtained by stripping the parent edge, if it is a suffix.
    pub fn parent_label(&self) -> Option<BitLabel> {
        let edge = self.parent_edge.as_ref()?;
        edge.is_suffix_of(&self.label)
            .then(|| self.label.prefix(self.label.len() - edge.len()))
    }

    /// The single child edge of an Msd node, as (side, edge).
    pub fn msd_child_edge(&self) -> Option<(bool, &BitLabel)> {
        match (&self.child0, &self.child1) {
            (Some(e), None) => Some((false, e)),
            (None, Some(e)) => Some((true, e)),
            _ => None,
        }
    }

    /// The edge this node would use to point to `child`, i.e. its child
    /// edge on the side `child` branches off to.
    pub fn edge_toward(&self, child: &BitLabel) -> Option<&BitLabel> {
        if child.len() <= self.label.len() {
            return None;
        }
        self.child_edge(child.bit(self.label.len()))
    }
}

/// Number of present child edges.
pub fn node_children_count(v: &HptNode) -> usize {
    v.children_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::bl;

    #[test]
    fn children_count_examples() {
        let mut v = HptNode::patricia(bl("0"));
        assert_eq!(node_children_count(&v), 0);
        v.child0 = Some(bl("01"));
        v.child1 = Some(bl("110"));
        assert_eq!(node_children_count(&v), 2);
        let mut m = HptNode::msd(bl("00"));
        m.child1 = Some(bl("1"));
        assert_eq!(node_children_count(&m), 1);
    }

    #[test]
    fn parent_and_child_labels() {
        let mut v = HptNode::patricia(bl("0110"));
        v.parent_edge = Some(bl("110"));
        assert_eq!(v.parent_label(), Some(bl("0")));
        v.parent_edge = Some(bl("01"));
        assert_eq!(v.parent_label(), None);
        v.child1 = Some(bl("1"));
        assert_eq!(v.child_label(true), Some(bl("01101")));
        assert_eq!(v.edge_toward(&bl("011011")), Some(&bl("1")));
        assert_eq!(v.edge_toward(&bl("01100")), None);
    }

    #[test]
    fn key2_capacity_depends_on_root() {
        assert_eq!(HptNode::patricia(bl("")).key2_capacity(), 2);
        assert_eq!(HptNode::patricia(bl("0")).key2_capacity(), 1);
        assert!(HptNode::patricia(bl("")).is_key2_node());
        assert!(!HptNode::msd(bl("")).is_key2_node());
    }
}
