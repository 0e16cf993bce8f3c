use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::dht::hash::position_to_unit;
use crate::dht::message::Message;
use crate::label::BitLabel;
use crate::trie::node::HptNode;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Peer {
    /// Ring position as a fraction of 2⁶⁴.
    pub id: u64,
    pub store: BTreeMap<BitLabel, HptNode>,
    pub channel: VecDeque<Message>,
    /// Keys held by this peer outside of any node.
    #[serde(default)]
    pub loose_keys: Vec<BitLabel>,
    #[serde(default)]
    pub cursor: Option<BitLabel>,
}

impl Peer {
    pub fn new(id: u64) -> Self {
        Self {
            id,
            ..Self::default()
        }
    }

    pub fn point(&self) -> f64 {
        position_to_unit(self.id)
    }

    /// Advances the Timeout cursor cyclically and returns the selected label.
    pub fn advance_cursor(&mut self) -> Option<BitLabel> {
        use std::ops::Bound::{Excluded, Unbounded};
        let next = match &self.cursor {
            Some(c) => self
                .store
                .range((Excluded(c.clone()), Unbounded))
                .next()
                .or_else(|| self.store.iter().next()),
            None => self.store.iter().next(),
        }
        .map(|(l, _)| l.clone());
        self.cursor = next.clone();
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::bl;

    #[test]
    fn cursor_cycles_over_labels() {
        let mut p = Peer::new(1);
        assert_eq!(p.advance_cursor(), None);
        for l in ["1", "", "01"] {
            p.store.insert(bl(l), HptNode::patricia(bl(l)));
        }
        let seen: Vec<_> = (0..4).map(|_| p.advance_cursor().unwrap()).collect();
        assert_eq!(seen, vec![bl(""), bl("01"), bl("1"), bl("")]);
        // a removed cursor label still advances to its successor
        p.advance_cursor();
        p.store.remove(&bl("01"));
        assert_eq!(p.advance_cursor(), Some(bl("1")));
    }
}
