//! Presentation handling and the upward key₂ walks.

use crate::dht::message::Message;
use crate::dht::system::SystemState;
use crate::label::BitLabel;
use crate::trie::node::HptNode;

/// Where a presentation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// A delivered Linearize message. Before it is delegated onward, `u` is
    /// looked up; presentations of absent or Msd nodes are dropped there.
    Message,
    /// Edges of a node under construction. A new Msd node may collect its
    /// two edges this way; stored Msd nodes never take part.
    Fresh,
}

fn genuine(sys: &mut SystemState, source: Source, u: &BitLabel) -> bool {
    source == Source::Fresh || sys.dht_search(u).is_some_and(|n| n.is_patricia())
}

/// Presents `u` to `v`, updating `v` in place and sending delegations.
pub fn linearize_into(sys: &mut SystemState, v: &mut HptNode, u: &BitLabel, source: Source) {
    if (v.is_msd() && source == Source::Message) || *u == v.label {
        return;
    }
    let bv = v.label.clone();
    if u.lcp_len(&bv) < bv.len() {
        match v.parent_label() {
            None if v.parent_edge.is_none() => {
                // u above v
                if u.is_prefix_of(&bv) {
                    v.parent_edge = Some(bv.suffix_from(u.len()));
                }
            }
            None => {}
            Some(par) => {
                if par == *u || !genuine(sys, source, u) {
                    return;
                }
                sys.send(Message::linearize(par.clone(), u.clone()));
                if par.is_proper_prefix_of(u) && u.is_proper_prefix_of(&bv) {
                    // u in between
                    v.parent_edge = Some(bv.suffix_from(u.len()));
                }
            }
        }
    } else if bv.is_proper_prefix_of(u) {
        let side = u.bit(bv.len());
        let to_u = u.suffix_from(bv.len());
        match v.child_label(side) {
            None => *v.child_edge_mut(side) = Some(to_u),
            Some(c) if c == *u => {}
            Some(c) if c.is_proper_prefix_of(u) => {
                if genuine(sys, source, u) {
                    sys.send(Message::linearize(c, u.clone()));
                }
            }
            Some(c) if u.is_proper_prefix_of(&c) => {
                if genuine(sys, source, u) {
                    *v.child_edge_mut(side) = Some(to_u);
                    sys.send(Message::linearize(c, u.clone()));
                }
            }
            Some(_) => {
                // common parent for c and u needed
                sys.send(Message::linearize(u.clone(), bv));
            }
        }
    }
}

/// Applies [`linearize_into`] for each target in turn.
pub fn multi_linearize(sys: &mut SystemState, mut v: HptNode, targets: &[BitLabel]) -> HptNode {
    for u in targets {
        linearize_into(sys, &mut v, u, Source::Fresh);
    }
    v
}

/// Sends one presentation to each neighbour of a Patricia node.
pub fn linearize_timeout(sys: &mut SystemState, v: &HptNode) {
    if !v.is_patricia() {
        return;
    }
    if let Some(par) = v.parent_label() {
        sys.send(Message::linearize(par, v.label.clone()));
    }
    for c in v.child_labels() {
        sys.send(Message::linearize(c, v.label.clone()));
    }
}

fn forward_up(sys: &mut SystemState, w: &HptNode, hops_left: u32, make: impl FnOnce(BitLabel, u32) -> Message) {
    if hops_left == 0 {
        return;
    }
    if let Some(par) = w.parent_label() {
        sys.send(make(par, hops_left - 1));
    }
}

/// A key₂ node `origin` with a free slot asks upward for a slot value
/// below it; the first ancestor holding one hands it down.
pub fn handle_key2_probe(sys: &mut SystemState, w: &HptNode, origin: &BitLabel, hops_left: u32) {
    if !w.is_patricia() {
        return;
    }
    if let Some(s) = w.key2.iter().find(|s| origin.is_proper_prefix_of(s)).cloned() {
        sys.dht_update(origin, |o| {
            if o.is_key2_node() && o.has_free_key2_slot() && !o.key2.contains(&s) {
                o.key2.push(s);
            }
        });
        return;
    }
    let origin = origin.clone();
    forward_up(sys, w, hops_left, |t, h| Message::key2_probe(t, origin, h));
}

/// A leaf without `r` walks upward until a key₂ node with room takes it.
/// Returns true when `w` claimed the leaf.
pub fn handle_leaf_present(
    sys: &mut SystemState,
    w: &mut HptNode,
    origin: &BitLabel,
    hops_left: u32,
) -> bool {
    if !w.is_patricia() {
        return false;
    }
    let fits = w.is_key2_node()
        && w.label.is_proper_prefix_of(origin)
        && (w.has_free_key2_slot() || w.key2.contains(origin));
    if fits {
        let leaf = sys.dht_search(origin);
        let claimable = leaf.as_ref().is_some_and(|l| {
            l.is_patricia()
                && l.children_count() == 0
                && l.r_ref.as_ref().is_none_or(|r| *r == w.label)
        });
        if claimable {
            if !w.key2.contains(origin) {
                w.key2.push(origin.clone());
            }
            let me = w.label.clone();
            sys.dht_update(origin, |l| l.r_ref = Some(me));
            return true;
        }
        return false;
    }
    let origin = origin.clone();
    forward_up(sys, w, hops_left, |t, h| Message::leaf_present(t, origin, h));
    false
}
