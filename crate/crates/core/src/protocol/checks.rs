//! Per-node checks run by each Timeout.

use crate::dht::message::Message;
use crate::dht::system::{InsertVerdict, SystemState};
use crate::label::BitLabel;
use crate::protocol::linearize::multi_linearize;
use crate::search::binary_prefix_search;
use crate::trie::msd::{edge_between, msd_label};
use crate::trie::node::HptNode;

/// Whether the checked node still exists after a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Deleted,
}

/// Why a node was created, for the optional creation log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Creation {
    Root,
    /// Branching node between `v` and the existing child `other`.
    Branch { label: BitLabel, v: BitLabel, other: BitLabel },
    Msd { label: BitLabel },
    Key { label: BitLabel },
}

pub(crate) fn local(sys: &SystemState, host: usize, label: &BitLabel) -> Option<HptNode> {
    sys.peer(host).store.get(label).cloned()
}

pub(crate) fn write_back(sys: &mut SystemState, host: usize, node: HptNode) {
    sys.peer_mut(host).store.insert(node.label.clone(), node);
}

fn starts_with(edge: &BitLabel, bit: bool) -> bool {
    edge.first() == Some(bit)
}

/// Clears fields that cannot be correct and moves a key stored under the
/// wrong label to a node of its own.
pub fn check_node_info(
    sys: &mut SystemState,
    host: usize,
    label: &BitLabel,
    log: &mut Option<Vec<Creation>>,
) -> Flow {
    let Some(mut v) = local(sys, host, label) else {
        return Flow::Deleted;
    };
    if v.parent_edge
        .as_ref()
        .is_some_and(|e| e.is_empty() || !e.is_suffix_of(&v.label))
    {
        v.parent_edge = None;
    }
    for bit in [false, true] {
        if v.child_edge(bit).is_some_and(|e| !starts_with(e, bit)) {
            *v.child_edge_mut(bit) = None;
        }
    }
    if v.is_msd() {
        if let Some(k) = v.key.take() {
            sys.park_loose_key(k);
        }
        v.key2.clear();
        v.r_ref = None;
        write_back(sys, host, v);
        return Flow::Continue;
    }
    if let Some(k) = v.key.clone().filter(|k| *k != v.label) {
        // wrong label
        let verdict = sys.dht_insert(HptNode::key_node(k.clone()));
        if verdict == InsertVerdict::Rejected {
            sys.park_loose_key(k.clone());
        } else if let Some(log) = log {
            log.push(Creation::Key { label: k });
        }
        sys.peer_mut(host).store.remove(label);
        return Flow::Deleted;
    }
    if v.is_key2_node() {
        let own = v.label.clone();
        v.key2.retain(|s| own.is_proper_prefix_of(s));
        let mut seen = Vec::new();
        v.key2.retain(|s| {
            let fresh = !seen.contains(s);
            seen.push(s.clone());
            fresh
        });
        v.key2.truncate(v.key2_capacity());
    } else {
        v.key2.clear();
    }
    if v.r_ref.as_ref().is_some_and(|r| !r.is_proper_prefix_of(&v.label)) {
        v.r_ref = None;
    }
    if v.r_ref.is_some() && v.children_count() > 0 {
        v.r_ref = None;
    }
    write_back(sys, host, v);
    Flow::Continue
}

/// Finds or validates the parent, creating the root, branching nodes and
/// Msd nodes where they are missing.
pub fn check_parent_edge_info(
    sys: &mut SystemState,
    host: usize,
    label: &BitLabel,
    log: &mut Option<Vec<Creation>>,
) -> Flow {
    let Some(mut v) = local(sys, host, label) else {
        return Flow::Deleted;
    };
    if v.is_msd() || v.is_root() {
        return Flow::Continue;
    }
    let Some(par_label) = v.parent_label() else {
        match binary_prefix_search(sys, &v.label) {
            None => {
                // root does not exist
                if sys.dht_insert(HptNode::patricia(BitLabel::empty())) == InsertVerdict::Stored {
                    if let Some(log) = log {
                        log.push(Creation::Root);
                    }
                }
            }
            Some(w) => {
                v.parent_edge = edge_between(&w.label, &v.label).ok();
                write_back(sys, host, v);
            }
        }
        return Flow::Continue;
    };
    let par = match sys.dht_search(&par_label) {
        Some(p) if p.is_patricia() => p,
        _ => {
            v.parent_edge = None;
            write_back(sys, host, v);
            return Flow::Continue;
        }
    };
    let own_edge = v.parent_edge.clone().expect("parent label implies an edge");
    let Some(e_par) = par.edge_toward(&v.label).cloned() else {
        return Flow::Continue;
    };
    if e_par != own_edge && !e_par.is_prefix_of(&own_edge) && !own_edge.is_prefix_of(&e_par) {
        let other = par.label.concat(&e_par);
        let n_label = v.label.lcp(&other);
        match sys.dht_search(&n_label) {
            Some(existing) if existing.is_patricia() => {
                sys.send(Message::linearize(n_label, v.label.clone()));
            }
            _ => {
                if sys.dht_search(&other).is_some_and(|c| c.is_patricia()) {
                    let n = multi_linearize(
                        sys,
                        HptNode::patricia(n_label.clone()),
                        &[v.label.clone(), par.label.clone(), other.clone()],
                    );
                    if sys.dht_insert(n) == InsertVerdict::Stored {
                        if let Some(log) = log {
                            log.push(Creation::Branch {
                                label: n_label,
                                v: v.label.clone(),
                                other,
                            });
                        }
                    }
                }
            }
        }
    } else if e_par == own_edge {
        let Ok(Some(m_label)) = msd_label(&par.label, &v.label) else {
            return Flow::Continue;
        };
        let m = multi_linearize(
            sys,
            HptNode::msd(m_label.clone()),
            &[v.label.clone(), par.label.clone()],
        );
        let replace = match sys.dht_search(&m_label) {
            None => true,
            Some(old) => {
                old.is_msd()
                    && (old.parent_edge != m.parent_edge || old.msd_child_edge() != m.msd_child_edge())
            }
        };
        if replace {
            sys.dht_insert(m);
            if let Some(log) = log {
                log.push(Creation::Msd { label: m_label });
            }
        }
    }
    Flow::Continue
}

/// Drops child edges that lead nowhere or to an Msd node.
pub fn check_child_edge_info(sys: &mut SystemState, host: usize, label: &BitLabel) -> Flow {
    let Some(mut v) = local(sys, host, label) else {
        return Flow::Deleted;
    };
    if !v.is_patricia() {
        return Flow::Continue;
    }
    let mut changed = false;
    for bit in [false, true] {
        if let Some(c) = v.child_label(bit) {
            if !sys.dht_search(&c).is_some_and(|n| n.is_patricia()) {
                *v.child_edge_mut(bit) = None;
                changed = true;
            }
        }
    }
    if changed {
        write_back(sys, host, v);
    }
    Flow::Continue
}

fn bidirectional(p: &HptNode, c: &HptNode) -> bool {
    let Ok(edge) = edge_between(&p.label, &c.label) else {
        return false;
    };
    p.edge_toward(&c.label) == Some(&edge) && c.parent_edge.as_ref() == Some(&edge)
}

/// Deletes incorrect Msd nodes and Patricia nodes that are not needed.
pub fn check_validity(sys: &mut SystemState, host: usize, label: &BitLabel) -> Flow {
    let Some(v) = local(sys, host, label) else {
        return Flow::Deleted;
    };
    let keep = if v.is_msd() {
        match (v.parent_label(), v.msd_child_edge()) {
            (Some(p_label), Some((_, e))) => {
                let c_label = v.label.concat(e);
                let p = sys.dht_search(&p_label);
                let c = sys.dht_search(&c_label);
                match (p, c) {
                    (Some(p), Some(c)) => {
                        p.is_patricia()
                            && c.is_patricia()
                            && bidirectional(&p, &c)
                            && msd_label(&p.label, &c.label).ok().flatten().as_ref() == Some(&v.label)
                    }
                    _ => false,
                }
            }
            _ => false,
        }
    } else {
        v.key.is_some() || v.children_count() == 2 || v.is_root()
    };
    if keep {
        Flow::Continue
    } else {
        sys.delete_local(host, label);
        Flow::Deleted
    }
}

/// Keeps key₂ slots and `r` references consistent, pulling values from
/// above when a slot is free and asking upward for a key₂ node when a leaf
/// has no reference.
pub fn check_key2_info(sys: &mut SystemState, host: usize, label: &BitLabel) -> Flow {
    let Some(mut v) = local(sys, host, label) else {
        return Flow::Deleted;
    };
    if !v.is_patricia() {
        return Flow::Continue;
    }
    if v.is_key2_node() {
        let mut changed = false;
        for slot in v.key2.clone() {
            let k = sys.dht_search(&slot);
            let drop = match &k {
                None => true,
                Some(k) => {
                    k.is_msd()
                        || k.children_count() > 0
                        || k.r_ref.as_ref().is_some_and(|r| v.label.is_proper_prefix_of(r))
                }
            };
            if drop {
                v.key2.retain(|s| *s != slot);
                changed = true;
            } else if k
                .as_ref()
                .is_some_and(|k| k.r_ref.as_ref().is_none_or(|r| r.is_proper_prefix_of(&v.label)))
            {
                let me = v.label.clone();
                sys.dht_update(&slot, |k| k.r_ref = Some(me));
            }
        }
        if changed {
            write_back(sys, host, v.clone());
        }
        if let Some(par) = v.parent_label() {
            let hops = v.label.len() as u32;
            for _ in v.key2.len()..v.key2_capacity() {
                sys.send(Message::key2_probe(par.clone(), v.label.clone(), hops));
            }
        }
    } else if v.children_count() == 0 {
        match v.r_ref.clone() {
            Some(r) => {
                let k = sys.dht_search(&r);
                let suitable = k.as_ref().is_some_and(|k| {
                    k.is_key2_node() && (k.key2.contains(&v.label) || k.has_free_key2_slot())
                });
                if !suitable {
                    v.r_ref = None;
                    write_back(sys, host, v);
                } else if k.is_some_and(|k| !k.key2.contains(&v.label)) {
                    // repair reference
                    let me = v.label.clone();
                    sys.dht_update(&r, |k| {
                        if k.has_free_key2_slot() && !k.key2.contains(&me) {
                            k.key2.push(me);
                        }
                    });
                }
            }
            None => {
                if let Some(par) = v.parent_label() {
                    let hops = v.label.len() as u32;
                    sys.send(Message::leaf_present(par, v.label.clone(), hops));
                }
            }
        }
    }
    Flow::Continue
}
