//! Client operations: prefix searches, key insertion and deletion.

use crate::dht::system::{InsertVerdict, SystemState};
use crate::error::SearchError;
use crate::label::BitLabel;
use crate::trie::msd::edge_between;
use crate::trie::node::HptNode;

/// MSB-first search over prefix lengths `0..=limit` of `x`, reading nodes
/// through `fetch`. Returns the deepest Patricia node found whose label is a
/// prefix of `x` no longer than `limit`.
///
/// A hit's child edge toward `x` tells us that the child's length is on the
/// path as well, so lengths up to it are accepted without another read.
pub fn binary_search_by<F>(x: &BitLabel, limit: usize, mut fetch: F) -> Option<HptNode>
where
    F: FnMut(&BitLabel) -> Option<HptNode>,
{
    assert!(limit <= x.len());
    let on_path = |label: &BitLabel| label.len() <= limit && label.is_prefix_of(x);

    let mut len = 0usize;
    let mut known = 0usize;
    let mut best: Option<HptNode> = None;
    if limit > 0 {
        let top = (usize::BITS - 1 - limit.leading_zeros()) as usize;
        for i in (0..=top).rev() {
            let cand = len + (1 << i);
            if cand > limit {
                continue;
            }
            if cand <= known {
                len = cand;
                continue;
            }
            let Some(node) = fetch(&x.prefix(cand)) else {
                continue;
            };
            len = cand;
            if node.is_patricia() {
                let deeper = (cand < x.len())
                    .then(|| node.child_label(x.bit(cand)))
                    .flatten()
                    .filter(|c| on_path(c));
                match deeper {
                    Some(c) => {
                        known = c.len();
                        best = Some(node);
                    }
                    None => return Some(node),
                }
            } else {
                let below = node
                    .msd_child_edge()
                    .map(|(_, e)| node.label.concat(e))
                    .filter(|c| on_path(c));
                match below {
                    Some(c) => known = c.len(),
                    None => {
                        let Some(up) = node.parent_label() else {
                            return best;
                        };
                        return fetch(&up).filter(HptNode::is_patricia).or(best);
                    }
                }
            }
        }
    }
    if best.as_ref().is_some_and(|b| b.label.len() == len) {
        return best;
    }
    match fetch(&x.prefix(len)) {
        Some(n) if n.is_patricia() => Some(n),
        _ => best,
    }
}

/// Deepest Patricia node whose label is a proper prefix of `x`.
pub fn binary_prefix_search(sys: &mut SystemState, x: &BitLabel) -> Option<HptNode> {
    if x.is_empty() {
        return None;
    }
    binary_search_by(x, x.len() - 1, |l| sys.dht_search(l))
}

/// Deepest Patricia node whose label is a prefix of `x`, `x` included.
pub fn deepest_prefix_node(sys: &mut SystemState, x: &BitLabel) -> Option<HptNode> {
    binary_search_by(x, x.len(), |l| sys.dht_search(l))
}

/// Read-count bound for [`binary_prefix_search`] on a legal trie.
pub fn binary_search_read_bound(x_len: usize) -> u64 {
    let n = x_len.max(2);
    (usize::BITS - 1 - n.leading_zeros()) as u64 + 2
}

fn candidates(node: &HptNode) -> impl Iterator<Item = &BitLabel> {
    node.key.iter().chain(node.key2.iter())
}

fn pick_best<'a, I: Iterator<Item = &'a BitLabel>>(x: &BitLabel, it: I) -> Option<&'a BitLabel> {
    let mut best: Option<&BitLabel> = None;
    for k in it {
        if best.is_none_or(|b| k.lcp_len(x) > b.lcp_len(x)) {
            best = Some(k);
        }
    }
    best
}

/// A key sharing a longest common prefix with `x`.
pub fn prefix_search(sys: &mut SystemState, x: &BitLabel) -> Result<BitLabel, SearchError> {
    let u = deepest_prefix_node(sys, x).ok_or(SearchError::NoKeys)?;
    let from_u = pick_best(x, candidates(&u)).cloned();
    let child = (u.label.len() < x.len())
        .then(|| u.child_label(x.bit(u.label.len())))
        .flatten();
    if let Some(c_label) = child {
        let reach = c_label.lcp_len(x);
        if from_u.as_ref().is_none_or(|k| k.lcp_len(x) < reach) {
            if let Some(c) = sys.dht_search(&c_label) {
                let from_c = pick_best(x, candidates(&c)).cloned();
                return match (from_u, from_c) {
                    (Some(a), Some(b)) if b.lcp_len(x) > a.lcp_len(x) => Ok(b),
                    (Some(a), _) => Ok(a),
                    (None, Some(b)) => Ok(b),
                    (None, None) => Err(SearchError::NoKeys),
                };
            }
        }
    }
    from_u.ok_or(SearchError::NoKeys)
}

/// [`prefix_search`] together with the number of DHT reads it made.
pub fn prefix_search_counted(
    sys: &mut SystemState,
    x: &BitLabel,
) -> (Result<BitLabel, SearchError>, u64) {
    let before = sys.metrics.dht_reads;
    let res = prefix_search(sys, x);
    (res, sys.metrics.dht_reads - before)
}

/// Inserts a key node for `k`, seeding its parent edge when a prefix node
/// is found. The protocol integrates it over the following rounds.
pub fn insert_key(sys: &mut SystemState, k: &BitLabel) -> InsertVerdict {
    let mut node = HptNode::key_node(k.clone());
    if let Some(w) = binary_prefix_search(sys, k) {
        node.parent_edge = edge_between(&w.label, k).ok();
    }
    sys.dht_insert(node)
}

/// Clears the key stored at label `k`. Returns false when there was none.
pub fn delete_key(sys: &mut SystemState, k: &BitLabel) -> bool {
    match sys.dht_search(k) {
        Some(n) if n.key.as_ref() == Some(k) => sys.dht_update(k, |n| n.key = None),
        _ => false,
    }
}
