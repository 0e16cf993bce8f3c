//! Checks a system snapshot against the ideal trie of its key set.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::dht::message::MessageKind;
use crate::dht::system::SystemState;
use crate::label::BitLabel;
use crate::protocol::instrumentation::PhaseInstrumentation;
use crate::trie::ideal::IdealHpt;
use crate::trie::msd::edge_between;
use crate::trie::node::HptNode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    LooseKey,
    MissingNode,
    UnexpectedNode,
    WrongKind,
    DuplicateNode,
    Misplaced,
    KeyMismatch,
    ParentEdge,
    ChildEdge,
    MsdEdges,
    Key2Slot,
    Key2Unfilled,
    RReference,
    StrayMessage,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: Rule,
    pub label: Option<BitLabel>,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct LegalityReport {
    pub legal: bool,
    pub violations: Vec<Violation>,
    pub counters: PhaseInstrumentation,
}

impl LegalityReport {
    pub fn has_rule(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

struct Collector(Vec<Violation>);

impl Collector {
    fn add(&mut self, rule: Rule, label: Option<&BitLabel>, description: impl Into<String>) {
        self.0.push(Violation {
            rule,
            label: label.cloned(),
            description: description.into(),
        });
    }
}

fn expect_edge(
    out: &mut Collector,
    rule: Rule,
    label: &BitLabel,
    what: &str,
    got: Option<&BitLabel>,
    want: Option<&BitLabel>,
) {
    if got != want {
        let show = |e: Option<&BitLabel>| e.map_or("nil".to_string(), |e| e.to_string());
        out.add(
            rule,
            Some(label),
            format!("{what} is {}, expected {}", show(got), show(want)),
        );
    }
}

/// Verifies every clause of the legal-state definition. In `strict` mode
/// every pending message must also be a presentation between neighbours.
pub fn check_legal(sys: &SystemState, ideal: &IdealHpt, strict: bool) -> LegalityReport {
    let mut out = Collector(Vec::new());

    for p in sys.peers() {
        for k in &p.loose_keys {
            out.add(Rule::LooseKey, Some(k), "key held outside any node");
        }
    }

    let mut by_label: BTreeMap<&BitLabel, Vec<(usize, &HptNode)>> = BTreeMap::new();
    for (peer, n) in sys.all_nodes() {
        by_label.entry(&n.label).or_default().push((peer, n));
    }
    let mut placed: BTreeMap<&BitLabel, &HptNode> = BTreeMap::new();
    for (label, copies) in &by_label {
        if copies.len() > 1 {
            out.add(Rule::DuplicateNode, Some(label), format!("stored {} times", copies.len()));
        }
        let owner = sys.responsible_peer(label);
        for (peer, n) in copies {
            if *peer != owner {
                out.add(Rule::Misplaced, Some(label), format!("held by peer {peer}, owner is {owner}"));
            } else {
                placed.insert(label, n);
            }
        }
        if !ideal.contains(label) {
            out.add(Rule::UnexpectedNode, Some(label), "not part of the ideal trie");
        }
    }

    for label in ideal.patricia_labels().iter().chain(ideal.msd_labels()) {
        if !by_label.contains_key(label) {
            out.add(Rule::MissingNode, Some(label), "ideal node not stored");
        }
    }

    for (label, n) in &placed {
        let label: &BitLabel = label;
        if ideal.is_patricia(label) {
            if !n.is_patricia() {
                out.add(Rule::WrongKind, Some(label), "should be a Patricia node");
                continue;
            }
            check_patricia(&mut out, ideal, &placed, n);
        } else if let Some(place) = ideal.msd_placement(label) {
            if !n.is_msd() {
                out.add(Rule::WrongKind, Some(label), "should be an Msd node");
                continue;
            }
            let want_parent = label.suffix_from(place.upper.len());
            expect_edge(&mut out, Rule::MsdEdges, label, "parent edge", n.parent_edge.as_ref(), Some(&want_parent));
            let side = place.lower.bit(label.len());
            let want_child = place.lower.suffix_from(label.len());
            expect_edge(&mut out, Rule::MsdEdges, label, "child edge", n.child_edge(side), Some(&want_child));
            expect_edge(&mut out, Rule::MsdEdges, label, "other child edge", n.child_edge(!side), None);
            if n.key.is_some() || !n.key2.is_empty() || n.r_ref.is_some() {
                out.add(Rule::KeyMismatch, Some(label), "Msd node stores key data");
            }
        }
    }

    if strict {
        for m in sys.pending_messages() {
            let ok = match &m.kind {
                MessageKind::Linearize { presented } => {
                    ideal.is_patricia(presented)
                        && ideal.is_patricia(&m.target)
                        && (ideal.parent_of(presented) == Some(&m.target)
                            || ideal.parent_of(&m.target) == Some(presented))
                }
                _ => false,
            };
            if !ok {
                out.add(Rule::StrayMessage, Some(&m.target), format!("pending {:?}", m.kind));
            }
        }
    }

    let violations = out.0;
    LegalityReport {
        legal: violations.is_empty(),
        violations,
        counters: PhaseInstrumentation::measure(sys, ideal),
    }
}

fn check_patricia(
    out: &mut Collector,
    ideal: &IdealHpt,
    placed: &BTreeMap<&BitLabel, &HptNode>,
    n: &HptNode,
) {
    let label = &n.label;
    let want_key = ideal.keys().contains(label).then_some(label);
    if n.key.as_ref() != want_key {
        out.add(Rule::KeyMismatch, Some(label), format!("key is {:?}", n.key));
    }
    let want_parent = ideal
        .parent_of(label)
        .map(|p| edge_between(p, label).expect("ideal parent is a prefix"));
    expect_edge(out, Rule::ParentEdge, label, "parent edge", n.parent_edge.as_ref(), want_parent.as_ref());
    let children = ideal.children_of(label).expect("ideal Patricia label");
    for (bit, want) in [(false, &children[0]), (true, &children[1])] {
        let want_edge = want.as_ref().map(|c| c.suffix_from(label.len()));
        expect_edge(out, Rule::ChildEdge, label, "child edge", n.child_edge(bit), want_edge.as_ref());
    }

    if ideal.is_key2_node(label) {
        let cap = if label.is_empty() { 2 } else { 1 };
        if n.key2.len() > cap {
            out.add(Rule::Key2Slot, Some(label), format!("{} slots, capacity {cap}", n.key2.len()));
        }
        for (i, s) in n.key2.iter().enumerate() {
            if n.key2[..i].contains(s) {
                out.add(Rule::Key2Slot, Some(label), format!("slot {s} repeated"));
            }
            let back = placed.get(s).and_then(|leaf| leaf.r_ref.as_ref());
            if !(ideal.is_leaf(s) && label.is_proper_prefix_of(s) && back == Some(label)) {
                out.add(Rule::Key2Slot, Some(label), format!("slot {s} is not a leaf referencing back"));
            }
        }
        let needs = !label.is_empty() || ideal.root_children() > 0;
        if needs && n.key2.is_empty() {
            out.add(Rule::Key2Unfilled, Some(label), "key2 node holds no slot");
        }
    } else if !n.key2.is_empty() {
        out.add(Rule::Key2Slot, Some(label), "only key2 nodes hold slots");
    }

    if ideal.is_leaf(label) && !label.is_empty() {
        match &n.r_ref {
            None => out.add(Rule::RReference, Some(label), "leaf without r"),
            Some(r) => {
                let holds = placed.get(r).is_some_and(|w| w.key2.contains(label));
                if !(ideal.is_key2_node(r) && r.is_proper_prefix_of(label) && holds) {
                    out.add(Rule::RReference, Some(label), format!("r = {r} does not hold this leaf"));
                }
            }
        }
    } else if n.r_ref.is_some() {
        out.add(Rule::RReference, Some(label), "only leaves store r");
    }
}
