//! Worked examples for the per-node checks and the Timeout action.

use shpt::dht::system::{PeerProtocol, SystemState};
use shpt::harness::legality::check_legal;
use shpt::harness::runner::{run_until_legal, RunConfig};
use shpt::harness::scenario::materialize;
use shpt::protocol::checks::{
    check_child_edge_info, check_key2_info, check_node_info, check_parent_edge_info,
    check_validity,
};
use shpt::protocol::linearize::multi_linearize;
use shpt::protocol::{Creation, Flow, Shpt};
use shpt::{bl, BitLabel, HptNode, IdealHpt};

fn legal(keys: &[&str]) -> (SystemState, IdealHpt) {
    let keys: Vec<BitLabel> = keys.iter().map(|k| bl(k)).collect();
    let ideal = IdealHpt::build(&keys).unwrap();
    (materialize(&ideal, 5, 41), ideal)
}

fn fixture() -> (SystemState, IdealHpt) {
    legal(&["0010", "0011", "0110"])
}

fn host(sys: &SystemState, label: &str) -> usize {
    sys.responsible_peer(&bl(label))
}

fn get(sys: &SystemState, label: &str) -> Option<HptNode> {
    sys.peek(&bl(label)).cloned()
}

fn edit(sys: &mut SystemState, label: &str, f: impl FnOnce(&mut HptNode)) {
    let h = host(sys, label);
    f(sys.peer_mut(h).store.get_mut(&bl(label)).expect("node stored"));
}

fn put(sys: &mut SystemState, node: HptNode) {
    let h = sys.responsible_peer(&node.label);
    sys.peer_mut(h).store.insert(node.label.clone(), node);
}

fn remove(sys: &mut SystemState, label: &str) -> HptNode {
    let h = host(sys, label);
    sys.peer_mut(h).store.remove(&bl(label)).expect("node stored")
}

fn strict(max_rounds: u64) -> RunConfig {
    RunConfig {
        max_rounds,
        strict: true,
        record_series: false,
    }
}

#[test]
fn loose_key_becomes_a_key_node() {
    let mut sys = SystemState::new(4, 2);
    sys.park_loose_key(bl("0110"));
    let peer = (0..4).find(|&p| !sys.peer(p).loose_keys.is_empty()).unwrap();
    Shpt::new().timeout(&mut sys, peer);
    let v = get(&sys, "0110").expect("key node inserted");
    assert!(v.is_patricia());
    assert_eq!(v.key, Some(bl("0110")));
    assert!(sys.peers().iter().all(|p| p.loose_keys.is_empty()));
}

#[test]
fn timeout_on_empty_peer_does_nothing() {
    let mut sys = SystemState::new(3, 2);
    Shpt::new().timeout(&mut sys, 1);
    assert_eq!(sys.all_nodes().count(), 0);
    assert_eq!(sys.pending_messages().count(), 0);
    assert_eq!(sys.metrics.dht_reads + sys.metrics.dht_writes, 0);
}

#[test]
fn non_suffix_parent_edge_is_cleared() {
    let (mut sys, _) = fixture();
    edit(&mut sys, "0110", |n| n.parent_edge = Some(bl("01")));
    let h = host(&sys, "0110");
    assert_eq!(check_node_info(&mut sys, h, &bl("0110"), &mut None), Flow::Continue);
    assert_eq!(get(&sys, "0110").unwrap().parent_edge, None);
}

#[test]
fn key_under_wrong_label_moves_to_its_own_node() {
    let mut sys = SystemState::new(4, 9);
    let mut v = HptNode::patricia(bl("001"));
    v.key = Some(bl("0010"));
    put(&mut sys, v);
    let h = host(&sys, "001");
    let mut log = Some(Vec::new());
    assert_eq!(check_node_info(&mut sys, h, &bl("001"), &mut log), Flow::Deleted);
    assert!(get(&sys, "001").is_none());
    let k = get(&sys, "0010").unwrap();
    assert_eq!(k.key, Some(bl("0010")));
    assert_eq!(log.unwrap(), vec![Creation::Key { label: bl("0010") }]);
}

#[test]
fn consistent_node_is_left_alone() {
    let (mut sys, _) = fixture();
    let before = get(&sys, "001").unwrap();
    let h = host(&sys, "001");
    check_node_info(&mut sys, h, &bl("001"), &mut None);
    assert_eq!(get(&sys, "001").unwrap(), before);
}

#[test]
fn parentless_node_finds_parent_by_search() {
    let (mut sys, _) = fixture();
    edit(&mut sys, "0110", |n| n.parent_edge = None);
    let h = host(&sys, "0110");
    check_parent_edge_info(&mut sys, h, &bl("0110"), &mut None);
    assert_eq!(get(&sys, "0110").unwrap().parent_edge, Some(bl("110")));
}

#[test]
fn missing_root_is_created() {
    let mut sys = SystemState::new(4, 9);
    let mut v = HptNode::patricia(bl("01"));
    v.key = Some(bl("01"));
    put(&mut sys, v);
    let h = host(&sys, "01");
    let mut log = Some(Vec::new());
    check_parent_edge_info(&mut sys, h, &bl("01"), &mut log);
    let root = get(&sys, "").expect("root created");
    assert!(root.is_patricia());
    assert!(log.unwrap().contains(&Creation::Root));
}

#[test]
fn missing_msd_node_is_inserted() {
    let (mut sys, ideal) = fixture();
    assert!(ideal.is_msd(&bl("00")));
    remove(&mut sys, "00");
    let h = host(&sys, "001");
    check_parent_edge_info(&mut sys, h, &bl("001"), &mut None);
    let m = get(&sys, "00").expect("Msd node inserted");
    assert!(m.is_msd());
    assert_eq!(m.parent_edge, Some(bl("0")));
    assert_eq!(m.msd_child_edge(), Some((true, &bl("1"))));
    assert!(check_legal(&sys, &ideal, false).legal);
}

#[test]
fn conflicting_child_edge_creates_branching_node() {
    let (mut sys, _) = legal(&["0010", "0110"]);
    // drop node 0 and hang both leaves off the root
    remove(&mut sys, "0");
    edit(&mut sys, "", |n| n.child0 = Some(bl("0010")));
    edit(&mut sys, "0010", |n| n.parent_edge = Some(bl("0010")));
    edit(&mut sys, "0110", |n| n.parent_edge = Some(bl("0110")));
    let h = host(&sys, "0110");
    let mut log = Some(Vec::new());
    check_parent_edge_info(&mut sys, h, &bl("0110"), &mut log);
    let n = get(&sys, "0").expect("branching node created");
    assert_eq!(n.parent_edge, Some(bl("0")));
    assert_eq!(n.child0, Some(bl("010")));
    assert_eq!(n.child1, Some(bl("110")));
    assert!(matches!(
        log.unwrap().as_slice(),
        [Creation::Branch { label, .. }] if *label == bl("0")
    ));
}

#[test]
fn multi_linearize_initializes_edges() {
    let mut sys = SystemState::new(2, 1);
    let n = multi_linearize(&mut sys, HptNode::patricia(bl("0")), &[bl("0110"), bl(""), bl("0010")]);
    assert_eq!(n.parent_edge, Some(bl("0")));
    assert_eq!(n.child0, Some(bl("010")));
    assert_eq!(n.child1, Some(bl("110")));

    let m = multi_linearize(&mut sys, HptNode::msd(bl("00")), &[bl("0"), bl("001")]);
    assert_eq!(m.parent_edge, Some(bl("0")));
    assert_eq!(m.msd_child_edge(), Some((true, &bl("1"))));

    let plain = multi_linearize(&mut sys, HptNode::patricia(bl("01")), &[]);
    assert_eq!(plain, HptNode::patricia(bl("01")));
}

#[test]
fn child_edge_to_deleted_node_is_cleared() {
    let (mut sys, _) = fixture();
    remove(&mut sys, "001");
    let h = host(&sys, "0");
    check_child_edge_info(&mut sys, h, &bl("0"));
    let v = get(&sys, "0").unwrap();
    assert_eq!(v.child0, None);
    assert_eq!(v.child1, Some(bl("110")));
}

#[test]
fn child_edge_to_msd_node_is_cleared() {
    let (mut sys, _) = legal(&["00", "1"]);
    put(&mut sys, HptNode::msd(bl("1")));
    edit(&mut sys, "", |n| n.child1 = Some(bl("1")));
    let h = host(&sys, "");
    check_child_edge_info(&mut sys, h, &BitLabel::empty());
    let root = get(&sys, "").unwrap();
    assert_eq!(root.child1, None);
    assert_eq!(root.child0, Some(bl("00")));
}

#[test]
fn unlinked_msd_node_is_deleted() {
    let (mut sys, _) = fixture();
    edit(&mut sys, "0", |n| n.child0 = None);
    let h = host(&sys, "00");
    assert_eq!(check_validity(&mut sys, h, &bl("00")), Flow::Deleted);
    assert!(get(&sys, "00").is_none());
}

#[test]
fn keyless_leaf_is_deleted_but_root_is_kept() {
    let (mut sys, _) = fixture();
    let mut stray = HptNode::patricia(bl("0111"));
    stray.parent_edge = Some(bl("111"));
    put(&mut sys, stray);
    let h = host(&sys, "0111");
    assert_eq!(check_validity(&mut sys, h, &bl("0111")), Flow::Deleted);
    assert!(get(&sys, "0111").is_none());

    let mut lone = SystemState::new(3, 4);
    put(&mut lone, HptNode::patricia(BitLabel::empty()));
    let h = host(&lone, "");
    assert_eq!(check_validity(&mut lone, h, &BitLabel::empty()), Flow::Continue);
    assert!(get(&lone, "").is_some());
}

#[test]
fn key2_slot_sets_missing_r() {
    let (mut sys, _) = fixture();
    edit(&mut sys, "001", |n| n.key2 = vec![bl("0010")]);
    edit(&mut sys, "0010", |n| n.r_ref = None);
    let h = host(&sys, "001");
    check_key2_info(&mut sys, h, &bl("001"));
    assert_eq!(get(&sys, "0010").unwrap().r_ref, Some(bl("001")));
}

#[test]
fn key2_slot_below_r_is_cleared() {
    let (mut sys, _) = fixture();
    edit(&mut sys, "0", |n| n.key2 = vec![bl("0010")]);
    edit(&mut sys, "0010", |n| n.r_ref = Some(bl("001")));
    let h = host(&sys, "0");
    check_key2_info(&mut sys, h, &bl("0"));
    assert!(!get(&sys, "0").unwrap().key2.contains(&bl("0010")));
}

#[test]
fn blocked_key2_node_takes_over_slot_from_above() {
    // v = 00 has both of its leaves claimed by the root and no slot left
    let (mut sys, ideal) = legal(&["000", "001", "1"]);
    edit(&mut sys, "", |n| n.key2 = vec![bl("000"), bl("001")]);
    edit(&mut sys, "00", |n| n.key2.clear());
    edit(&mut sys, "000", |n| n.r_ref = Some(BitLabel::empty()));
    edit(&mut sys, "001", |n| n.r_ref = Some(BitLabel::empty()));
    edit(&mut sys, "1", |n| n.r_ref = None);
    assert!(!check_legal(&sys, &ideal, false).legal);

    let mut protocol = Shpt::with_creation_log();
    let stats = run_until_legal(&mut sys, &ideal, &mut protocol, strict(500));
    assert!(stats.converged, "{:?}", stats.final_report.violations);
    let v = get(&sys, "00").unwrap();
    assert_eq!(v.key2.len(), 1);
    assert!(v.key2[0] == bl("000") || v.key2[0] == bl("001"));
    let root = get(&sys, "").unwrap();
    assert!(root.key2.contains(&bl("1")));
    assert_eq!(protocol.creations.unwrap(), Vec::new());
}

#[test]
fn missing_lcp_node_reappears() {
    let (mut sys, ideal) = legal(&["0010", "0110"]);
    remove(&mut sys, "0");
    edit(&mut sys, "", |n| n.child0 = Some(bl("0010")));
    edit(&mut sys, "0010", |n| n.parent_edge = Some(bl("0010")));
    edit(&mut sys, "0110", |n| n.parent_edge = None);
    let stats = run_until_legal(&mut sys, &ideal, &mut Shpt::new(), strict(500));
    assert!(stats.converged);
    assert!(get(&sys, "0").is_some_and(|n| n.is_patricia()));
}

#[test]
fn message_for_absent_node_is_queued_then_dropped() {
    let (mut sys, ideal) = fixture();
    sys.send(shpt::dht::Message::linearize(bl("0101"), bl("0")));
    assert_eq!(sys.pending_messages().count(), 1);
    sys.run_round(&mut Shpt::new());
    assert!(sys.pending_messages().all(|m| m.target != bl("0101")));
    assert!(get(&sys, "0101").is_none());
    assert!(check_legal(&sys, &ideal, true).legal);
}
