use std::collections::BTreeMap;

use proptest::prelude::*;

use shpt::dht::system::SystemState;
use shpt::dht::MessageKind;
use shpt::harness::dump::StateDump;
use shpt::harness::legality::check_legal;
use shpt::harness::runner::{run_until_legal, RunConfig};
use shpt::harness::scenario::{
    generate_initial_state, materialize, random_keys, CorruptionLevel, CorruptionScript, Mutation,
    MutationKind,
};
use shpt::protocol::{Creation, Shpt};
use shpt::{BitLabel, HptNode, IdealHpt};

fn snapshot(sys: &SystemState) -> (Vec<BTreeMap<BitLabel, HptNode>>, Vec<Vec<BitLabel>>) {
    (
        sys.peers().iter().map(|p| p.store.clone()).collect(),
        sys.peers().iter().map(|p| p.loose_keys.clone()).collect(),
    )
}

fn neighbour_presentation(ideal: &IdealHpt, target: &BitLabel, kind: &MessageKind) -> bool {
    match kind {
        MessageKind::Linearize { presented } => {
            ideal.is_patricia(presented)
                && ideal.is_patricia(target)
                && (ideal.parent_of(presented) == Some(target) || ideal.parent_of(target) == Some(presented))
        }
        _ => false,
    }
}

fn key_sets() -> impl Strategy<Value = (Vec<BitLabel>, u64)> {
    (1usize..=12, 3usize..=10, any::<u64>()).prop_map(|(n, len, seed)| {
        let n = n.min((1 << (len + 1)) - 2);
        (random_keys(n, len, seed).unwrap(), seed)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn every_effective_single_mutation_is_detected(
        (keys, seed) in key_sets(),
        kind in proptest::sample::select(MutationKind::ALL.to_vec()),
    ) {
        let ideal = IdealHpt::build(&keys).unwrap();
        let base = materialize(&ideal, 6, seed);
        prop_assert!(check_legal(&base, &ideal, true).legal);
        let script = CorruptionScript {
            seed,
            ops: vec![Mutation { kind, target: None }],
            ..Default::default()
        };
        let (sys, _) = generate_initial_state(&keys, &script, 6, seed).unwrap();
        let stores_changed = snapshot(&sys) != snapshot(&base);
        let stray = sys.pending_messages().any(|m| !neighbour_presentation(&ideal, &m.target, &m.kind));
        if stores_changed || stray {
            let report = check_legal(&sys, &ideal, true);
            prop_assert!(!report.legal, "{kind:?} went unnoticed");
        }
    }

    #[test]
    fn repair_preserves_keys_and_root_and_creates_only_lcp_nodes(
        (keys, seed) in key_sets(),
        level in proptest::sample::select(vec![
            CorruptionLevel::Low,
            CorruptionLevel::High,
            CorruptionLevel::Strip,
        ]),
    ) {
        let script = CorruptionScript::from_level(level, seed);
        let (mut sys, ideal) = generate_initial_state(&keys, &script, 6, seed).unwrap();
        let mut want = keys.clone();
        want.sort();
        let mut protocol = Shpt::with_creation_log();
        // the wrong-label rule may delete a root holding a foreign key; any
        // other root must survive
        let settled_root = |sys: &SystemState| {
            sys.all_nodes().any(|(_, n)| {
                n.is_root() && n.is_patricia() && n.key.as_ref().is_none_or(BitLabel::is_empty)
            })
        };
        let mut root_seen = settled_root(&sys);
        for _ in 0..3000 {
            if check_legal(&sys, &ideal, true).legal {
                break;
            }
            sys.run_round(&mut protocol);
            prop_assert_eq!(sys.key_multiset(), want.clone());
            let root_now = settled_root(&sys);
            prop_assert!(!root_seen || root_now, "root vanished");
            root_seen |= root_now;
        }
        prop_assert!(check_legal(&sys, &ideal, true).legal);
        for c in protocol.creations.unwrap() {
            match c {
                Creation::Root | Creation::Msd { .. } => {}
                Creation::Branch { label, v, other } => {
                    prop_assert_eq!(label, v.lcp(&other));
                }
                Creation::Key { label } => prop_assert!(keys.contains(&label)),
            }
        }
    }
}

#[test]
fn identical_inputs_replay_identically() {
    let run = || {
        let keys = random_keys(10, 9, 77).unwrap();
        let script = CorruptionScript::from_level(CorruptionLevel::High, 77);
        let (mut sys, ideal) = generate_initial_state(&keys, &script, 7, 77).unwrap();
        let stats = run_until_legal(&mut sys, &ideal, &mut Shpt::new(), RunConfig::default());
        (
            stats.rounds_to_legal,
            stats.dht_reads,
            stats.messages_sent,
            serde_json::to_string(&stats.phase_series).unwrap(),
            StateDump::capture(&sys, &keys).to_json(),
        )
    };
    assert_eq!(run(), run());
}
