//! Versioned JSON snapshots of a whole system.

use serde::{Deserialize, Serialize};

use crate::dht::peer::Peer;
use crate::dht::system::SystemState;
use crate::error::ScenarioError;
use crate::label::BitLabel;

pub const FORMAT_TAG: &str = "shpt-state/v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateDump {
    pub format: String,
    pub seed: u64,
    pub round: u64,
    pub keys: Vec<BitLabel>,
    pub peers: Vec<Peer>,
}

impl StateDump {
    pub fn capture(sys: &SystemState, keys: &[BitLabel]) -> Self {
        Self {
            format: FORMAT_TAG.to_string(),
            seed: sys.seed,
            round: sys.round,
            keys: keys.to_vec(),
            peers: sys.peers().to_vec(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let dump: StateDump = serde_json::from_str(text)?;
        if dump.format != FORMAT_TAG {
            return Err(ScenarioError::Malformed(format!(
                "unsupported state format {:?}",
                dump.format
            )));
        }
        if dump.peers.is_empty() {
            return Err(ScenarioError::Malformed("state lists no peers".into()));
        }
        let mut ids: Vec<u64> = dump.peers.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(ScenarioError::Malformed("peer ids are not distinct".into()));
        }
        Ok(dump)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dump serializes")
    }

    pub fn restore(&self) -> SystemState {
        let mut sys = SystemState::with_peers(self.peers.clone(), self.seed);
        sys.round = self.round;
        sys.metrics.d_bits = self.keys.iter().map(|k| k.len() as u64).sum();
        sys
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::{generate_initial_state, CorruptionLevel, CorruptionScript};
    use crate::label::bl;

    #[test]
    fn round_trip_preserves_state() {
        let keys = vec![bl("0010"), bl("0011"), bl("0110")];
        let script = CorruptionScript::from_level(CorruptionLevel::High, 4);
        let (sys, _) = generate_initial_state(&keys, &script, 4, 8).unwrap();
        let text = StateDump::capture(&sys, &keys).to_json();
        let back = StateDump::from_json(&text).unwrap();
        assert_eq!(back.keys, keys);
        assert_eq!(back.restore().peers(), sys.peers());
    }

    #[test]
    fn rejects_unknown_format() {
        let text = r#"{"format": "other", "seed": 0, "round": 0, "keys": [], "peers": []}"#;
        assert!(StateDump::from_json(text).is_err());
    }
}
