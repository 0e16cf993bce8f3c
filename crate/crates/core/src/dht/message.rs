use serde::{Deserialize, Serialize};

use crate::label::BitLabel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MessageKind {
    /// Presents the Patricia node labelled `presented`.
    Linearize { presented: BitLabel },
    /// A key₂ node with a free slot asking ancestors for a value.
    Key2Probe { origin: BitLabel, hops_left: u32 },
    /// A leaf without `r` looking for a key₂ node to claim it.
    LeafPresent { origin: BitLabel, hops_left: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub target: BitLabel,
    #[serde(flatten)]
    pub kind: MessageKind,
}

impl Message {
    pub fn linearize(target: BitLabel, presented: BitLabel) -> Self {
        Self {
            target,
            kind: MessageKind::Linearize { presented },
        }
    }

    pub fn key2_probe(target: BitLabel, origin: BitLabel, hops_left: u32) -> Self {
        Self {
            target,
            kind: MessageKind::Key2Probe { origin, hops_left },
        }
    }

    pub fn leaf_present(target: BitLabel, origin: BitLabel, hops_left: u32) -> Self {
        Self {
            target,
            kind: MessageKind::LeafPresent { origin, hops_left },
        }
    }
}
