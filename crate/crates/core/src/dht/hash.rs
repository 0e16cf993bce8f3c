use crate::label::BitLabel;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Position of `label` on the ring, as a fraction of 2⁶⁴.
pub fn label_position(seed: u64, label: &BitLabel) -> u64 {
    let mut h = mix(seed ^ 0x9e37_79b9_7f4a_7c15);
    h = mix(h ^ label.len() as u64);
    for w in label.words() {
        h = mix(h.wrapping_add(*w).wrapping_add(0x9e37_79b9_7f4a_7c15));
    }
    h
}

/// Converts a ring position to a point in [0, 1).
pub fn position_to_unit(pos: u64) -> f64 {
    (pos >> 11) as f64 / (1u64 << 53) as f64
}
