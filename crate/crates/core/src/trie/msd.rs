//! Label arithmetic: common prefixes, edges, and Msd label placement.

use crate::error::TrieError;
use crate::label::BitLabel;

pub fn lcp(a: &BitLabel, b: &BitLabel) -> BitLabel {
    a.lcp(b)
}

/// Position of the most significant bit at which `a` and `b` differ.
pub fn msd_index(a: usize, b: usize) -> Result<usize, TrieError> {
    let diff = a ^ b;
    if diff == 0 {
        return Err(TrieError::EqualOperands(a));
    }
    Ok((usize::BITS - 1 - diff.leading_zeros()) as usize)
}

fn floor_log2(n: usize) -> usize {
    debug_assert!(n > 0);
    (usize::BITS - 1 - n.leading_zeros()) as usize
}

/// Length of the Msd label between nodes of lengths `shorter < longer`:
/// the sum of `longer`'s bits weighted by `2^i` for `i` from the msd
/// position up to `⌊log longer⌋ + 1`.
pub fn msd_length(shorter: usize, longer: usize) -> Result<usize, TrieError> {
    debug_assert!(shorter < longer);
    let j = msd_index(shorter, longer)?;
    let top = floor_log2(longer) + 1;
    Ok((j..=top).map(|i| ((longer >> i) & 1) << i).sum())
}

fn require_proper_prefix(shorter: &BitLabel, longer: &BitLabel) -> Result<(), TrieError> {
    if shorter.is_proper_prefix_of(longer) {
        Ok(())
    } else {
        Err(TrieError::NotProperPrefix {
            shorter: shorter.clone(),
            longer: longer.clone(),
        })
    }
}

/// The Msd label between `shorter` and `longer`, or `None` when the
/// computed length coincides with one of the two Patricia nodes.
pub fn msd_label(shorter: &BitLabel, longer: &BitLabel) -> Result<Option<BitLabel>, TrieError> {
    require_proper_prefix(shorter, longer)?;
    let len = msd_length(shorter.len(), longer.len())?;
    if len == shorter.len() || len == longer.len() {
        return Ok(None);
    }
    Ok(Some(longer.prefix(len)))
}

/// `x` such that `parent ∘ x = child`.
pub fn edge_between(parent: &BitLabel, child: &BitLabel) -> Result<BitLabel, TrieError> {
    require_proper_prefix(parent, child)?;
    Ok(child.suffix_from(parent.len()))
}

/// Whether a distinct Msd label fits strictly between the two labels.
pub fn msd_missing(parent: &BitLabel, child: &BitLabel) -> Result<bool, TrieError> {
    Ok(msd_label(parent, child)?.is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::bl;

    /// Top-down scan over zero-padded binary expansions.
    fn brute_msd(a: usize, b: usize) -> Option<usize> {
        (0..usize::BITS as usize)
            .rev()
            .find(|&i| (a >> i) & 1 != (b >> i) & 1)
    }

    /// Per-bit evaluation of the weighted sum, written independently of
    /// `msd_length`.
    fn brute_msd_len(lu: usize, lv: usize) -> usize {
        let j = brute_msd(lu, lv).unwrap();
        let mut top = 0;
        while (1usize << (top + 1)) <= lv {
            top += 1;
        }
        let mut sum = 0;
        let mut i = j;
        while i <= top + 1 {
            if lv & (1 << i) != 0 {
                sum += 1 << i;
            }
            i += 1;
        }
        sum
    }

    #[test]
    fn msd_index_examples() {
        assert_eq!(msd_index(2, 6), Ok(2));
        assert_eq!(msd_index(0, 1), Ok(0));
        assert_eq!(msd_index(5, 13), Ok(3));
        assert_eq!(brute_msd(5, 13), Some(3));
        assert_eq!(msd_index(4, 4), Err(TrieError::EqualOperands(4)));
    }

    #[test]
    fn msd_label_examples() {
        assert_eq!(msd_label(&bl("10"), &bl("100101")), Ok(Some(bl("1001"))));
        assert_eq!(msd_label(&bl(""), &bl("1")), Ok(None));
        assert_eq!(brute_msd_len(1, 3), 2);
        assert_eq!(msd_label(&bl("0"), &bl("001")), Ok(Some(bl("00"))));
        assert!(matches!(
            msd_label(&bl("01"), &bl("001")),
            Err(TrieError::NotProperPrefix { .. })
        ));
        assert!(msd_label(&bl("01"), &bl("01")).is_err());
    }

    #[test]
    fn edge_between_examples() {
        assert_eq!(edge_between(&bl("0"), &bl("0110")), Ok(bl("110")));
        assert_eq!(edge_between(&bl(""), &bl("1")), Ok(bl("1")));
        assert_eq!(edge_between(&bl("001"), &bl("0010")), Ok(bl("0")));
        assert!(edge_between(&bl("1"), &bl("0010")).is_err());
    }

    #[test]
    fn msd_missing_examples() {
        assert_eq!(msd_missing(&bl("0"), &bl("001")), Ok(true));
        assert_eq!(msd_missing(&bl(""), &bl("1")), Ok(false));
        assert_eq!(brute_msd_len(3, 4), 4);
        assert_eq!(msd_missing(&bl("001"), &bl("0010")), Ok(false));
    }

    #[test]
    fn msd_length_matches_brute_force_for_all_pairs() {
        for lv in 1..=64usize {
            for lu in 0..lv {
                let len = msd_length(lu, lv).unwrap();
                assert_eq!(len, brute_msd_len(lu, lv), "({lu}, {lv})");
                assert!(lu < len && len <= lv, "({lu}, {lv}) -> {len}");
                // len keeps exactly the bits of lv from the msd position upward
                let j = brute_msd(lu, lv).unwrap();
                assert_eq!(len >> j, lv >> j);
                assert_eq!(len & ((1 << j) - 1), 0);
            }
        }
    }
}
