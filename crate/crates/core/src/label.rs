//! Finite binary strings used as node labels, keys and edges.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::LabelError;

/// Default upper bound on label length in bits.
pub const DEFAULT_LMAX: usize = 64;

/// A binary string, stored MSB-first in 64-bit words.
///
/// Bits past `len` in the last word are always zero so that derived
/// equality and hashing are canonical. The empty label is the root label ε.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitLabel {
    len: u32,
    words: SmallVec<[u64; 2]>,
}

impl BitLabel {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut label = Self::empty();
        for bit in bits {
            label.push(bit);
        }
        label
    }

    /// Builds the `len` low-order bits of `value`, most significant first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= 64, "from_u64 supports at most 64 bits");
        Self::from_bits((0..len).rev().map(|i| (value >> i) & 1 == 1))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at 0-based position `i`.
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range for length {}", self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn push(&mut self, bit: bool) {
        let i = self.len();
        if i % 64 == 0 {
            self.words.push(0);
        }
        if bit {
            self.words[i / 64] |= 1 << (63 - i % 64);
        }
        self.len += 1;
    }

    /// `self ∘ other`.
    pub fn concat(&self, other: &BitLabel) -> BitLabel {
        let mut out = self.clone();
        for bit in other.bits() {
            out.push(bit);
        }
        out
    }

    pub fn with_bit(&self, bit: bool) -> BitLabel {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: usize) -> BitLabel {
        assert!(n <= self.len(), "prefix length {n} exceeds label length {}", self.len);
        let full = n / 64;
        let rem = n % 64;
        let mut words: SmallVec<[u64; 2]> = self.words[..full].iter().copied().collect();
        if rem > 0 {
            words.push(self.words[full] & (!0u64 << (64 - rem)));
        }
        BitLabel { len: n as u32, words }
    }

    /// The bits from position `start` to the end.
    pub fn suffix_from(&self, start: usize) -> BitLabel {
        assert!(start <= self.len());
        BitLabel::from_bits((start..self.len()).map(|i| self.bit(i)))
    }

    /// Length of the longest common prefix.
    pub fn lcp_len(&self, other: &BitLabel) -> usize {
        let max = self.len().min(other.len());
        let mut matched = 0;
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            let diff = a ^ b;
            if diff != 0 {
                matched += diff.leading_zeros() as usize;
                return matched.min(max);
            }
            matched += 64;
            if matched >= max {
                return max;
            }
        }
        matched.min(max)
    }

    pub fn lcp(&self, other: &BitLabel) -> BitLabel {
        self.prefix(self.lcp_len(other))
    }

    /// `self ⊑ other`.
    pub fn is_prefix_of(&self, other: &BitLabel) -> bool {
        self.len() <= other.len() && self.lcp_len(other) == self.len()
    }

    /// `self ⊏ other`.
    pub fn is_proper_prefix_of(&self, other: &BitLabel) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    pub fn is_suffix_of(&self, other: &BitLabel) -> bool {
        self.len() <= other.len() && other.suffix_from(other.len() - self.len()) == *self
    }

    /// First bit, if any.
    pub fn first(&self) -> Option<bool> {
        (!self.is_empty()).then(|| self.bit(0))
    }

    /// Prefixes of length `0..=len`.
    pub fn prefixes(&self) -> impl Iterator<Item = BitLabel> + '_ {
        (0..=self.len()).map(move |n| self.prefix(n))
    }

    /// Backing words, MSB-first, used for hashing.
    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    /// Renders as a string of `0`/`1`; the empty label renders as `""`.
    pub fn to_bit_string(&self) -> String {
        self.bits().map(|b| if b { '1' } else { '0' }).collect()
    }
}

impl Ord for BitLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        let common = self.lcp_len(other);
        if common == self.len() || common == other.len() {
            self.len().cmp(&other.len())
        } else {
            self.bit(common).cmp(&other.bit(common))
        }
    }
}

impl PartialOrd for BitLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for BitLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ε" {
            return Ok(BitLabel::empty());
        }
        let mut label = BitLabel::empty();
        for (pos, c) in s.chars().enumerate() {
            match c {
                '0' => label.push(false),
                '1' => label.push(true),
                other => return Err(LabelError::InvalidDigit { digit: other, pos }),
            }
        }
        Ok(label)
    }
}

impl fmt::Display for BitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("ε")
        } else {
            f.write_str(&self.to_bit_string())
        }
    }
}

impl fmt::Debug for BitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitLabel({self})")
    }
}

impl Serialize for BitLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bit_string())
    }
}

impl<'de> Deserialize<'de> for BitLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and fixtures: `bl("0110")`.
///
/// Panics on anything other than `0`, `1`, or `ε`.
pub fn bl(s: &str) -> BitLabel {
    s.parse().expect("valid bit string")
}
