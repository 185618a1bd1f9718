//! Computational-basis bookkeeping.
//!
//! A configuration of `n` atoms is stored as an `n`-bit word, most significant
//! bit first in atom order: atom 0 owns bit `n - 1`, atom `n - 1` owns bit 0.
//! Bit value 1 is the Rydberg state. Decimal labels are 1-based, so the
//! all-ground configuration is `|1>` and the word value `v` is label `v + 1`.
//! State-vector amplitudes are stored at position `v` (0-based).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest atom count a configuration word can hold.
pub const MAX_ATOMS: usize = 63;

/// Bit of `atom` inside an `n`-atom word.
#[inline]
pub fn atom_bit(n: usize, atom: usize) -> u64 {
    debug_assert!(atom < n);
    1u64 << (n - 1 - atom)
}

/// 1-based decimal label of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisIndex(pub u64);

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpinConfig {
    bits: u64,
    n: usize,
}

impl SpinConfig {
    pub fn new(bits: u64, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_ATOMS {
            return Err(Error::InvalidConfig(format!("atom count {n} not in 1..={MAX_ATOMS}")));
        }
        if bits >> n != 0 {
            return Err(Error::InvalidConfig(format!("word {bits:#x} wider than {n} bits")));
        }
        Ok(Self { bits, n })
    }

    pub fn ground(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    /// Parses a string of `0`/`1`, leftmost character is atom 0.
    pub fn from_bitstring(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        let mut n = 0usize;
        for ch in s.chars() {
            let b = match ch {
                '0' => 0,
                '1' => 1,
                '_' | ' ' | '|' | '>' => continue,
                other => return Err(Error::InvalidConfig(format!("unexpected character {other:?}"))),
            };
            if n == MAX_ATOMS {
                return Err(Error::InvalidConfig("bitstring too long".into()));
            }
            bits = (bits << 1) | b;
            n += 1;
        }
        Self::new(bits, n)
    }

    /// Concatenates tensor-product factors written left to right, e.g.
    /// `["01", "10", "0101"]` for `|01>_W1 |10>_W2 |0101>`.
    pub fn from_segments(segments: &[&str]) -> Result<Self> {
        Self::from_bitstring(&segments.concat())
    }

    pub fn from_index(index: BasisIndex, n: usize) -> Result<Self> {
        decode(index.0, n)
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn num_atoms(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn index(&self) -> BasisIndex {
        encode(self)
    }

    #[inline]
    pub fn is_excited(&self, atom: usize) -> bool {
        self.bits & atom_bit(self.n, atom) != 0
    }

    pub fn excitations(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn bitstring(&self) -> String {
        bitstring(self.bits, self.n)
    }

    /// Applies an atom relabeling: atom `i` of `self` becomes atom `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        debug_assert_eq!(perm.len(), self.n);
        let mut bits = 0;
        for (i, &j) in perm.iter().enumerate() {
            if self.is_excited(i) {
                bits |= atom_bit(self.n, j);
            }
        }
        Self { bits, n: self.n }
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{}>", self.bitstring())
    }
}

pub fn bitstring(bits: u64, n: usize) -> String {
    (0..n)
        .map(|atom| if bits & atom_bit(n, atom) != 0 { '1' } else { '0' })
        .collect()
}

pub fn encode(config: &SpinConfig) -> BasisIndex {
    BasisIndex(config.bits + 1)
}

pub fn decode(index: u64, n: usize) -> Result<SpinConfig> {
    if n == 0 || n > MAX_ATOMS {
        return Err(Error::InvalidConfig(format!("atom count {n} not in 1..={MAX_ATOMS}")));
    }
    let max = 1u64 << n;
    if index == 0 || index > max {
        return Err(Error::IndexOutOfRange { index, max });
    }
    SpinConfig::new(index - 1, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ground_is_label_one() {
        for n in [1, 6, 16, 18] {
            assert_eq!(SpinConfig::ground(n).unwrap().index(), BasisIndex(1));
        }
    }

    #[test]
    fn k4_prime_labels() {
        // |2> = |00>_W |0001>, |64> = |11>_W |1111>
        let c = SpinConfig::from_segments(&["00", "0001"]).unwrap();
        assert_eq!(c.index(), BasisIndex(2));
        let c = SpinConfig::from_segments(&["11", "1111"]).unwrap();
        assert_eq!(c.index(), BasisIndex(64));
        let c = SpinConfig::from_segments(&["01", "0100"]).unwrap();
        assert_eq!(c.index(), BasisIndex(21));
    }

    #[test]
    fn atom_zero_is_most_significant() {
        let c = SpinConfig::from_bitstring("100000").unwrap();
        assert!(c.is_excited(0));
        assert!(!c.is_excited(5));
        assert_eq!(c.bits(), 32);
    }

    #[test]
    fn decode_rejects_out_of_range() {
        assert!(matches!(decode(0, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(decode(17, 4), Err(Error::IndexOutOfRange { .. })));
        assert!(decode(16, 4).is_ok());
    }

    #[test]
    fn bitstring_rejects_garbage() {
        assert!(SpinConfig::from_bitstring("01x").is_err());
        assert!(SpinConfig::from_bitstring("").is_err());
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(n in 1usize..=24, raw in any::<u64>()) {
            let bits = raw & ((1u64 << n) - 1);
            let c = SpinConfig::new(bits, n).unwrap();
            let back = decode(c.index().0, n).unwrap();
            prop_assert_eq!(back, c);
            prop_assert_eq!(SpinConfig::from_bitstring(&c.bitstring()).unwrap(), c);
        }
    }
}
