//! Fixed-length bit strings with a least-significant-first integer view.
//!
//! Bit `i` of a [`BitString`] is qubit `i`. The integer view is
//! `x_1 2^0 + x_2 2^1 + ... + x_n 2^(n-1)`, so the first bit is the least
//! significant one. All QFT phase formulas in the crate use this convention.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest register width representable by a [`BitString`].
pub const MAX_BITS: usize = 63;

/// Mask with the low `len` bits set.
#[inline]
pub fn low_mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// A bit string of fixed length `len <= 63`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitString {
    value: u64,
    len: u8,
}

impl BitString {
    /// Builds a string of `len` bits from its integer view.
    pub fn new(value: u64, len: usize) -> Result<Self> {
        if len > MAX_BITS {
            return Err(Error::invalid(format!(
                "bit string length {len} exceeds the maximum of {MAX_BITS}"
            )));
        }
        if value & !low_mask(len) != 0 {
            return Err(Error::invalid(format!(
                "integer {value} does not fit in {len} bits"
            )));
        }
        Ok(Self {
            value,
            len: len as u8,
        })
    }

    /// Unchecked constructor for internal hot paths; the caller guarantees
    /// `len <= 63` and that `value` fits.
    #[inline]
    pub(crate) fn from_raw(value: u64, len: usize) -> Self {
        debug_assert!(len <= MAX_BITS && value & !low_mask(len) == 0);
        Self {
            value,
            len: len as u8,
        }
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    /// Builds a string from individual bits, `bits[0]` being qubit 0.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i));
        if bits.len() > MAX_BITS {
            return Err(Error::invalid(format!(
                "bit string length {} exceeds the maximum of {MAX_BITS}",
                bits.len()
            )));
        }
        Self::new(value, bits.len())
    }

    /// Integer view (first bit least significant).
    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range");
        (self.value >> i) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| (self.value >> i) & 1 == 1)
    }

    /// The first `m` bits.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m > self.len() {
            return Err(Error::invalid(format!(
                "prefix length {m} exceeds string length {}",
                self.len()
            )));
        }
        Ok(Self::from_raw(self.value & low_mask(m), m))
    }

    /// Appends one bit as the new most significant position.
    pub fn extended(&self, bit: bool) -> Result<Self> {
        Self::new(self.value | ((bit as u64) << self.len()), self.len() + 1)
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        self.len() <= other.len() && other.value & low_mask(self.len()) == self.value
    }

    /// Concatenation: `self` occupies the low positions.
    pub fn concat(&self, other: &BitString) -> Result<Self> {
        let len = self.len() + other.len();
        if len > MAX_BITS {
            return Err(Error::invalid(format!(
                "concatenated length {len} exceeds the maximum of {MAX_BITS}"
            )));
        }
        Self::new(self.value | (other.value << self.len()), len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Strings compare by length, then by integer view.
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.len, self.value).cmp(&(other.len, other.value))
    }
}

/// Renders bits in qubit order: the first character is qubit 0.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitString(\"{self}\" = {})", self.value)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!(
                    "invalid character {other:?} in bit string {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_bits(&bits)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An ordered list of qubit positions inside a larger register.
///
/// `gather` reads the listed positions into a compact integer whose bit `j`
/// is qubit `positions[j]`; `scatter` writes such an integer back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    positions: Vec<usize>,
    mask: u64,
    contiguous_from_zero: bool,
}

impl Register {
    pub fn new(positions: Vec<usize>, total: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &p in &positions {
            if p >= total {
                return Err(Error::invalid(format!(
                    "qubit {p} out of range for a {total}-qubit register"
                )));
            }
            if mask & (1 << p) != 0 {
                return Err(Error::invalid(format!("qubit {p} listed twice")));
            }
            mask |= 1 << p;
        }
        let contiguous_from_zero = positions.iter().enumerate().all(|(j, &p)| j == p);
        Ok(Self {
            positions,
            mask,
            contiguous_from_zero,
        })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            positions: (0..len).collect(),
            mask: low_mask(len),
            contiguous_from_zero: true,
        }
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Bits of the full register covered by this one.
    #[inline]
    pub fn mask(&self) -> u64 {
        self.mask
    }

    #[inline]
    pub fn gather(&self, x: u64) -> u64 {
        if self.contiguous_from_zero {
            return x & self.mask;
        }
        self.positions
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, &p)| acc | (((x >> p) & 1) << j))
    }

    /// Replaces the covered bits of `x` with the bits of `value`.
    #[inline]
    pub fn scatter(&self, x: u64, value: u64) -> u64 {
        if self.contiguous_from_zero {
            return (x & !self.mask) | (value & self.mask);
        }
        let cleared = x & !self.mask;
        self.positions
            .iter()
            .enumerate()
            .fold(cleared, |acc, (j, &p)| acc | (((value >> j) & 1) << p))
    }
}
