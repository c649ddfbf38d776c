//! Subsets of register indices.
//!
//! Registers are numbered from 1 as in `[n] = {1, …, n}`; a subset is stored
//! as a bit mask with bit `k − 1` standing for register `k`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Largest register count a [`Subset`] can address.
pub const MAX_REGISTERS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    /// Subset from 1-based indices. Repeated indices are rejected.
    pub fn of(indices: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &k in indices {
            if k == 0 || k > MAX_REGISTERS {
                return Err(Error::InvalidParameter(format!("register index {k} out of range 1..={MAX_REGISTERS}")));
            }
            let b = 1u32 << (k - 1);
            if bits & b != 0 {
                return Err(Error::InvalidParameter(format!("register {k} listed twice")));
            }
            bits |= b;
        }
        Ok(Subset(bits))
    }

    /// `[n]`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_REGISTERS, "at most {MAX_REGISTERS} registers");
        if n == MAX_REGISTERS {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << n) - 1)
        }
    }

    pub fn singleton(k: usize) -> Result<Self> {
        Self::of(&[k])
    }

    pub fn from_bits(bits: u32) -> Self {
        Subset(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, k: usize) -> bool {
        (1..=MAX_REGISTERS).contains(&k) && self.0 & (1 << (k - 1)) != 0
    }

    /// Largest index, 0 for the empty set.
    pub fn max_index(self) -> usize {
        (u32::BITS - self.0.leading_zeros()) as usize
    }

    /// `[n] \ self`.
    pub fn complement(self, n: usize) -> Self {
        Subset(Self::full(n).0 & !self.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    /// Members in increasing order, 1-based.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..u32::BITS as usize).filter(move |b| self.0 & (1 << b) != 0).map(|b| b + 1)
    }

    /// All subsets of `[n]` with exactly `k` elements, in increasing mask order.
    pub fn all_of_size(n: usize, k: usize) -> Vec<Subset> {
        let full = Self::full(n).0 as u64;
        (1..=full).map(|b| Subset(b as u32)).filter(|s| s.len() == k).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        Subset::of(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        let v = Subset::of(&[1, 3]).unwrap();
        assert_eq!(v.len(), 2);
        assert!(v.contains(3) && !v.contains(2));
        assert_eq!(v.complement(3), Subset::of(&[2]).unwrap());
        assert_eq!(v.to_string(), "{1,3}");
        assert_eq!(v.iter().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(v.max_index(), 3);
        assert!(Subset::of(&[1, 1]).is_err());
        assert!(Subset::of(&[0]).is_err());
        assert_eq!(Subset::all_of_size(4, 2).len(), 6);
        assert_eq!(Subset::full(3).len(), 3);
    }

    #[test]
    fn serde_round_trip() {
        let v = Subset::of(&[2, 4]).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[2,4]");
        assert_eq!(serde_json::from_str::<Subset>(&s).unwrap(), v);
        assert!(serde_json::from_str::<Subset>("[2,2]").is_err());
    }
}
