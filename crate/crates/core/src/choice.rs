//! Choice vectors: ordered subsets of the particle symbols `1..=M`.
//!
//! A choice is stored as a bitmask with symbol `j` at bit `j - 1`. Choices are
//! totally ordered first by size and then lexicographically on their sorted
//! symbol vectors, so that for `M = 3` the order reads
//! `∅, (1), (2), (3), (1,2), (1,3), (2,3), (1,2,3)`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{BetheError, Result};

/// Largest particle count a choice bitmask can address.
pub const MAX_SYMBOLS: usize = 31;

#[derive(Copy, Clone, PartialEq, Eq, Hash, Default)]
pub struct Choice(u32);

impl Choice {
    pub const EMPTY: Choice = Choice(0);

    pub fn from_bits(bits: u32) -> Self {
        Choice(bits)
    }

    /// The choice `(1, 2, ..., m)`.
    pub fn full(m: usize) -> Self {
        assert!(m <= MAX_SYMBOLS, "too many symbols: {m}");
        Choice(((1u64 << m) - 1) as u32)
    }

    pub fn singleton(symbol: usize) -> Self {
        assert!((1..=MAX_SYMBOLS).contains(&symbol));
        Choice(1 << (symbol - 1))
    }

    /// Builds a choice from 1-based symbols, rejecting repeats and zero.
    pub fn from_symbols(symbols: &[usize]) -> Result<Self> {
        let mut bits = 0u32;
        for &s in symbols {
            if s == 0 || s > MAX_SYMBOLS {
                return Err(BetheError::SymbolOutOfRange {
                    symbol: s,
                    m: MAX_SYMBOLS,
                });
            }
            let bit = 1u32 << (s - 1);
            if bits & bit != 0 {
                return Err(BetheError::Overlap(Choice(bits), Choice(bit)));
            }
            bits |= bit;
        }
        Ok(Choice(bits))
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

    pub fn contains(self, symbol: usize) -> bool {
        (1..=MAX_SYMBOLS).contains(&symbol) && self.0 & (1 << (symbol - 1)) != 0
    }

    pub fn is_disjoint(self, other: Choice) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: Choice) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest symbol, or 0 for the empty choice.
    pub fn max_symbol(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    /// Sorted union; fails when the two choices share a symbol.
    pub fn union(self, other: Choice) -> Result<Choice> {
        if self.is_disjoint(other) {
            Ok(Choice(self.0 | other.0))
        } else {
            Err(BetheError::Overlap(self, other))
        }
    }

    pub fn difference(self, other: Choice) -> Choice {
        Choice(self.0 & !other.0)
    }

    /// Symbols in increasing order (1-based).
    pub fn symbols(self) -> Symbols {
        Symbols(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.symbols().collect()
    }

    /// All subsets of this choice, in no particular order.
    pub fn subsets(self) -> impl Iterator<Item = Choice> {
        let full = self.0;
        let mut sub = Some(full);
        std::iter::from_fn(move || {
            let cur = sub?;
            sub = if cur == 0 {
                None
            } else {
                Some((cur - 1) & full)
            };
            Some(Choice(cur))
        })
    }
}

pub struct Symbols(u32);

impl Iterator for Symbols {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let tz = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(tz as usize + 1)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Symbols {}

impl Ord for Choice {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.len().cmp(&other.len()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let diff = self.0 ^ other.0;
        if diff == 0 {
            Ordering::Equal
        } else if self.0 & (diff & diff.wrapping_neg()) != 0 {
            // the smallest differing symbol belongs to `self`
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl PartialOrd for Choice {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "(")?;
        for (i, s) in self.symbols().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// All `2^m` choices over `m` symbols in canonical order.
pub fn all_choices(m: usize) -> Vec<Choice> {
    choices_up_to(m, m)
}

/// Choices over `m` symbols with at most `max_len` components, canonical order.
pub fn choices_up_to(m: usize, max_len: usize) -> Vec<Choice> {
    assert!(m <= MAX_SYMBOLS);
    let mut out: Vec<Choice> = (0..(1u64 << m))
        .map(|b| Choice(b as u32))
        .filter(|c| c.len() <= max_len)
        .collect();
    out.sort();
    out
}

/// Choices over `m` symbols with exactly `len` components, canonical order.
pub fn choices_of_len(m: usize, len: usize) -> Vec<Choice> {
    let mut out: Vec<Choice> = (0..(1u64 << m))
        .map(|b| Choice(b as u32))
        .filter(|c| c.len() == len)
        .collect();
    out.sort();
    out
}

/// Maps every choice over `m` symbols to its particle sector and its position
/// inside that sector.
#[derive(Clone, Debug)]
pub struct SectorIndex {
    m: usize,
    slot: Vec<usize>,
    sectors: Vec<Vec<Choice>>,
}

impl SectorIndex {
    pub fn new(m: usize) -> Self {
        let sectors: Vec<Vec<Choice>> = (0..=m).map(|len| choices_of_len(m, len)).collect();
        let mut slot = vec![0; 1 << m];
        for sector in &sectors {
            for (i, c) in sector.iter().enumerate() {
                slot[c.bits() as usize] = i;
            }
        }
        SectorIndex { m, slot, sectors }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Position of `c` within its sector `c.len()`.
    pub fn slot(&self, c: Choice) -> usize {
        self.slot[c.bits() as usize]
    }

    pub fn sector(&self, len: usize) -> &[Choice] {
        &self.sectors[len]
    }

    pub fn sector_size(&self, len: usize) -> usize {
        self.sectors[len].len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &[usize]) -> Choice {
        Choice::from_symbols(s).unwrap()
    }

    #[test]
    fn canonical_order_m3() {
        let got = all_choices(3);
        let want = vec![
            c(&[]),
            c(&[1]),
            c(&[2]),
            c(&[3]),
            c(&[1, 2]),
            c(&[1, 3]),
            c(&[2, 3]),
            c(&[1, 2, 3]),
        ];
        assert_eq!(got, want);
    }

    #[test]
    fn lexicographic_within_sector_m4() {
        // bitmask order would put (2,3) before (1,4)
        let got: Vec<Vec<usize>> = choices_of_len(4, 2)
            .into_iter()
            .map(|c| c.to_vec())
            .collect();
        assert_eq!(
            got,
            vec![
                vec![1, 2],
                vec![1, 3],
                vec![1, 4],
                vec![2, 3],
                vec![2, 4],
                vec![3, 4]
            ]
        );
    }

    #[test]
    fn union_rules() {
        assert_eq!(c(&[1, 3]).union(c(&[2])).unwrap(), c(&[1, 2, 3]));
        assert_eq!(c(&[2, 4]).union(Choice::EMPTY).unwrap(), c(&[2, 4]));
        assert!(matches!(
            c(&[1]).union(c(&[1])),
            Err(BetheError::Overlap(_, _))
        ));
        assert!(Choice::from_symbols(&[2, 2]).is_err());
        assert!(Choice::from_symbols(&[0]).is_err());
    }

    #[test]
    fn counts_per_sector() {
        for m in 0..=6 {
            assert_eq!(all_choices(m).len(), 1 << m);
            for len in 0..=m {
                let binom = (0..len).fold(1usize, |acc, i| acc * (m - i) / (i + 1));
                assert_eq!(choices_of_len(m, len).len(), binom);
            }
        }
    }

    #[test]
    fn subsets_enumerate_power_set() {
        let full = c(&[1, 3, 4]);
        let mut subs: Vec<Choice> = full.subsets().collect();
        subs.sort();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(full)));
    }

    #[test]
    fn display() {
        assert_eq!(Choice::EMPTY.to_string(), "∅");
        assert_eq!(c(&[1, 2]).to_string(), "(1,2)");
    }
}
