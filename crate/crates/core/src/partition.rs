//! Left-right partitions of the chain `1..=N` and ring partitions whose first
//! part wraps around the ends.

use crate::error::{BetheError, Result};

/// Contiguous part: absolute first site (1-based) and number of sites.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Part {
    pub start: usize,
    pub len: usize,
}

impl Part {
    pub fn new(start: usize, len: usize) -> Self {
        Part { start, len }
    }

    /// Last site, inclusive.
    pub fn end(&self) -> usize {
        self.start + self.len - 1
    }

    pub fn sites(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticePartition {
    n: usize,
    sizes: Vec<usize>,
}

impl LatticePartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(BetheError::InvalidPartition("no parts".into()));
        }
        if sizes.contains(&0) {
            return Err(BetheError::InvalidPartition(format!(
                "empty part in {sizes:?}"
            )));
        }
        Ok(LatticePartition {
            n: sizes.iter().sum(),
            sizes,
        })
    }

    /// `N / size` parts of `size` sites each.
    pub fn uniform(n: usize, size: usize) -> Result<Self> {
        if size == 0 || n == 0 || !n.is_multiple_of(size) {
            return Err(BetheError::InvalidPartition(format!(
                "{n} sites do not split into parts of {size}"
            )));
        }
        Self::new(vec![size; n / size])
    }

    /// The trivial partition with a single part.
    pub fn whole(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn parts(&self) -> Vec<Part> {
        let mut start = 1;
        self.sizes
            .iter()
            .map(|&len| {
                let p = Part::new(start, len);
                start += len;
                p
            })
            .collect()
    }

    /// Size shared by every part, if the partition is regular.
    pub fn uniform_size(&self) -> Option<usize> {
        let first = self.sizes[0];
        self.sizes.iter().all(|&s| s == first).then_some(first)
    }
}

/// `A_1 = A_1L ∪ A_1R` wraps around the chain ends; `A_2 .. A_L` sit between.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingPartition {
    left: usize,
    middle: Vec<usize>,
    right: usize,
}

impl RingPartition {
    pub fn new(left: usize, middle: Vec<usize>, right: usize) -> Result<Self> {
        if left + right == 0 {
            return Err(BetheError::InvalidPartition("first part is empty".into()));
        }
        if middle.is_empty() || middle.contains(&0) {
            return Err(BetheError::InvalidPartition(format!(
                "inner parts must be non-empty: {middle:?}"
            )));
        }
        Ok(RingPartition {
            left,
            middle,
            right,
        })
    }

    pub fn n(&self) -> usize {
        self.left + self.middle.iter().sum::<usize>() + self.right
    }

    /// Number of ring parts `L` (the wrapped part counts once).
    pub fn len(&self) -> usize {
        1 + self.middle.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn left_len(&self) -> usize {
        self.left
    }

    pub fn right_len(&self) -> usize {
        self.right
    }

    pub fn middle(&self) -> &[usize] {
        &self.middle
    }

    /// The left-right partition `[A_1L, A_2, ..., A_L, A_1R]`, dropping empty
    /// end blocks.
    pub fn unrolled(&self) -> LatticePartition {
        let mut sizes = Vec::with_capacity(self.middle.len() + 2);
        if self.left > 0 {
            sizes.push(self.left);
        }
        sizes.extend_from_slice(&self.middle);
        if self.right > 0 {
            sizes.push(self.right);
        }
        LatticePartition::new(sizes).unwrap()
    }

    pub fn left_part(&self) -> Option<Part> {
        (self.left > 0).then(|| Part::new(1, self.left))
    }

    pub fn right_part(&self) -> Option<Part> {
        (self.right > 0).then(|| Part::new(self.n() - self.right + 1, self.right))
    }

    pub fn middle_parts(&self) -> Vec<Part> {
        let mut start = self.left + 1;
        self.middle
            .iter()
            .map(|&len| {
                let p = Part::new(start, len);
                start += len;
                p
            })
            .collect()
    }
}
