use itertools::Itertools;

use crate::error::{BetheError, Result};

/// A permutation `P = (P_1, ..., P_M)` of the symbols `1..=M`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let m = image.len();
        let mut seen = vec![false; m];
        for &p in &image {
            if p == 0 || p > m || seen[p - 1] {
                return Err(BetheError::InvalidPermutation(format!("{image:?}")));
            }
            seen[p - 1] = true;
        }
        Ok(Permutation { image })
    }

    pub fn identity(m: usize) -> Self {
        Permutation {
            image: (1..=m).collect(),
        }
    }

    /// All `m!` permutations in lexicographic order.
    pub fn all(m: usize) -> Vec<Permutation> {
        (1..=m)
            .permutations(m)
            .map(|image| Permutation { image })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// `P_i` with 1-based `i`.
    pub fn at(&self, i: usize) -> usize {
        self.image[i - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &p)| p == i + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(Permutation::all(0).len(), 1);
        assert_eq!(Permutation::all(4).len(), 24);
        assert!(Permutation::all(3)[0].is_identity());
    }

    #[test]
    fn validation() {
        assert!(Permutation::new(vec![2, 1, 3]).is_ok());
        assert!(Permutation::new(vec![2, 2]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
    }
}
