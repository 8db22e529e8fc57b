//! Binomials and colexicographic enumeration of position sets.

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binom(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Colex rank of a strictly increasing set of 0-based positions.
pub fn colex_rank(positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .map(|(i, &p)| binom(p, i + 1) as usize)
        .sum()
}

/// Inverse of [`colex_rank`] for sets of size `k`; fills `out`.
pub fn colex_unrank(mut rank: usize, k: usize, out: &mut Vec<usize>) {
    out.clear();
    out.resize(k, 0);
    for i in (0..k).rev() {
        // largest p with C(p, i+1) <= rank
        let mut p = i;
        while binom(p + 1, i + 1) as usize <= rank {
            p += 1;
        }
        out[i] = p;
        rank -= binom(p, i + 1) as usize;
    }
}

/// Iterates all `k`-subsets of `0..n` in colex order, which is also rank order.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    cur: Vec<usize>,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            cur: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let k = self.cur.len();
        let mut i = 0;
        loop {
            if i == k {
                self.done = true;
                break;
            }
            let limit = if i + 1 < k { self.cur[i + 1] } else { self.n };
            if self.cur[i] + 1 < limit {
                self.cur[i] += 1;
                for (j, slot) in self.cur.iter_mut().enumerate().take(i) {
                    *slot = j;
                }
                break;
            }
            i += 1;
        }
        Some(out)
    }
}

/// Bitmasks over `n` bits with exactly `k` ones, in colex order.
pub fn masks_with_popcount(n: usize, k: usize) -> impl Iterator<Item = u64> {
    assert!(n <= 64);
    Combinations::new(n, k).map(|c| c.iter().fold(0u64, |m, &p| m | (1u64 << p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), 10);
        assert_eq!(binom(1024, 2), 523_776);
        assert_eq!(binom(3, 5), 0);
        assert_eq!(binom(0, 0), 1);
    }

    #[test]
    fn enumeration_matches_rank() {
        for n in 0..8 {
            for k in 0..=n {
                let all: Vec<Vec<usize>> = Combinations::new(n, k).collect();
                assert_eq!(all.len() as u128, binom(n, k));
                let mut buf = Vec::new();
                for (r, c) in all.iter().enumerate() {
                    assert_eq!(colex_rank(c), r);
                    colex_unrank(r, k, &mut buf);
                    assert_eq!(&buf, c);
                }
            }
        }
    }

    #[test]
    fn popcount_masks() {
        let masks: Vec<u64> = masks_with_popcount(4, 2).collect();
        assert_eq!(masks.len(), 6);
        assert!(masks.iter().all(|m| m.count_ones() == 2));
    }
}
