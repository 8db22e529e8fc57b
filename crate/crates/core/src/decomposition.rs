//! Sums of products of local wavefunctions over left-right and ring
//! partitions.
//!
//! Terms are enumerated by assigning each symbol `1..=M` to a part, in
//! lexicographic order of the assignment with symbol 1 as the leading digit.
//! Assignments that overfill a part are skipped, so small parts shrink the sum.

use std::collections::HashMap;

use crate::amplitude::theta_multi;
use crate::choice::Choice;
use crate::data::Model;
use crate::dense::{build_local_bethe, sparse_axpy, sparse_product, DenseState, SparseState};
use crate::error::{BetheError, Result};
use crate::partition::{LatticePartition, Part, RingPartition};
use crate::C64;

/// One product term `coeff · |a_1⟩|a_2⟩...|a_L⟩`. Factors are built on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionTerm {
    pub choices: Vec<Choice>,
    pub coeff: C64,
    pub parts: Vec<Part>,
}

impl DecompositionTerm {
    pub fn particle_count(&self) -> usize {
        self.choices.iter().map(|c| c.len()).sum()
    }

    pub fn factors<D: Model + ?Sized>(&self, data: &D) -> Result<Vec<DenseState>> {
        self.choices
            .iter()
            .zip(&self.parts)
            .map(|(&c, &p)| build_local_bethe(data, c, p))
            .collect()
    }
}

/// Walks symbol-to-part assignments respecting part capacities.
fn assignments(m: usize, caps: &[usize]) -> Vec<Vec<Choice>> {
    let l = caps.len();
    let mut out = Vec::new();
    let mut digits = vec![0usize; m];
    let mut counts = vec![0usize; l];
    counts[0] = m;
    loop {
        if counts.iter().zip(caps).all(|(c, cap)| c <= cap) {
            let mut bits = vec![0u32; l];
            for (j, &d) in digits.iter().enumerate() {
                bits[d] |= 1 << j;
            }
            out.push(bits.into_iter().map(Choice::from_bits).collect());
        }
        // odometer step, last symbol fastest
        let mut j = m;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            counts[digits[j]] -= 1;
            if digits[j] + 1 < l {
                digits[j] += 1;
                counts[digits[j]] += 1;
                break;
            }
            digits[j] = 0;
            counts[0] += 1;
        }
    }
}

pub fn multipartite_decompose<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
) -> Result<Vec<DecompositionTerm>> {
    if let Some(n) = data.lattice() {
        if n != partition.n() {
            return Err(BetheError::InvalidPartition(format!(
                "partition of {} sites for data on N={n}",
                partition.n()
            )));
        }
    }
    let parts = partition.parts();
    let caps: Vec<usize> = parts.iter().map(|p| p.len.min(data.m())).collect();
    assignments(data.m(), &caps)
        .into_iter()
        .map(|choices| {
            Ok(DecompositionTerm {
                coeff: theta_multi(data, &choices)?,
                choices,
                parts: parts.clone(),
            })
        })
        .collect()
}

/// Two-part decomposition, terms ordered by the left choice.
pub fn bipartite_decompose<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
) -> Result<Vec<DecompositionTerm>> {
    if partition.len() != 2 {
        return Err(BetheError::InvalidPartition(format!(
            "bipartition expected, got {} parts",
            partition.len()
        )));
    }
    let mut terms = multipartite_decompose(data, partition)?;
    terms.sort_by(|a, b| a.choices[0].cmp(&b.choices[0]));
    Ok(terms)
}

/// `Σ coeff · ⊗ factors` on the chain `1..=n`.
pub fn reconstruct<D: Model + ?Sized>(
    data: &D,
    terms: &[DecompositionTerm],
    n: usize,
) -> Result<DenseState> {
    let first = terms
        .first()
        .ok_or_else(|| BetheError::InvalidPartition("no terms".into()))?;
    let m = first.particle_count();
    let mut acc = SparseState::new();
    for t in terms {
        if t.particle_count() != m || t.parts.iter().map(|p| p.len).sum::<usize>() != n {
            return Err(BetheError::Dimension("inconsistent term shapes".into()));
        }
        let mut prod = SparseState::from([(0u64, C64::new(1.0, 0.0))]);
        for f in t.factors(data)? {
            prod = sparse_product(&prod, &f.to_sparse());
        }
        sparse_axpy(&mut acc, t.coeff, &prod);
    }
    DenseState::from_sparse(Part::new(1, n), m, &acc)
}

/// Term of a ring decomposition: local Bethe factors on `A_2..A_L` and the
/// composite state `Ψ = Σ coeff |a_1L⟩|a_1R⟩` on the wrapped part.
#[derive(Clone, Debug, PartialEq)]
pub struct ContiguousTerm {
    /// `a_1, a_2, ..., a_L`.
    pub choices: Vec<Choice>,
    /// `(a_1L, a_1R, Θ_{L+1}[a_1L, a_2, ..., a_L, a_1R])`.
    pub psi: Vec<(Choice, Choice, C64)>,
}

pub fn contiguous_decompose<D: Model + ?Sized>(
    data: &D,
    ring: &RingPartition,
) -> Result<Vec<ContiguousTerm>> {
    let unrolled = ring.unrolled();
    if let Some(n) = data.lattice() {
        if n != unrolled.n() {
            return Err(BetheError::InvalidPartition(format!(
                "ring of {} sites for data on N={n}",
                unrolled.n()
            )));
        }
    }
    let has_left = ring.left_len() > 0;
    let has_right = ring.right_len() > 0;
    let inner = ring.middle().len();
    let mut index: HashMap<Vec<Choice>, usize> = HashMap::new();
    let mut out: Vec<ContiguousTerm> = Vec::new();
    for t in multipartite_decompose(data, &unrolled)? {
        let mut it = t.choices.iter().copied();
        let a_left = if has_left {
            it.next().unwrap()
        } else {
            Choice::EMPTY
        };
        let middle: Vec<Choice> = it.by_ref().take(inner).collect();
        let a_right = if has_right {
            it.next().unwrap()
        } else {
            Choice::EMPTY
        };
        let mut key = vec![a_left.union(a_right)?];
        key.extend(middle);
        let slot = *index.entry(key.clone()).or_insert_with(|| {
            out.push(ContiguousTerm {
                choices: key,
                psi: Vec::new(),
            });
            out.len() - 1
        });
        out[slot].psi.push((a_left, a_right, t.coeff));
    }
    Ok(out)
}

/// The composite state `Ψ` of a ring term, keyed by occupancy mask.
pub fn psi_state<D: Model + ?Sized>(
    data: &D,
    ring: &RingPartition,
    term: &ContiguousTerm,
) -> Result<SparseState> {
    let mut acc = SparseState::new();
    let vacuum = SparseState::from([(0u64, C64::new(1.0, 0.0))]);
    for &(a_left, a_right, coeff) in &term.psi {
        let left = match ring.left_part() {
            Some(p) => build_local_bethe(data, a_left, p)?.to_sparse(),
            None => vacuum.clone(),
        };
        let right = match ring.right_part() {
            Some(p) => build_local_bethe(data, a_right, p)?.to_sparse(),
            None => vacuum.clone(),
        };
        sparse_axpy(&mut acc, coeff, &sparse_product(&left, &right));
    }
    Ok(acc)
}

pub fn reconstruct_contiguous<D: Model + ?Sized>(
    data: &D,
    ring: &RingPartition,
    terms: &[ContiguousTerm],
) -> Result<DenseState> {
    let n = ring.n();
    let middle = ring.middle_parts();
    let mut acc = SparseState::new();
    for t in terms {
        let mut prod = psi_state(data, ring, t)?;
        for (&c, &p) in t.choices[1..].iter().zip(&middle) {
            prod = sparse_product(&prod, &build_local_bethe(data, c, p)?.to_sparse());
        }
        sparse_axpy(&mut acc, C64::new(1.0, 0.0), &prod);
    }
    DenseState::from_sparse(Part::new(1, n), data.m(), &acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::BetheData;
    use crate::dense::build_dense_bethe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(t: f64) -> C64 {
        C64::from_polar(1.0, t)
    }

    #[test]
    fn one_particle_two_terms() {
        let d = BetheData::from_fn(vec![0.8], |_, _| 0.0).unwrap();
        let p = LatticePartition::new(vec![3, 3]).unwrap();
        let t = bipartite_decompose(&d, &p).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].choices, vec![Choice::EMPTY, Choice::full(1)]);
        assert_eq!(t[1].choices, vec![Choice::full(1), Choice::EMPTY]);
    }

    #[test]
    fn three_particle_coefficients_in_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = BetheData::random(3, &mut rng);
        let p = LatticePartition::new(vec![4, 4]).unwrap();
        let t = bipartite_decompose(&d, &p).unwrap();
        let (t21, t31, t32) = (d.theta(2, 1), d.theta(3, 1), d.theta(3, 2));
        let one = C64::new(1.0, 0.0);
        let want = [
            one,
            one,
            -e(t21),
            e(t32) * e(t31),
            one,
            -e(t32),
            e(t21) * e(t31),
            one,
        ];
        assert_eq!(t.len(), 8);
        for (term, w) in t.iter().zip(want) {
            assert!((term.coeff - w).norm() < 1e-13, "{:?}", term.choices);
        }
    }

    #[test]
    fn clipped_bipartition() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let d = BetheData::random(2, &mut rng);
        let p = LatticePartition::new(vec![1, 5]).unwrap();
        let t = bipartite_decompose(&d, &p).unwrap();
        assert_eq!(t.len(), 3);
        let rec = reconstruct(&d, &t, 6).unwrap();
        assert!(rec.rel_error(&build_dense_bethe(&d, 6).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn tripartite_counts_and_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let d = BetheData::random(2, &mut rng);
        let p = LatticePartition::new(vec![2, 3, 2]).unwrap();
        let t = multipartite_decompose(&d, &p).unwrap();
        assert_eq!(t.len(), 9);
        assert!(t.iter().all(|x| x.particle_count() == 2));
        let rec = reconstruct(&d, &t, 7).unwrap();
        assert!(rec.rel_error(&build_dense_bethe(&d, 7).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn assignment_order_is_lexicographic() {
        let a = assignments(2, &[2, 2]);
        let firsts: Vec<(u32, u32)> = a.iter().map(|c| (c[0].bits(), c[1].bits())).collect();
        assert_eq!(firsts, vec![(3, 0), (1, 2), (2, 1), (0, 3)]);
        assert_eq!(assignments(0, &[1, 1]).len(), 1);
    }

    #[test]
    fn ring_one_particle() {
        let d = BetheData::from_fn(vec![1.1], |_, _| 0.0).unwrap();
        let ring = RingPartition::new(2, vec![3], 2).unwrap();
        let t = contiguous_decompose(&d, &ring).unwrap();
        assert_eq!(t.len(), 2);
        let occupied = t.iter().find(|x| x.choices[0] == Choice::full(1)).unwrap();
        let psi = psi_state(&d, &ring, occupied).unwrap();
        let mut sites: Vec<u64> = psi.keys().map(|m| m.trailing_zeros() as u64 + 1).collect();
        sites.sort();
        assert_eq!(sites, vec![1, 2, 6, 7]);
        let rec = reconstruct_contiguous(&d, &ring, &t).unwrap();
        assert!(rec.rel_error(&build_dense_bethe(&d, 7).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn ring_without_right_block_is_left_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let d = BetheData::random(2, &mut rng);
        let ring = RingPartition::new(3, vec![2, 3], 0).unwrap();
        let t = contiguous_decompose(&d, &ring).unwrap();
        let lr =
            multipartite_decompose(&d, &LatticePartition::new(vec![3, 2, 3]).unwrap()).unwrap();
        assert_eq!(t.len(), lr.len());
        for (a, b) in t.iter().zip(&lr) {
            assert_eq!(a.choices, b.choices);
            assert_eq!(a.psi.len(), 1);
            assert!((a.psi[0].2 - b.coeff).norm() < 1e-15);
        }
    }
}
