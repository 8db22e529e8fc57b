//! Sparse tensors indexed by choices.
//!
//! * `𝕋^c_{a,b} = δ_{a∪b,c} Θ[a,b]` glues two neighbouring local wavefunctions.
//! * `𝕊^a_σ = ⟨σ|a⟩` expands a local wavefunction in the occupation basis of a
//!   part; `σ` is a bitmask with bit 0 on the leftmost site of the part.
//! * `ℝ^{μL,μR}_σ = Σ_a 𝕋^{μL}_{a,μR} 𝕊^a_σ` is the fused MPS site tensor.
//!
//! The shifted variants `𝕋̃` and `𝕊̃` move the position dependence of a part
//! into a phase `Ω` so that equal-sized parts share one tensor.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::amplitude::{local_amplitude, omega_shift, theta_multi, theta_pair_unchecked};
use crate::choice::{choices_up_to, Choice};
use crate::combinatorics::masks_with_popcount;
use crate::data::{BetheData, Model};
use crate::error::{BetheError, Result};
use crate::partition::Part;
use crate::C64;

/// Tensor over choice indices; index 0 is the incoming (parent) index.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseChoiceTensor {
    domains: Vec<Vec<Choice>>,
    entries: BTreeMap<Vec<Choice>, C64>,
}

impl SparseChoiceTensor {
    pub fn new(domains: Vec<Vec<Choice>>) -> Self {
        SparseChoiceTensor {
            domains,
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, idx: Vec<Choice>, value: C64) -> Result<()> {
        if idx.len() != self.domains.len() {
            return Err(BetheError::Dimension(format!(
                "index of arity {} for tensor of arity {}",
                idx.len(),
                self.domains.len()
            )));
        }
        for (k, (c, dom)) in idx.iter().zip(&self.domains).enumerate() {
            if !dom.contains(c) {
                return Err(BetheError::Dimension(format!(
                    "{c} outside domain of index {k}"
                )));
            }
        }
        self.entries.insert(idx, value);
        Ok(())
    }

    pub fn arity(&self) -> usize {
        self.domains.len()
    }

    pub fn domains(&self) -> &[Vec<Choice>] {
        &self.domains
    }

    pub fn get(&self, idx: &[Choice]) -> C64 {
        self.entries.get(idx).copied().unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<Vec<Choice>, C64> {
        &self.entries
    }

    /// Slice at fixed incoming index as a matrix over the two outgoing ones
    /// (rows: index 1, columns: index 2).
    pub fn matrix(&self, c: Choice) -> DMatrix<C64> {
        assert_eq!(self.arity(), 3);
        let (ra, rb) = (&self.domains[1], &self.domains[2]);
        DMatrix::from_fn(ra.len(), rb.len(), |i, j| self.get(&[c, ra[i], rb[j]]))
    }

    /// Entries grouped by incoming index.
    pub fn by_parent(&self) -> BTreeMap<Choice, Vec<(&[Choice], C64)>> {
        let mut out: BTreeMap<Choice, Vec<(&[Choice], C64)>> = BTreeMap::new();
        for (idx, &v) in &self.entries {
            out.entry(idx[0]).or_default().push((&idx[1..], v));
        }
        out
    }
}

/// `𝕊`-type tensor: choice index and occupation bitstring of one part.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteBasisTensor {
    domain: Vec<Choice>,
    part: Part,
    entries: BTreeMap<(Choice, u64), C64>,
}

impl SiteBasisTensor {
    pub fn from_entries(
        domain: Vec<Choice>,
        part: Part,
        entries: BTreeMap<(Choice, u64), C64>,
    ) -> Result<Self> {
        for &(a, sigma) in entries.keys() {
            if !domain.contains(&a) || (part.len < 64 && sigma >> part.len != 0) {
                return Err(BetheError::Dimension(format!(
                    "entry ({a}, {sigma:#b}) out of range"
                )));
            }
        }
        Ok(SiteBasisTensor {
            domain,
            part,
            entries,
        })
    }

    pub fn domain(&self) -> &[Choice] {
        &self.domain
    }

    /// Coordinates the amplitudes were evaluated on.
    pub fn part(&self) -> Part {
        self.part
    }

    pub fn get(&self, a: Choice, sigma: u64) -> C64 {
        self.entries.get(&(a, sigma)).copied().unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<(Choice, u64), C64> {
        &self.entries
    }
}

/// Fused MPS tensor `ℝ^{μL,μR}_σ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    left: Vec<Choice>,
    right: Vec<Choice>,
    part: Part,
    entries: BTreeMap<(Choice, Choice, u64), C64>,
}

impl SiteTensor {
    pub fn from_entries(
        left: Vec<Choice>,
        right: Vec<Choice>,
        part: Part,
        entries: BTreeMap<(Choice, Choice, u64), C64>,
    ) -> Result<Self> {
        for &(l, r, sigma) in entries.keys() {
            if !left.contains(&l)
                || !right.contains(&r)
                || (part.len < 64 && sigma >> part.len != 0)
            {
                return Err(BetheError::Dimension(format!(
                    "entry ({l}, {r}, {sigma:#b}) out of range"
                )));
            }
        }
        Ok(SiteTensor {
            left,
            right,
            part,
            entries,
        })
    }

    pub fn left_domain(&self) -> &[Choice] {
        &self.left
    }

    pub fn right_domain(&self) -> &[Choice] {
        &self.right
    }

    pub fn part(&self) -> Part {
        self.part
    }

    pub fn get(&self, l: Choice, r: Choice, sigma: u64) -> C64 {
        self.entries
            .get(&(l, r, sigma))
            .copied()
            .unwrap_or_default()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &BTreeMap<(Choice, Choice, u64), C64> {
        &self.entries
    }

    /// `ℝ_σ` as a matrix with rows `μL` and columns `μR` in domain order.
    pub fn matrix(&self, sigma: u64) -> DMatrix<C64> {
        DMatrix::from_fn(self.left.len(), self.right.len(), |i, j| {
            self.get(self.left[i], self.right[j], sigma)
        })
    }

    pub fn bond_dims(&self) -> (usize, usize) {
        (self.left.len(), self.right.len())
    }
}

pub fn build_t<D: Model + ?Sized>(
    data: &D,
    c_domain: &[Choice],
    a_domain: &[Choice],
    b_domain: &[Choice],
) -> SparseChoiceTensor {
    build_t_weighted(data, c_domain, a_domain, b_domain, |_| C64::new(1.0, 0.0))
}

fn build_t_weighted<D: Model + ?Sized>(
    data: &D,
    c_domain: &[Choice],
    a_domain: &[Choice],
    b_domain: &[Choice],
    weight: impl Fn(Choice) -> C64,
) -> SparseChoiceTensor {
    let mut t = SparseChoiceTensor::new(vec![
        c_domain.to_vec(),
        a_domain.to_vec(),
        b_domain.to_vec(),
    ]);
    for &c in c_domain {
        for &a in a_domain {
            if !a.is_subset_of(c) {
                continue;
            }
            let b = c.difference(a);
            if b_domain.contains(&b) {
                let v = theta_pair_unchecked(data, a, b) * weight(b);
                t.entries.insert(vec![c, a, b], v);
            }
        }
    }
    t
}

/// `𝕋^μ_{ν_1..ν_q} = δ_{∪ν, μ} Θ_q[ν_1, ..., ν_q]`.
pub fn build_t_qary<D: Model + ?Sized>(
    data: &D,
    out_domains: &[Vec<Choice>],
    in_domain: &[Choice],
) -> Result<SparseChoiceTensor> {
    let q = out_domains.len();
    if q < 2 {
        return Err(BetheError::Dimension(format!("fan-out {q} below 2")));
    }
    let mut domains = vec![in_domain.to_vec()];
    domains.extend(out_domains.iter().cloned());
    let mut t = SparseChoiceTensor::new(domains);
    for &mu in in_domain {
        let sym = mu.to_vec();
        let mut digits = vec![0usize; sym.len()];
        loop {
            let mut bits = vec![0u32; q];
            for (s, &d) in sym.iter().zip(&digits) {
                bits[d] |= 1 << (s - 1);
            }
            let nu: Vec<Choice> = bits.into_iter().map(Choice::from_bits).collect();
            if nu.iter().zip(out_domains).all(|(c, dom)| dom.contains(c)) {
                let v = theta_multi(data, &nu)?;
                let mut idx = vec![mu];
                idx.extend(nu);
                t.entries.insert(idx, v);
            }
            let mut advanced = false;
            for j in (0..digits.len()).rev() {
                digits[j] += 1;
                if digits[j] < q {
                    advanced = true;
                    break;
                }
                digits[j] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(t)
}

/// `𝕋̃^c_{a,b} = Θ[a,b] Ω_A(b) δ_{a∪b,c}` for a left part of `n_a` sites.
pub fn build_t_tilde(
    data: &BetheData,
    n_a: usize,
    c_domain: &[Choice],
    a_domain: &[Choice],
    b_domain: &[Choice],
) -> SparseChoiceTensor {
    build_t_weighted(data, c_domain, a_domain, b_domain, |b| {
        omega_shift(data, b, n_a)
    })
}

/// `𝕊^a_σ` on `part`, absolute coordinates.
pub fn build_s<D: Model + ?Sized>(data: &D, domain: &[Choice], part: Part) -> SiteBasisTensor {
    assert!(part.len <= 64, "part of {} sites", part.len);
    let mut entries = BTreeMap::new();
    let mut pos = Vec::new();
    for &a in domain {
        if a.len() > part.len {
            continue;
        }
        for sigma in masks_with_popcount(part.len, a.len()) {
            pos.clear();
            let mut s = sigma;
            while s != 0 {
                pos.push(part.start + s.trailing_zeros() as usize);
                s &= s - 1;
            }
            entries.insert((a, sigma), local_amplitude(data, a, &pos));
        }
    }
    SiteBasisTensor {
        domain: domain.to_vec(),
        part,
        entries,
    }
}

/// `𝕊̃^a_σ`: relative coordinates `y = 1..part_size`.
pub fn build_s_tilde(data: &BetheData, domain: &[Choice], part_size: usize) -> SiteBasisTensor {
    build_s(data, domain, Part::new(1, part_size))
}

/// Contracts `Σ_a 𝕋^{μL}_{a,μR} 𝕊^a_σ`.
pub fn fuse(t: &SparseChoiceTensor, s: &SiteBasisTensor) -> SiteTensor {
    let mut entries: BTreeMap<(Choice, Choice, u64), C64> = BTreeMap::new();
    let mut by_choice: BTreeMap<Choice, Vec<(u64, C64)>> = BTreeMap::new();
    for (&(a, sigma), &v) in &s.entries {
        by_choice.entry(a).or_default().push((sigma, v));
    }
    for (idx, &tv) in &t.entries {
        let (l, a, r) = (idx[0], idx[1], idx[2]);
        if let Some(list) = by_choice.get(&a) {
            for &(sigma, sv) in list {
                *entries.entry((l, r, sigma)).or_default() += tv * sv;
            }
        }
    }
    entries.retain(|_, v| *v != C64::default());
    SiteTensor {
        left: t.domains[0].clone(),
        right: t.domains[2].clone(),
        part: s.part,
        entries,
    }
}

/// Local choices a part of `len` sites can host.
pub fn part_domain(m: usize, len: usize) -> Vec<Choice> {
    choices_up_to(m, len.min(m))
}

/// Fused MPS tensor on `part` between the given bond domains.
pub fn build_r<D: Model + ?Sized>(
    data: &D,
    part: Part,
    left_domain: &[Choice],
    right_domain: &[Choice],
) -> SiteTensor {
    let local = part_domain(data.m(), part.len);
    let t = build_t(data, left_domain, &local, right_domain);
    fuse(&t, &build_s(data, &local, part))
}

/// Homogeneous MPS tensor `ℝ̃` for parts of `len` sites.
pub fn build_r_tilde(
    data: &BetheData,
    len: usize,
    left_domain: &[Choice],
    right_domain: &[Choice],
) -> SiteTensor {
    let local = part_domain(data.m(), len);
    let t = build_t_tilde(data, len, left_domain, &local, right_domain);
    fuse(&t, &build_s_tilde(data, &local, len))
}
