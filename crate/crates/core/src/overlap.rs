//! Overlaps `⟨bra|ket⟩ = Σ_x conj(bra(x)) ket(x)` computed directly on the
//! network representations.
//!
//! Environments are stored per particle sector, so entries between choices of
//! different length cannot exist.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::choice::{Choice, SectorIndex};
use crate::combinatorics::binom;
use crate::error::{BetheError, Result};
use crate::network::{homogeneous_layers, Mps, NodeId, TensorNetwork, TreeNode, Ttn};
use crate::tensors::{SiteBasisTensor, SiteTensor, SparseChoiceTensor};
use crate::C64;

/// Block-diagonal environment `ρ^μ_ν` (ket choice `μ`, bra choice `ν`).
#[derive(Clone, Debug)]
pub struct SectorEnv {
    blocks: Vec<DMatrix<C64>>,
}

impl SectorEnv {
    pub fn zeros(index: &SectorIndex) -> Self {
        let blocks = (0..=index.m())
            .map(|len| {
                let d = index.sector_size(len);
                DMatrix::zeros(d, d)
            })
            .collect();
        SectorEnv { blocks }
    }

    pub fn get(&self, index: &SectorIndex, mu: Choice, nu: Choice) -> C64 {
        if mu.len() != nu.len() {
            return C64::default();
        }
        self.blocks[mu.len()][(index.slot(mu), index.slot(nu))]
    }

    fn add(&mut self, index: &SectorIndex, mu: Choice, nu: Choice, v: C64) {
        assert_eq!(mu.len(), nu.len(), "off-sector environment entry");
        self.blocks[mu.len()][(index.slot(mu), index.slot(nu))] += v;
    }

    pub fn block(&self, len: usize) -> &DMatrix<C64> {
        &self.blocks[len]
    }
}

/// Work counters of one overlap evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OverlapStats {
    /// Multiplications in `ρ·𝔸`, one entry per MPS step.
    pub rho_a: Vec<u64>,
    /// Multiplications in `(ρ·𝔸)·𝔹*`, one entry per MPS step.
    pub rho_ab: Vec<u64>,
    /// Internal-node merges of a tree overlap.
    pub merges: usize,
}

/// `Σ_m C(M,m)² (m+1)`: work of `ρ·𝔸` for a single-site step with full bonds.
pub fn mps_step_cost(m: usize) -> u64 {
    (0..=m)
        .map(|k| {
            let c = binom(m, k) as u64;
            c * c * (k as u64 + 1)
        })
        .sum()
}

fn check_pair(bra: &TensorNetwork, ket: &TensorNetwork) -> Result<bool> {
    if bra.n() != ket.n() {
        return Err(BetheError::NetworkMismatch(format!(
            "N={} against N={}",
            bra.n(),
            ket.n()
        )));
    }
    if bra.m() != ket.m() {
        return Ok(false);
    }
    if bra.parts() != ket.parts() {
        return Err(BetheError::NetworkMismatch("different partitions".into()));
    }
    Ok(true)
}

pub fn mps_overlap(bra: &TensorNetwork, ket: &TensorNetwork) -> Result<C64> {
    mps_overlap_with_stats(bra, ket).map(|(v, _)| v)
}

/// Left-to-right environment sweep.
pub fn mps_overlap_with_stats(
    bra: &TensorNetwork,
    ket: &TensorNetwork,
) -> Result<(C64, OverlapStats)> {
    let (TensorNetwork::Mps(b), TensorNetwork::Mps(a)) = (bra, ket) else {
        return Err(BetheError::NetworkMismatch(
            "MPS overlap needs two MPS".into(),
        ));
    };
    if !check_pair(bra, ket)? {
        return Ok((C64::default(), OverlapStats::default()));
    }
    Ok(sweep(a, b))
}

fn sweep(a: &Mps, b: &Mps) -> (C64, OverlapStats) {
    let m = a.m;
    let index = SectorIndex::new(m);
    let mut rho = SectorEnv::zeros(&index);
    rho.add(&index, a.left_pin(), b.left_pin(), C64::new(1.0, 0.0));
    let mut stats = OverlapStats::default();
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        let (next, ca, cab) = step(&index, &rho, sa, sb);
        rho = next;
        stats.rho_a.push(ca);
        stats.rho_ab.push(cab);
    }
    (rho.get(&index, a.right_pin(), b.right_pin()), stats)
}

/// `ρ'^{μ'}_{ν'} = Σ ρ^μ_ν 𝔸^{μμ'}_σ 𝔹*^{νν'}_σ`, in two passes.
fn step(
    index: &SectorIndex,
    rho: &SectorEnv,
    a: &SiteTensor,
    b: &SiteTensor,
) -> (SectorEnv, u64, u64) {
    // X[(μ', σ)][ν] = Σ_μ 𝔸^{μμ'}_σ ρ^μ_ν
    let mut x: HashMap<(Choice, u64), Vec<C64>> = HashMap::new();
    let mut count_a = 0u64;
    for (&(mu, mu2, sigma), &v) in a.entries() {
        let block = rho.block(mu.len());
        let row = index.slot(mu);
        let slot = x
            .entry((mu2, sigma))
            .or_insert_with(|| vec![C64::default(); block.ncols()]);
        for (j, s) in slot.iter_mut().enumerate() {
            *s += v * block[(row, j)];
        }
        count_a += block.ncols() as u64;
    }
    let mut out = SectorEnv::zeros(index);
    let mut count_b = 0u64;
    for (&(nu, nu2, sigma), &w) in b.entries() {
        let wc = w.conj();
        let col = index.slot(nu);
        for &mu2 in index.sector(nu2.len()) {
            if let Some(xs) = x.get(&(mu2, sigma)) {
                out.add(index, mu2, nu2, xs[col] * wc);
                count_b += 1;
            }
        }
    }
    (out, count_a, count_b)
}

/// Position of `(μ, ν)`, `|μ| = |ν|`, in the transfer-matrix basis.
struct PairIndex {
    index: SectorIndex,
    offsets: Vec<usize>,
    dim: usize,
}

impl PairIndex {
    fn new(m: usize) -> Self {
        let index = SectorIndex::new(m);
        let mut offsets = Vec::new();
        let mut dim = 0;
        for len in 0..=m {
            offsets.push(dim);
            dim += index.sector_size(len).pow(2);
        }
        PairIndex {
            index,
            offsets,
            dim,
        }
    }

    fn at(&self, mu: Choice, nu: Choice) -> usize {
        let d = self.index.sector_size(mu.len());
        self.offsets[mu.len()] + self.index.slot(mu) * d + self.index.slot(nu)
    }
}

/// Mixed transfer matrix `E = Σ_σ 𝔸_σ ⊗ 𝔹*_σ` restricted to equal-sector
/// pairs; dimension `C(2M, M)`.
pub fn transfer_matrix(ket: &SiteTensor, bra: &SiteTensor, m: usize) -> DMatrix<C64> {
    let pairs = PairIndex::new(m);
    let mut e = DMatrix::zeros(pairs.dim, pairs.dim);
    let mut by_sigma: HashMap<u64, Vec<(Choice, Choice, C64)>> = HashMap::new();
    for (&(nu, nu2, sigma), &w) in bra.entries() {
        by_sigma.entry(sigma).or_default().push((nu, nu2, w.conj()));
    }
    for (&(mu, mu2, sigma), &v) in ket.entries() {
        if let Some(list) = by_sigma.get(&sigma) {
            for &(nu, nu2, wc) in list {
                if mu.len() == nu.len() {
                    e[(pairs.at(mu, nu), pairs.at(mu2, nu2))] += v * wc;
                }
            }
        }
    }
    e
}

/// `⟨1⃗,1⃗| E^copies |∅,∅⟩` by repeated squaring.
pub fn transfer_overlap(ket: &SiteTensor, bra: &SiteTensor, m: usize, copies: u64) -> C64 {
    let pairs = PairIndex::new(m);
    let full = Choice::full(m);
    let mut v = DVector::<C64>::zeros(pairs.dim);
    v[pairs.at(full, full)] = C64::new(1.0, 0.0);
    let mut row = v.transpose();
    let mut row_next = row.clone();
    let mut power = transfer_matrix(ket, bra, m);
    let mut power_next = power.clone();
    let one = C64::new(1.0, 0.0);
    let zero = C64::default();
    let mut k = copies;
    while k > 0 {
        if k & 1 == 1 {
            row_next.gemm(one, &row, &power, zero);
            std::mem::swap(&mut row, &mut row_next);
        }
        k >>= 1;
        if k > 0 {
            power_next.gemm(one, &power, &power, zero);
            std::mem::swap(&mut power, &mut power_next);
        }
    }
    row[pairs.at(Choice::EMPTY, Choice::EMPTY)]
}

/// Overlap of two homogeneous MPS on a lattice of `n` sites. Only the shared
/// tensors are used, so `n` may differ from the lattice the networks were
/// built on as long as it is a multiple of the part size.
pub fn homogeneous_mps_overlap(bra: &TensorNetwork, ket: &TensorNetwork, n: usize) -> Result<C64> {
    let (TensorNetwork::Mps(b), TensorNetwork::Mps(a)) = (bra, ket) else {
        return Err(BetheError::NotHomogeneous(
            "transfer matrix needs two MPS".into(),
        ));
    };
    if !a.homogeneous || !b.homogeneous {
        return Err(BetheError::NotHomogeneous("MPS is not homogeneous".into()));
    }
    let size = a.parts[0].len;
    if b.parts[0].len != size {
        return Err(BetheError::NetworkMismatch(format!(
            "part sizes {size} and {}",
            b.parts[0].len
        )));
    }
    if !n.is_multiple_of(size) {
        return Err(BetheError::LatticeSize(format!(
            "N={n} is not a multiple of {size}"
        )));
    }
    if a.m != b.m {
        return Ok(C64::default());
    }
    if a.m > n {
        return Err(BetheError::Dimension(format!("M={} on N={n}", a.m)));
    }
    Ok(transfer_overlap(
        &a.sites[0],
        &b.sites[0],
        a.m,
        (n / size) as u64,
    ))
}

fn leaf_env(index: &SectorIndex, ket: &SiteBasisTensor, bra: &SiteBasisTensor) -> SectorEnv {
    let mut env = SectorEnv::zeros(index);
    let mut by_sigma: HashMap<u64, Vec<(Choice, C64)>> = HashMap::new();
    for (&(a, sigma), &w) in bra.entries() {
        by_sigma.entry(sigma).or_default().push((a, w.conj()));
    }
    for (&(a, sigma), &v) in ket.entries() {
        if let Some(list) = by_sigma.get(&sigma) {
            for &(a2, wc) in list {
                env.add(index, a, a2, v * wc);
            }
        }
    }
    env
}

/// `ρ^μ_{μ'} = Σ 𝔸^μ_{ν..} 𝔹*^{μ'}_{ν'..} Π_k ρ_k^{ν_k}_{ν'_k}`.
fn merge(
    index: &SectorIndex,
    ket: &SparseChoiceTensor,
    bra: &SparseChoiceTensor,
    children: &[&SectorEnv],
) -> SectorEnv {
    let mut env = SectorEnv::zeros(index);
    // bra entries keyed by the lengths of their child choices
    let mut bra_by_shape: HashMap<Vec<usize>, Vec<(&[Choice], C64)>> = HashMap::new();
    for (idx, &w) in bra.entries() {
        let shape = idx[1..].iter().map(|c| c.len()).collect();
        bra_by_shape.entry(shape).or_default().push((idx, w.conj()));
    }
    for (idx, &v) in ket.entries() {
        let shape: Vec<usize> = idx[1..].iter().map(|c| c.len()).collect();
        let Some(list) = bra_by_shape.get(&shape) else {
            continue;
        };
        for &(idx2, wc) in list {
            let mut p = v * wc;
            for (k, child) in children.iter().enumerate() {
                p *= child.get(index, idx[k + 1], idx2[k + 1]);
            }
            env.add(index, idx[0], idx2[0], p);
        }
    }
    env
}

pub fn ttn_overlap(bra: &TensorNetwork, ket: &TensorNetwork) -> Result<C64> {
    ttn_overlap_with_stats(bra, ket).map(|(v, _)| v)
}

/// Bottom-up merge of child environments, one per internal node.
pub fn ttn_overlap_with_stats(
    bra: &TensorNetwork,
    ket: &TensorNetwork,
) -> Result<(C64, OverlapStats)> {
    let (TensorNetwork::Tree(b), TensorNetwork::Tree(a)) = (bra, ket) else {
        return Err(BetheError::NetworkMismatch(
            "tree overlap needs two trees".into(),
        ));
    };
    if a.tree != b.tree {
        return Err(BetheError::NetworkMismatch(format!(
            "trees {} and {}",
            a.tree, b.tree
        )));
    }
    if !check_pair(bra, ket)? {
        return Ok((C64::default(), OverlapStats::default()));
    }
    let index = SectorIndex::new(a.m);
    let mut stats = OverlapStats::default();
    let env = tree_env(&index, a, b, a.tree.root(), &mut stats);
    let root = a.root_choice();
    Ok((env.get(&index, root, b.root_choice()), stats))
}

fn tree_env(
    index: &SectorIndex,
    a: &Ttn,
    b: &Ttn,
    id: NodeId,
    stats: &mut OverlapStats,
) -> SectorEnv {
    match a.tree.node(id) {
        TreeNode::Leaf(i) => leaf_env(index, &a.leaves[*i], &b.leaves[*i]),
        TreeNode::Internal(children) => {
            let envs: Vec<SectorEnv> = children
                .iter()
                .map(|&c| tree_env(index, a, b, c, stats))
                .collect();
            let refs: Vec<&SectorEnv> = envs.iter().collect();
            stats.merges += 1;
            merge(
                index,
                a.nodes[id].as_ref().unwrap(),
                b.nodes[id].as_ref().unwrap(),
                &refs,
            )
        }
    }
}

pub fn homogeneous_ttn_overlap(bra: &TensorNetwork, ket: &TensorNetwork) -> Result<C64> {
    homogeneous_ttn_overlap_with_stats(bra, ket).map(|(v, _)| v)
}

/// One leaf environment and one merge per layer, reusing the layer tensor.
pub fn homogeneous_ttn_overlap_with_stats(
    bra: &TensorNetwork,
    ket: &TensorNetwork,
) -> Result<(C64, OverlapStats)> {
    let (TensorNetwork::Tree(b), TensorNetwork::Tree(a)) = (bra, ket) else {
        return Err(BetheError::NotHomogeneous(
            "tree overlap needs two trees".into(),
        ));
    };
    let (layers_a, leaf_a) = homogeneous_layers(a)?;
    let (layers_b, leaf_b) = homogeneous_layers(b)?;
    if layers_a.len() != layers_b.len() {
        return Err(BetheError::NetworkMismatch(format!(
            "depths {} and {}",
            layers_a.len(),
            layers_b.len()
        )));
    }
    if !check_pair(bra, ket)? {
        return Ok((C64::default(), OverlapStats::default()));
    }
    let index = SectorIndex::new(a.m);
    let mut env = leaf_env(&index, &leaf_a, &leaf_b);
    let mut stats = OverlapStats::default();
    for (ta, tb) in layers_a.iter().zip(&layers_b).rev() {
        env = merge(&index, ta, tb, &[&env, &env]);
        stats.merges += 1;
    }
    let root = Choice::full(a.m);
    Ok((env.get(&index, root, root), stats))
}

/// Best available exact overlap for the pair.
pub fn network_overlap(bra: &TensorNetwork, ket: &TensorNetwork) -> Result<C64> {
    match (bra, ket) {
        (TensorNetwork::Mps(_), TensorNetwork::Mps(_)) => mps_overlap(bra, ket),
        (TensorNetwork::Tree(x), TensorNetwork::Tree(y)) if x.homogeneous && y.homogeneous => {
            homogeneous_ttn_overlap(bra, ket)
        }
        (TensorNetwork::Tree(_), TensorNetwork::Tree(_)) => ttn_overlap(bra, ket),
        _ => Err(BetheError::NetworkMismatch("mixed MPS and tree".into())),
    }
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`.
pub fn fidelity(overlap: C64, norm_sqr_bra: f64, norm_sqr_ket: f64) -> f64 {
    if norm_sqr_bra == 0.0 || norm_sqr_ket == 0.0 {
        return 0.0;
    }
    overlap.norm_sqr() / (norm_sqr_bra * norm_sqr_ket)
}
