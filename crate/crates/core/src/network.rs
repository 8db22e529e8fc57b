//! MPS, regular binary TTN and generic planar TTN assembled from the sparse
//! tensors, and their full contraction back to an amplitude table.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::choice::{all_choices, choices_up_to, Choice};
use crate::data::Model;
use crate::dense::{check_oracle, sparse_product, DenseState, SparseState};
use crate::error::{BetheError, Result};
use crate::partition::{LatticePartition, Part};
use crate::tensors::{
    build_r, build_r_tilde, build_s, build_s_tilde, build_t_qary, build_t_tilde, part_domain,
    SiteBasisTensor, SiteTensor, SparseChoiceTensor,
};
use crate::C64;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    /// Leaf carrying the 0-based part index.
    Leaf(usize),
    Internal(Vec<NodeId>),
}

/// Rooted planar tree whose leaves, read left to right, are the parts
/// `0..L` in lattice order. Nodes are stored in pre-order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanarTree {
    nodes: Vec<TreeNode>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Shape {
    Leaf(usize),
    Node(Vec<Shape>),
}

impl PlanarTree {
    fn from_shape(shape: &Shape) -> Result<Self> {
        fn push(shape: &Shape, nodes: &mut Vec<TreeNode>) -> NodeId {
            let id = nodes.len();
            match shape {
                Shape::Leaf(i) => nodes.push(TreeNode::Leaf(*i)),
                Shape::Node(children) => {
                    nodes.push(TreeNode::Internal(Vec::new()));
                    let ids = children.iter().map(|c| push(c, nodes)).collect();
                    nodes[id] = TreeNode::Internal(ids);
                }
            }
            id
        }
        let mut nodes = Vec::new();
        push(shape, &mut nodes);
        let tree = PlanarTree { nodes };
        tree.validate()?;
        Ok(tree)
    }

    fn shape(&self, id: NodeId) -> Shape {
        match &self.nodes[id] {
            TreeNode::Leaf(i) => Shape::Leaf(*i),
            TreeNode::Internal(ch) => Shape::Node(ch.iter().map(|&c| self.shape(c)).collect()),
        }
    }

    /// Every internal node has at least two children and the in-order leaf
    /// sequence is `0, 1, ..., L-1`.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(BetheError::InvalidTree("empty tree".into()));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        fn walk(
            t: &PlanarTree,
            id: NodeId,
            seen: &mut [bool],
            order: &mut Vec<usize>,
        ) -> Result<()> {
            if id >= t.nodes.len() || std::mem::replace(&mut seen[id], true) {
                return Err(BetheError::InvalidTree(format!(
                    "node {id} reached twice or missing"
                )));
            }
            match &t.nodes[id] {
                TreeNode::Leaf(i) => order.push(*i),
                TreeNode::Internal(ch) => {
                    if ch.len() < 2 {
                        return Err(BetheError::InvalidTree(format!(
                            "internal node {id} has {} children",
                            ch.len()
                        )));
                    }
                    for &c in ch {
                        walk(t, c, seen, order)?;
                    }
                }
            }
            Ok(())
        }
        walk(self, 0, &mut seen, &mut order)?;
        if seen.iter().any(|s| !s) {
            return Err(BetheError::InvalidTree("unreachable nodes".into()));
        }
        if order.iter().enumerate().any(|(i, &l)| i != l) {
            return Err(BetheError::InvalidTree(format!(
                "leaves out of lattice order: {:?}",
                order.iter().map(|l| l + 1).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    /// Nested-parentheses form with 1-based leaves, e.g. `((1,2),(3,4))`.
    pub fn parse(text: &str) -> Result<Self> {
        let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        fn parse_at(chars: &[char], pos: &mut usize) -> Result<Shape> {
            match chars.get(*pos) {
                Some('(') => {
                    *pos += 1;
                    let mut children = vec![parse_at(chars, pos)?];
                    loop {
                        match chars.get(*pos) {
                            Some(',') => {
                                *pos += 1;
                                children.push(parse_at(chars, pos)?);
                            }
                            Some(')') => {
                                *pos += 1;
                                return Ok(Shape::Node(children));
                            }
                            other => {
                                return Err(BetheError::InvalidTree(format!(
                                    "expected ',' or ')' at {}, found {other:?}",
                                    *pos
                                )))
                            }
                        }
                    }
                }
                Some(c) if c.is_ascii_digit() => {
                    let start = *pos;
                    while chars.get(*pos).is_some_and(|c| c.is_ascii_digit()) {
                        *pos += 1;
                    }
                    let s: String = chars[start..*pos].iter().collect();
                    let leaf: usize = s.parse().map_err(|_| BetheError::InvalidTree(s.clone()))?;
                    if leaf == 0 {
                        return Err(BetheError::InvalidTree("leaves are numbered from 1".into()));
                    }
                    Ok(Shape::Leaf(leaf - 1))
                }
                other => Err(BetheError::InvalidTree(format!(
                    "unexpected {other:?} at {}",
                    *pos
                ))),
            }
        }
        let shape = parse_at(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(BetheError::InvalidTree(format!("trailing input at {pos}")));
        }
        Self::from_shape(&shape)
    }

    /// Right-leaning chain: node `i` has children `[leaf i, node i+1]`.
    pub fn chain(leaves: usize) -> Result<Self> {
        fn build(lo: usize, hi: usize) -> Shape {
            if hi - lo == 1 {
                Shape::Leaf(lo)
            } else {
                Shape::Node(vec![Shape::Leaf(lo), build(lo + 1, hi)])
            }
        }
        if leaves == 0 {
            return Err(BetheError::InvalidTree("no leaves".into()));
        }
        Self::from_shape(&build(0, leaves))
    }

    /// Perfect binary tree with `2^depth` leaves.
    pub fn binary(depth: u32) -> Result<Self> {
        fn build(lo: usize, hi: usize) -> Shape {
            if hi - lo == 1 {
                Shape::Leaf(lo)
            } else {
                let mid = (lo + hi) / 2;
                Shape::Node(vec![build(lo, mid), build(mid, hi)])
            }
        }
        Self::from_shape(&build(0, 1usize << depth))
    }

    /// One node with `leaves` children.
    pub fn star(leaves: usize) -> Result<Self> {
        if leaves == 1 {
            return Self::from_shape(&Shape::Leaf(0));
        }
        Self::from_shape(&Shape::Node((0..leaves).map(Shape::Leaf).collect()))
    }

    /// Random planar tree: each block of leaves splits into 2 to 4
    /// contiguous groups.
    pub fn random<R: Rng + ?Sized>(leaves: usize, rng: &mut R) -> Result<Self> {
        fn build<R: Rng + ?Sized>(lo: usize, hi: usize, rng: &mut R) -> Shape {
            let size = hi - lo;
            if size == 1 {
                return Shape::Leaf(lo);
            }
            let q = rng.gen_range(2..=size.min(4));
            let mut cuts = rand::seq::index::sample(rng, size - 1, q - 1).into_vec();
            cuts.sort_unstable();
            let mut bounds = vec![lo];
            bounds.extend(cuts.into_iter().map(|c| lo + c + 1));
            bounds.push(hi);
            Shape::Node(bounds.windows(2).map(|w| build(w[0], w[1], rng)).collect())
        }
        if leaves == 0 {
            return Err(BetheError::InvalidTree("no leaves".into()));
        }
        Self::from_shape(&build(0, leaves, rng))
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf(_)))
            .count()
    }

    pub fn internal_count(&self) -> usize {
        self.nodes.len() - self.leaf_count()
    }

    /// Internal node ids in pre-order.
    pub fn internal_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], TreeNode::Internal(_)))
            .collect()
    }

    /// First and one-past-last leaf under `id`.
    pub fn leaf_span(&self, id: NodeId) -> (usize, usize) {
        match &self.nodes[id] {
            TreeNode::Leaf(i) => (*i, i + 1),
            TreeNode::Internal(ch) => (
                self.leaf_span(ch[0]).0,
                self.leaf_span(*ch.last().unwrap()).1,
            ),
        }
    }

    /// Number of edges from the root.
    pub fn depth_of(&self, id: NodeId) -> usize {
        let mut parent = vec![None; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let TreeNode::Internal(ch) = n {
                for &c in ch {
                    parent[c] = Some(i);
                }
            }
        }
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = parent[cur] {
            d += 1;
            cur = p;
        }
        d
    }
}

impl fmt::Display for PlanarTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(shape: &Shape, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match shape {
                Shape::Leaf(i) => write!(f, "{}", i + 1),
                Shape::Node(ch) => {
                    write!(f, "(")?;
                    for (k, c) in ch.iter().enumerate() {
                        if k > 0 {
                            write!(f, ",")?;
                        }
                        write(c, f)?;
                    }
                    write!(f, ")")
                }
            }
        }
        write(&self.shape(0), f)
    }
}

/// Chain of fused site tensors. The leftmost bond is pinned to `1⃗`, the
/// rightmost to `∅`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    pub m: usize,
    pub parts: Vec<Part>,
    pub sites: Vec<Arc<SiteTensor>>,
    pub homogeneous: bool,
}

impl Mps {
    pub fn n(&self) -> usize {
        self.parts.last().map(|p| p.end()).unwrap_or(0)
    }

    pub fn left_pin(&self) -> Choice {
        Choice::full(self.m)
    }

    pub fn right_pin(&self) -> Choice {
        Choice::EMPTY
    }

    /// Dimensions of the `L + 1` bonds, boundaries included.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut out = vec![self.sites[0].left_domain().len()];
        out.extend(self.sites.iter().map(|s| s.right_domain().len()));
        out
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Binary,
    Planar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ttn {
    pub m: usize,
    pub kind: TreeKind,
    pub tree: PlanarTree,
    pub parts: Vec<Part>,
    /// `𝕋`-type tensor per internal node, indexed by node id.
    pub nodes: Vec<Option<Arc<SparseChoiceTensor>>>,
    /// `𝕊`-type tensor per part.
    pub leaves: Vec<Arc<SiteBasisTensor>>,
    pub homogeneous: bool,
}

impl Ttn {
    pub fn n(&self) -> usize {
        self.parts.last().map(|p| p.end()).unwrap_or(0)
    }

    pub fn root_choice(&self) -> Choice {
        Choice::full(self.m)
    }

    /// Domain of the edge above `id`.
    pub fn edge_domain(&self, id: NodeId) -> &[Choice] {
        match self.tree.node(id) {
            TreeNode::Leaf(i) => self.leaves[*i].domain(),
            TreeNode::Internal(_) => &self.nodes[id].as_ref().unwrap().domains()[0],
        }
    }

    /// Number of `𝕋̃` layers of a binary tree.
    pub fn depth(&self) -> usize {
        self.parts.len().trailing_zeros() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TensorNetwork {
    Mps(Mps),
    Tree(Ttn),
}

impl TensorNetwork {
    pub fn n(&self) -> usize {
        match self {
            TensorNetwork::Mps(x) => x.n(),
            TensorNetwork::Tree(x) => x.n(),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            TensorNetwork::Mps(x) => x.m,
            TensorNetwork::Tree(x) => x.m,
        }
    }

    pub fn parts(&self) -> &[Part] {
        match self {
            TensorNetwork::Mps(x) => &x.parts,
            TensorNetwork::Tree(x) => &x.parts,
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        match self {
            TensorNetwork::Mps(x) => x.homogeneous,
            TensorNetwork::Tree(x) => x.homogeneous,
        }
    }

    /// Largest bond dimension over all edges.
    pub fn max_bond_dim(&self) -> usize {
        match self {
            TensorNetwork::Mps(x) => x.bond_dims().into_iter().max().unwrap_or(1),
            TensorNetwork::Tree(x) => (0..x.tree.len())
                .map(|id| x.edge_domain(id).len())
                .max()
                .unwrap_or(1),
        }
    }

    /// Stored nonzeros, shared tensors counted once per position.
    pub fn nnz(&self) -> usize {
        match self {
            TensorNetwork::Mps(x) => x.sites.iter().map(|s| s.nnz()).sum(),
            TensorNetwork::Tree(x) => {
                x.nodes.iter().flatten().map(|t| t.nnz()).sum::<usize>()
                    + x.leaves.iter().map(|s| s.nnz()).sum::<usize>()
            }
        }
    }
}

fn check_lattice<D: Model + ?Sized>(data: &D, partition: &LatticePartition) -> Result<()> {
    if let Some(n) = data.lattice() {
        if n != partition.n() {
            return Err(BetheError::InvalidPartition(format!(
                "partition of {} sites for data on N={n}",
                partition.n()
            )));
        }
    }
    if data.m() > partition.n() {
        return Err(BetheError::Dimension(format!(
            "M={} particles on N={} sites",
            data.m(),
            partition.n()
        )));
    }
    Ok(())
}

fn uniform_bethe<'a, D: Model + ?Sized>(
    data: &'a D,
    partition: &LatticePartition,
) -> Result<(&'a crate::data::BetheData, usize)> {
    let bethe = data.as_bethe().ok_or_else(|| {
        BetheError::NotHomogeneous("generalized data has no shift symmetry".into())
    })?;
    let size = partition
        .uniform_size()
        .ok_or_else(|| BetheError::NotHomogeneous(format!("part sizes {:?}", partition.sizes())))?;
    Ok((bethe, size))
}

pub fn build_mps<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
    homogeneous: bool,
) -> Result<TensorNetwork> {
    check_lattice(data, partition)?;
    let m = data.m();
    let parts = partition.parts();
    let sites: Vec<Arc<SiteTensor>> = if homogeneous {
        let (bethe, size) = uniform_bethe(data, partition)?;
        let all = all_choices(m);
        let r = Arc::new(build_r_tilde(bethe, size, &all, &all));
        vec![r; parts.len()]
    } else {
        let n = partition.n();
        let mut bonds = vec![vec![Choice::full(m)]];
        for p in &parts[..parts.len() - 1] {
            bonds.push(choices_up_to(m, m.min(n - p.end())));
        }
        bonds.push(vec![Choice::EMPTY]);
        parts
            .par_iter()
            .enumerate()
            .map(|(i, &p)| Arc::new(build_r(data, p, &bonds[i], &bonds[i + 1])))
            .collect()
    };
    Ok(TensorNetwork::Mps(Mps {
        m,
        parts,
        sites,
        homogeneous,
    }))
}

/// Planar TTN with a q-ary `𝕋` on every internal node.
pub fn build_planar_ttn<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
    tree: &PlanarTree,
) -> Result<TensorNetwork> {
    build_tree(data, partition, tree, TreeKind::Planar)
}

fn build_tree<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
    tree: &PlanarTree,
    kind: TreeKind,
) -> Result<TensorNetwork> {
    check_lattice(data, partition)?;
    if tree.leaf_count() != partition.len() {
        return Err(BetheError::InvalidTree(format!(
            "{} leaves for {} parts",
            tree.leaf_count(),
            partition.len()
        )));
    }
    let m = data.m();
    let parts = partition.parts();
    let domain_of = |id: NodeId| -> Vec<Choice> {
        if id == tree.root() {
            return vec![Choice::full(m)];
        }
        let (lo, hi) = tree.leaf_span(id);
        let sites: usize = parts[lo..hi].iter().map(|p| p.len).sum();
        choices_up_to(m, m.min(sites))
    };
    let mut nodes = vec![None; tree.len()];
    for id in tree.internal_nodes() {
        let TreeNode::Internal(ch) = tree.node(id) else {
            unreachable!()
        };
        let outs: Vec<Vec<Choice>> = ch.iter().map(|&c| domain_of(c)).collect();
        nodes[id] = Some(Arc::new(build_t_qary(data, &outs, &domain_of(id))?));
    }
    let mut leaves = vec![None; parts.len()];
    for id in 0..tree.len() {
        if let TreeNode::Leaf(i) = tree.node(id) {
            leaves[*i] = Some(Arc::new(build_s(data, &domain_of(id), parts[*i])));
        }
    }
    Ok(TensorNetwork::Tree(Ttn {
        m,
        kind,
        tree: tree.clone(),
        parts,
        nodes,
        leaves: leaves.into_iter().map(Option::unwrap).collect(),
        homogeneous: false,
    }))
}

/// Regular binary TTN over `L = 2^Z` parts. The homogeneous variant uses one
/// `𝕋̃[z]` per layer (root at `z = 0`) and one `𝕊̃` for all leaves, with full
/// `2^M` domains on every edge.
pub fn build_binary_ttn<D: Model + ?Sized>(
    data: &D,
    partition: &LatticePartition,
    homogeneous: bool,
) -> Result<TensorNetwork> {
    let l = partition.len();
    if !l.is_power_of_two() {
        return Err(BetheError::InvalidPartition(format!(
            "{l} parts is not a power of two"
        )));
    }
    let depth = l.trailing_zeros();
    let tree = PlanarTree::binary(depth)?;
    if !homogeneous {
        return build_tree(data, partition, &tree, TreeKind::Binary);
    }
    check_lattice(data, partition)?;
    let (bethe, size) = uniform_bethe(data, partition)?;
    let m = data.m();
    let all = all_choices(m);
    let layers: Vec<Arc<SparseChoiceTensor>> = (0..depth)
        .map(|z| {
            // left child of a layer-z node spans L / 2^{z+1} parts
            let left_sites = size * (l >> (z + 1));
            Arc::new(build_t_tilde(bethe, left_sites, &all, &all, &all))
        })
        .collect();
    let leaf = Arc::new(build_s_tilde(bethe, &all, size));
    let mut nodes = vec![None; tree.len()];
    for id in tree.internal_nodes() {
        nodes[id] = Some(layers[tree.depth_of(id)].clone());
    }
    Ok(TensorNetwork::Tree(Ttn {
        m,
        kind: TreeKind::Binary,
        tree,
        parts: partition.parts(),
        nodes,
        leaves: vec![leaf; l],
        homogeneous: true,
    }))
}

/// Shared tensor of a homogeneous binary TTN layer, as `(𝕋̃[z] per layer, 𝕊̃)`.
pub fn homogeneous_layers(
    ttn: &Ttn,
) -> Result<(Vec<Arc<SparseChoiceTensor>>, Arc<SiteBasisTensor>)> {
    if !ttn.homogeneous || ttn.kind != TreeKind::Binary {
        return Err(BetheError::NotHomogeneous(
            "not a homogeneous binary tree".into(),
        ));
    }
    let mut layers: Vec<Option<Arc<SparseChoiceTensor>>> = vec![None; ttn.depth()];
    for id in ttn.tree.internal_nodes() {
        let z = ttn.tree.depth_of(id);
        let t = ttn.nodes[id].clone().unwrap();
        match &layers[z] {
            Some(prev) if **prev != *t => {
                return Err(BetheError::NotHomogeneous(format!(
                    "layer {z} holds distinct tensors"
                )))
            }
            _ => layers[z] = Some(t),
        }
    }
    let leaf = ttn.leaves[0].clone();
    if ttn.leaves.iter().any(|s| **s != *leaf) {
        return Err(BetheError::NotHomogeneous(
            "leaves hold distinct tensors".into(),
        ));
    }
    Ok((layers.into_iter().map(Option::unwrap).collect(), leaf))
}

fn placed(sigma: u64, part: Part) -> u64 {
    sigma << (part.start - 1)
}

fn add_scaled(map: &mut HashMap<Choice, SparseState>, key: Choice, coef: C64, state: &SparseState) {
    let slot = map.entry(key).or_default();
    for (&k, &v) in state {
        *slot.entry(k).or_default() += coef * v;
    }
}

/// Explicit wavefunction represented by the network.
pub fn contract_to_dense(net: &TensorNetwork) -> Result<DenseState> {
    let n = net.n();
    if n > 64 {
        return Err(BetheError::OracleBound {
            what: "sites for bitmask contraction",
            size: n as u128,
            limit: 64,
        });
    }
    check_oracle(n, net.m())?;
    let state = match net {
        TensorNetwork::Mps(mps) => contract_mps(mps),
        TensorNetwork::Tree(ttn) => {
            let mut top = contract_node(ttn, ttn.tree.root());
            top.remove(&ttn.root_choice()).unwrap_or_default()
        }
    };
    DenseState::from_sparse(Part::new(1, n), net.m(), &state)
}

fn contract_mps(mps: &Mps) -> SparseState {
    let mut env: HashMap<Choice, SparseState> = HashMap::new();
    env.insert(
        mps.right_pin(),
        SparseState::from([(0u64, C64::new(1.0, 0.0))]),
    );
    for (site, part) in mps.sites.iter().zip(&mps.parts).rev() {
        let mut next: HashMap<Choice, SparseState> = HashMap::new();
        for (&(l, r, sigma), &v) in site.entries() {
            if let Some(rest) = env.get(&r) {
                let mask = placed(sigma, *part);
                let slot = next.entry(l).or_default();
                for (&k, &w) in rest {
                    *slot.entry(k | mask).or_default() += v * w;
                }
            }
        }
        env = next;
    }
    env.remove(&mps.left_pin()).unwrap_or_default()
}

fn contract_node(ttn: &Ttn, id: NodeId) -> HashMap<Choice, SparseState> {
    match ttn.tree.node(id) {
        TreeNode::Leaf(i) => {
            let part = ttn.parts[*i];
            let mut out: HashMap<Choice, SparseState> = HashMap::new();
            for (&(a, sigma), &v) in ttn.leaves[*i].entries() {
                *out.entry(a)
                    .or_default()
                    .entry(placed(sigma, part))
                    .or_default() += v;
            }
            out
        }
        TreeNode::Internal(children) => {
            let child_maps: Vec<HashMap<Choice, SparseState>> = children
                .par_iter()
                .map(|&c| contract_node(ttn, c))
                .collect();
            let t = ttn.nodes[id].as_ref().unwrap();
            let mut out = HashMap::new();
            'entries: for (idx, &v) in t.entries() {
                let mut prod = SparseState::from([(0u64, C64::new(1.0, 0.0))]);
                for (map, nu) in child_maps.iter().zip(&idx[1..]) {
                    match map.get(nu) {
                        Some(s) => prod = sparse_product(&prod, s),
                        None => continue 'entries,
                    }
                }
                add_scaled(&mut out, idx[0], v, &prod);
            }
            out
        }
    }
}

/// Checks that neighbouring tensors agree on every shared edge domain.
pub fn check_edges(net: &TensorNetwork) -> Result<()> {
    match net {
        TensorNetwork::Mps(mps) => {
            for (i, w) in mps.sites.windows(2).enumerate() {
                if w[0].right_domain() != w[1].left_domain() {
                    return Err(BetheError::NetworkMismatch(format!(
                        "bond {} after part {}",
                        i + 1,
                        i + 1
                    )));
                }
            }
            Ok(())
        }
        TensorNetwork::Tree(ttn) => {
            for id in ttn.tree.internal_nodes() {
                let TreeNode::Internal(ch) = ttn.tree.node(id) else {
                    unreachable!()
                };
                let t = ttn.nodes[id].as_ref().unwrap();
                for (k, &c) in ch.iter().enumerate() {
                    if t.domains()[k + 1] != ttn.edge_domain(c) {
                        return Err(BetheError::NetworkMismatch(format!(
                            "edge below node {id}, child {k}"
                        )));
                    }
                }
            }
            Ok(())
        }
    }
}

/// Domain a part of `len` sites can host, re-exported for builders elsewhere.
pub fn local_domain(m: usize, len: usize) -> Vec<Choice> {
    part_domain(m, len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{BetheData, GeneralizedBetheData};
    use crate::dense::build_dense;
    use crate::tensors::fuse;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tree_parsing_and_printing() {
        let t = PlanarTree::parse("((1,2),(3,4))").unwrap();
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(t.internal_count(), 3);
        assert_eq!(t.to_string(), "((1,2),(3,4))");
        assert_eq!(PlanarTree::binary(2).unwrap(), t);
        assert!(PlanarTree::parse("((2,1),(3,4))").is_err());
        assert!(PlanarTree::parse("((1),2)").is_err());
        assert!(PlanarTree::parse("(1,2").is_err());
        assert_eq!(PlanarTree::chain(3).unwrap().to_string(), "(1,(2,3))");
        assert_eq!(PlanarTree::star(1).unwrap().to_string(), "1");
    }

    #[test]
    fn random_trees_are_planar() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for l in 1..=8 {
            for _ in 0..20 {
                let t = PlanarTree::random(l, &mut rng).unwrap();
                assert_eq!(t.leaf_count(), l);
                t.validate().unwrap();
            }
        }
    }

    #[test]
    fn one_particle_mps_has_bond_two() {
        let d = BetheData::from_fn(vec![0.6], |_, _| 0.0).unwrap();
        let net = build_mps(&d, &LatticePartition::uniform(5, 1).unwrap(), false).unwrap();
        assert_eq!(net.max_bond_dim(), 2);
        let vac = build_mps(
            &BetheData::vacuum(),
            &LatticePartition::uniform(5, 1).unwrap(),
            false,
        )
        .unwrap();
        assert_eq!(vac.max_bond_dim(), 1);
        assert_eq!(contract_to_dense(&vac).unwrap(), DenseState::vacuum(5));
    }

    #[test]
    fn bonds_shrink_near_the_right_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let d = BetheData::random(3, &mut rng);
        let net = build_mps(&d, &LatticePartition::uniform(6, 1).unwrap(), false).unwrap();
        let TensorNetwork::Mps(mps) = &net else {
            panic!()
        };
        assert_eq!(mps.bond_dims(), vec![1, 8, 8, 8, 7, 4, 1]);
        check_edges(&net).unwrap();
    }

    #[test]
    fn all_shapes_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for m in 0..=3 {
            let d = BetheData::random(m, &mut rng);
            let oracle = build_dense(&d, 8).unwrap();
            let p = LatticePartition::new(vec![2, 1, 3, 2]).unwrap();
            for net in [
                build_mps(&d, &p, false).unwrap(),
                build_mps(&d, &LatticePartition::uniform(8, 2).unwrap(), true).unwrap(),
                build_binary_ttn(&d, &p, false).unwrap(),
                build_binary_ttn(&d, &LatticePartition::uniform(8, 2).unwrap(), true).unwrap(),
                build_planar_ttn(&d, &p, &PlanarTree::parse("(1,(2,3),4)").unwrap()).unwrap(),
                build_planar_ttn(&d, &p, &PlanarTree::star(4).unwrap()).unwrap(),
            ] {
                check_edges(&net).unwrap();
                assert!(net.max_bond_dim() <= 1 << m);
                let got = contract_to_dense(&net).unwrap();
                assert!(got.rel_error(&oracle).unwrap() < 1e-12, "M={m}");
            }
        }
    }

    #[test]
    fn generalized_networks_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let g = GeneralizedBetheData::random(3, 7, &mut rng);
        let oracle = build_dense(&g, 7).unwrap();
        let p = LatticePartition::new(vec![3, 1, 3]).unwrap();
        let net = build_mps(&g, &p, false).unwrap();
        assert!(contract_to_dense(&net).unwrap().rel_error(&oracle).unwrap() < 1e-12);
        assert!(build_mps(&g, &LatticePartition::uniform(7, 1).unwrap(), true).is_err());
    }

    #[test]
    fn chain_tree_fuses_into_mps_sites() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let d = BetheData::random(2, &mut rng);
        let p = LatticePartition::new(vec![1, 2, 1, 2]).unwrap();
        let TensorNetwork::Mps(mps) = build_mps(&d, &p, false).unwrap() else {
            panic!()
        };
        let tree = PlanarTree::chain(4).unwrap();
        let TensorNetwork::Tree(ttn) = build_planar_ttn(&d, &p, &tree).unwrap() else {
            panic!()
        };
        // node i of the chain carries parts i and the rest
        let internal = ttn.tree.internal_nodes();
        for (i, &id) in internal.iter().enumerate() {
            let fused = fuse(ttn.nodes[id].as_ref().unwrap(), &ttn.leaves[i]);
            assert_eq!(fused.entries(), mps.sites[i].entries());
        }
        assert_eq!(mps.sites[3].entries().len(), ttn.leaves[3].entries().len());
        for (&(l, r, sigma), &v) in mps.sites[3].entries() {
            assert_eq!(r, Choice::EMPTY);
            assert_eq!(ttn.leaves[3].get(l, sigma), v);
        }
    }

    #[test]
    fn homogeneous_uses_one_tensor_per_layer() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let d = BetheData::random(2, &mut rng);
        let p = LatticePartition::uniform(8, 1).unwrap();
        let TensorNetwork::Mps(mps) = build_mps(&d, &p, true).unwrap() else {
            panic!()
        };
        assert!(mps.sites.iter().all(|s| Arc::ptr_eq(s, &mps.sites[0])));
        let TensorNetwork::Tree(ttn) = build_binary_ttn(&d, &p, true).unwrap() else {
            panic!()
        };
        let (layers, _) = homogeneous_layers(&ttn).unwrap();
        assert_eq!(layers.len(), 3);
        assert!(
            build_binary_ttn(&d, &LatticePartition::new(vec![1, 2, 3, 2]).unwrap(), true).is_err()
        );
        assert!(build_binary_ttn(&d, &LatticePartition::uniform(6, 2).unwrap(), false).is_err());
    }

    #[test]
    fn size_guard() {
        let d = BetheData::from_fn(vec![0.1], |_, _| 0.0).unwrap();
        let net = build_mps(&d, &LatticePartition::uniform(70, 1).unwrap(), true).unwrap();
        assert!(matches!(
            contract_to_dense(&net),
            Err(BetheError::OracleBound { .. })
        ));
    }
}
