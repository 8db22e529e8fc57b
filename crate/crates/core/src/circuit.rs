//! Canonical form of the homogeneous binary TTN and the log-depth qudit
//! circuit that prepares the normalized Bethe wavefunction.
//!
//! Parts hold `M` sites each, so every qudit has dimension `D = 2^M` and its
//! computational basis index is the occupancy bitstring of its sites, leftmost
//! site at bit 0. Two-qudit unitaries act on `first * D + second`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::choice::{all_choices, Choice};
use crate::data::BetheData;
use crate::dense::{build_dense_bethe, inner_product, DenseState, SparseState};
use crate::error::{BetheError, Result};
use crate::network::{build_binary_ttn, homogeneous_layers, TensorNetwork};
use crate::partition::{LatticePartition, Part};
use crate::tensors::{SiteBasisTensor, SparseChoiceTensor};
use crate::C64;

/// Qubit budget of the statevector simulator.
pub const MAX_SIM_QUBITS: usize = 20;

const ISOMETRY_TOL: f64 = 1e-10;

/// Which input of the two-qudit gate is pinned to `|∅⟩`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// `𝕌`: the state enters on the first qudit, the second starts in `|∅⟩`.
    Left,
    /// `𝕌̃`: the state enters on the second qudit, the first starts in `|∅⟩`.
    Right,
}

/// Placement of the gates on the qudit register.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum Wiring {
    /// Every subtree state lives on the leftmost qudit of its block.
    Left,
    /// Every subtree state lives on the rightmost qudit of its block.
    Right,
    /// Left children use `𝕌`, right children `𝕌̃`; gates join block ends.
    #[default]
    Mixed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuditGate {
    pub layer: usize,
    pub targets: Vec<usize>,
    pub unitary: DMatrix<C64>,
}

impl QuditGate {
    /// Frobenius norm of `U†U - I`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.unitary.ncols();
        (self.unitary.adjoint() * &self.unitary - DMatrix::<C64>::identity(n, n)).norm()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCircuit {
    pub m: usize,
    pub num_qudits: usize,
    pub wiring: Wiring,
    pub gates: Vec<QuditGate>,
}

impl QuantumCircuit {
    pub fn dim(&self) -> usize {
        1 << self.m
    }

    /// Number of gate layers.
    pub fn depth(&self) -> usize {
        self.gates.iter().map(|g| g.layer + 1).max().unwrap_or(0)
    }

    pub fn two_qudit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.targets.len() == 2).count()
    }

    pub fn max_unitarity_error(&self) -> f64 {
        self.gates
            .iter()
            .map(|g| g.unitarity_error())
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        format!(
            "qudits={} dim={} depth={} gates={} two_qudit={} wiring={:?}",
            self.num_qudits,
            self.dim(),
            self.depth(),
            self.gates.len(),
            self.two_qudit_count(),
            self.wiring
        )
    }
}

/// Isometries `𝕎[z]` (`D² × D`, layer `z = 0` at the root), the triangular
/// factors `𝕊[z]`, and the top vector `ψ_α = 𝕊[0]^{1⃗}_α`.
#[derive(Clone, Debug)]
pub struct CanonicalTtn {
    pub m: usize,
    pub isometries: Vec<DMatrix<C64>>,
    pub factors: Vec<DMatrix<C64>>,
    pub top: DVector<C64>,
}

/// QR with the diagonal of the triangular factor made real and non-negative.
pub fn qr_positive(f: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let qr = f.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..r.nrows().min(r.ncols()) {
        let d = r[(i, i)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for j in 0..r.ncols() {
                r[(i, j)] *= phase.conj();
            }
            for k in 0..q.nrows() {
                q[(k, i)] *= phase;
            }
        }
    }
    (q, r)
}

fn choice_positions(m: usize) -> HashMap<Choice, usize> {
    all_choices(m)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect()
}

fn leaf_matrix(s: &SiteBasisTensor, pos: &HashMap<Choice, usize>, d: usize) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(d, d);
    for (&(a, sigma), &v) in s.entries() {
        out[(sigma as usize, pos[&a])] += v;
    }
    out
}

/// `𝔽_{(αD+β), c} = Σ_{a,b} 𝕊_{α,a} 𝕊_{β,b} 𝕋̃^c_{a,b}`.
fn layer_matrix(
    below: &DMatrix<C64>,
    t: &SparseChoiceTensor,
    pos: &HashMap<Choice, usize>,
    d: usize,
) -> DMatrix<C64> {
    let mut f = DMatrix::zeros(d * d, d);
    for (idx, &v) in t.entries() {
        let (c, a, b) = (pos[&idx[0]], pos[&idx[1]], pos[&idx[2]]);
        for alpha in 0..d {
            let x = below[(alpha, a)] * v;
            if x == C64::default() {
                continue;
            }
            for beta in 0..d {
                f[(alpha * d + beta, c)] += x * below[(beta, b)];
            }
        }
    }
    f
}

/// Bottom-up QR of a homogeneous binary TTN whose parts hold `M` sites.
pub fn canonicalize(net: &TensorNetwork) -> Result<CanonicalTtn> {
    let TensorNetwork::Tree(ttn) = net else {
        return Err(BetheError::NotHomogeneous(
            "canonical form needs a binary tree".into(),
        ));
    };
    let (layers, leaf) = homogeneous_layers(ttn)?;
    let m = ttn.m;
    if ttn.parts[0].len != m {
        return Err(BetheError::LatticeSize(format!(
            "parts of {} sites, qudits need {m}",
            ttn.parts[0].len
        )));
    }
    let d = 1usize << m;
    let pos = choice_positions(m);
    let mut below = leaf_matrix(&leaf, &pos, d);
    let mut isometries = vec![DMatrix::zeros(0, 0); layers.len()];
    let mut factors = vec![DMatrix::zeros(0, 0); layers.len()];
    for z in (0..layers.len()).rev() {
        let f = layer_matrix(&below, &layers[z], &pos, d);
        let (w, r) = qr_positive(&f);
        isometries[z] = w;
        factors[z] = r.clone();
        below = r;
    }
    let top = below.column(pos[&Choice::full(m)]).into_owned();
    Ok(CanonicalTtn {
        m,
        isometries,
        factors,
        top,
    })
}

/// Extends the orthonormal columns of `w` to a unitary, placing column `j` of
/// `w` at column `slots[j]` and filling the rest by modified Gram–Schmidt.
fn complete_unitary(w: &DMatrix<C64>, slots: &[usize]) -> Result<DMatrix<C64>> {
    let n = w.nrows();
    let err = (w.adjoint() * w - DMatrix::<C64>::identity(w.ncols(), w.ncols())).norm();
    if err.is_nan() || err > ISOMETRY_TOL {
        return Err(BetheError::NotIsometric(err));
    }
    let mut basis: Vec<DVector<C64>> = (0..w.ncols()).map(|j| w.column(j).into_owned()).collect();
    let mut extra = Vec::new();
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::<C64>::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        for _ in 0..2 {
            for b in &basis {
                let proj = b.dotc(&v);
                v -= b * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            v /= C64::new(norm, 0.0);
            basis.push(v.clone());
            extra.push(v);
        }
    }
    let mut u = DMatrix::zeros(n, n);
    let mut free = (0..n).filter(|i| !slots.contains(i));
    for (j, &s) in slots.iter().enumerate() {
        u.set_column(s, &w.column(j));
    }
    for v in extra {
        u.set_column(free.next().unwrap(), &v);
    }
    Ok(u)
}

/// Two-qudit unitary whose `|∅⟩`-pinned slice equals the isometry `w`.
pub fn embed_isometry(w: &DMatrix<C64>, orientation: Orientation) -> Result<DMatrix<C64>> {
    let d = w.ncols();
    if w.nrows() != d * d {
        return Err(BetheError::Dimension(format!(
            "{}x{d} is not D²xD",
            w.nrows()
        )));
    }
    let slots: Vec<usize> = match orientation {
        Orientation::Left => (0..d).map(|a| a * d).collect(),
        Orientation::Right => (0..d).collect(),
    };
    complete_unitary(w, &slots)
}

/// One-qudit unitary mapping `|∅⟩` to `ψ / |ψ|`.
pub fn preparation_unitary(psi: &DVector<C64>) -> Result<DMatrix<C64>> {
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(BetheError::InvalidData("zero top vector".into()));
    }
    let col = DMatrix::from_column_slice(psi.len(), 1, (psi / C64::new(norm, 0.0)).as_slice());
    complete_unitary(&col, &[0])
}

pub fn compile_circuit(data: &BetheData, n: usize, wiring: Wiring) -> Result<QuantumCircuit> {
    let m = data.k().len();
    if m == 0 {
        return Ok(QuantumCircuit {
            m,
            num_qudits: 0,
            wiring,
            gates: Vec::new(),
        });
    }
    if !n.is_multiple_of(m) || !(n / m).is_power_of_two() {
        return Err(BetheError::LatticeSize(format!(
            "N={n} is not M·2^Z for M={m}"
        )));
    }
    let l = n / m;
    let net = build_binary_ttn(data, &LatticePartition::uniform(n, m)?, true)?;
    let canon = canonicalize(&net)?;
    let prep = preparation_unitary(&canon.top)?;
    let d = 1usize << m;
    let depth = canon.isometries.len();
    if depth == 0 {
        return Ok(QuantumCircuit {
            m,
            num_qudits: 1,
            wiring,
            gates: vec![QuditGate {
                layer: 0,
                targets: vec![0],
                unitary: prep,
            }],
        });
    }
    let eye = DMatrix::<C64>::identity(d, d);
    let mut gates = Vec::new();
    for (z, w) in canon.isometries.iter().enumerate() {
        let u_left = embed_isometry(w, Orientation::Left)?;
        let u_right = embed_isometry(w, Orientation::Right)?;
        let width = l >> z;
        for block in 0..(1usize << z) {
            let s = block * width;
            let (targets, orientation) = match wiring {
                Wiring::Left => ([s, s + width / 2], Orientation::Left),
                Wiring::Right => ([s + width / 2 - 1, s + width - 1], Orientation::Right),
                Wiring::Mixed if block % 2 == 0 => ([s, s + width - 1], Orientation::Left),
                Wiring::Mixed => ([s, s + width - 1], Orientation::Right),
            };
            let mut unitary = match orientation {
                Orientation::Left => u_left.clone(),
                Orientation::Right => u_right.clone(),
            };
            if z == 0 {
                // the root gate also prepares the top vector on its carrier
                unitary = match orientation {
                    Orientation::Left => unitary * prep.kronecker(&eye),
                    Orientation::Right => unitary * eye.kronecker(&prep),
                };
            }
            gates.push(QuditGate {
                layer: z,
                targets: targets.to_vec(),
                unitary,
            });
        }
    }
    Ok(QuantumCircuit {
        m,
        num_qudits: l,
        wiring,
        gates,
    })
}

/// Statevector over `D^L` entries, qudit `i` at digit `D^i`, starting from
/// `|∅…∅⟩`.
pub fn simulate_statevector(circuit: &QuantumCircuit) -> Result<Vec<C64>> {
    let qubits = circuit.m * circuit.num_qudits;
    if qubits > MAX_SIM_QUBITS {
        return Err(BetheError::OracleBound {
            what: "simulated qubits",
            size: qubits as u128,
            limit: MAX_SIM_QUBITS as u128,
        });
    }
    let d = circuit.dim();
    let size = d.pow(circuit.num_qudits as u32);
    let mut state = vec![C64::default(); size];
    state[0] = C64::new(1.0, 0.0);
    let mut buf = vec![C64::default(); d * d];
    for gate in &circuit.gates {
        let strides: Vec<usize> = gate.targets.iter().map(|&q| d.pow(q as u32)).collect();
        let k = gate.unitary.nrows();
        for base in 0..size {
            if strides.iter().any(|&st| (base / st) % d != 0) {
                continue;
            }
            let offset = |i: usize| -> usize {
                match strides.as_slice() {
                    [a] => base + i * a,
                    [a, b] => base + (i / d) * a + (i % d) * b,
                    _ => unreachable!(),
                }
            };
            for (i, slot) in buf[..k].iter_mut().enumerate() {
                *slot = state[offset(i)];
            }
            for i in 0..k {
                state[offset(i)] = buf[..k]
                    .iter()
                    .enumerate()
                    .map(|(j, x)| gate.unitary[(i, j)] * x)
                    .sum();
            }
        }
    }
    Ok(state)
}

/// Projects a statevector onto the `M`-particle sector as a dense state, and
/// returns the weight left outside that sector.
pub fn statevector_to_dense(circuit: &QuantumCircuit, state: &[C64]) -> Result<(DenseState, f64)> {
    let (m, d) = (circuit.m, circuit.dim());
    let n = m * circuit.num_qudits;
    let mut sparse = SparseState::new();
    let mut leaked = 0.0;
    for (index, &amp) in state.iter().enumerate() {
        let mut mask = 0u64;
        let mut rest = index;
        for q in 0..circuit.num_qudits {
            mask |= ((rest % d) as u64) << (q * m);
            rest /= d;
        }
        if mask.count_ones() as usize == m {
            sparse.insert(mask, amp);
        } else {
            leaked += amp.norm_sqr();
        }
    }
    if n == 0 {
        return Ok((DenseState::vacuum(0), leaked));
    }
    Ok((
        DenseState::from_sparse(Part::new(1, n), m, &sparse)?,
        leaked,
    ))
}

/// `|⟨oracle/|oracle| | simulated⟩|²`.
pub fn verify_preparation(data: &BetheData, n: usize, wiring: Wiring) -> Result<f64> {
    let circuit = compile_circuit(data, n, wiring)?;
    if circuit.m == 0 {
        return Ok(1.0);
    }
    let state = simulate_statevector(&circuit)?;
    let (sim, _) = statevector_to_dense(&circuit, &state)?;
    let oracle = build_dense_bethe(data, n)?.normalized();
    Ok(inner_product(&oracle, &sim)?.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::contract_to_dense;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        use rand::Rng;
        let f = DMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        qr_positive(&f).0
    }

    #[test]
    fn qr_sign_convention() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        use rand::Rng;
        let f = DMatrix::from_fn(16, 4, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let (q, r) = qr_positive(&f);
        assert!((&q * &r - &f).norm() < 1e-12);
        assert!((q.adjoint() * &q - DMatrix::identity(4, 4)).norm() < 1e-12);
        for i in 0..4 {
            assert!(r[(i, i)].im.abs() < 1e-14 && r[(i, i)].re >= 0.0);
        }
    }

    #[test]
    fn embedding_keeps_the_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let w = random_isometry(4, 2, &mut rng);
        for (o, slot) in [(Orientation::Left, 2), (Orientation::Right, 1)] {
            let u = embed_isometry(&w, o).unwrap();
            assert!((u.adjoint() * &u - DMatrix::identity(4, 4)).norm() < 1e-12);
            assert_eq!(u.column(0), w.column(0));
            assert_eq!(u.column(slot), w.column(1));
        }
        let scalar = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        assert_eq!(embed_isometry(&scalar, Orientation::Left).unwrap(), scalar);
        let bad = DMatrix::from_element(4, 2, C64::new(1.0, 0.0));
        assert!(matches!(
            embed_isometry(&bad, Orientation::Left),
            Err(BetheError::NotIsometric(_))
        ));
    }

    #[test]
    fn canonical_form_reproduces_layers() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let data = BetheData::random(1, &mut rng);
        let net = build_binary_ttn(&data, &LatticePartition::uniform(4, 1).unwrap(), true).unwrap();
        let canon = canonicalize(&net).unwrap();
        assert_eq!(canon.isometries.len(), 2);
        for w in &canon.isometries {
            assert!((w.adjoint() * w - DMatrix::identity(2, 2)).norm() < 1e-12);
        }
        // the norm of the state is carried entirely by the top vector
        let dense = contract_to_dense(&net).unwrap();
        assert!((canon.top.norm_squared() - dense.norm_sqr()).abs() < 1e-10 * dense.norm_sqr());
    }

    #[test]
    fn circuit_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let d1 = BetheData::random(1, &mut rng);
        let c = compile_circuit(&d1, 8, Wiring::Left).unwrap();
        assert_eq!((c.depth(), c.two_qudit_count(), c.num_qudits), (3, 7, 8));
        let d2 = BetheData::random(2, &mut rng);
        let c = compile_circuit(&d2, 8, Wiring::Left).unwrap();
        assert_eq!((c.depth(), c.dim(), c.num_qudits), (2, 4, 4));
        assert!(c.max_unitarity_error() < 1e-10);
        let v = compile_circuit(&BetheData::vacuum(), 8, Wiring::Left).unwrap();
        assert!(v.gates.is_empty());
        assert_eq!(simulate_statevector(&v).unwrap(), vec![C64::new(1.0, 0.0)]);
        assert!(compile_circuit(&d2, 6, Wiring::Left).is_err());
    }

    #[test]
    fn every_wiring_prepares_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        for (m, n) in [(1, 2), (1, 4), (1, 8), (2, 4), (2, 8), (3, 6)] {
            let data = BetheData::random(m, &mut rng);
            for wiring in [Wiring::Left, Wiring::Right, Wiring::Mixed] {
                let circuit = compile_circuit(&data, n, wiring).unwrap();
                let state = simulate_statevector(&circuit).unwrap();
                let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
                let f = verify_preparation(&data, n, wiring).unwrap();
                assert!(f > 1.0 - 1e-10, "M={m} N={n} {wiring:?}: {f}");
            }
        }
    }

    #[test]
    fn single_part_is_one_gate() {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let data = BetheData::random(2, &mut rng);
        let c = compile_circuit(&data, 2, Wiring::Left).unwrap();
        assert_eq!(c.gates.len(), 1);
        assert!(verify_preparation(&data, 2, Wiring::Left).unwrap() > 1.0 - 1e-10);
    }
}
