//! Explicit amplitude tables over the `C(N, M)` occupation basis.
//!
//! A [`DenseState`] covers a contiguous block of sites and stores one amplitude
//! per strictly increasing position vector, in colex rank order. Positions are
//! always absolute lattice coordinates. [`SparseState`] keys configurations by
//! occupancy bitmask (site `x` at bit `x - 1`) and is used wherever states on
//! non-contiguous supports have to be combined.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::amplitude::theta_of_sequence;
use crate::choice::Choice;
use crate::combinatorics::{binom, colex_rank, colex_unrank, Combinations};
use crate::data::{BetheData, GeneralizedBetheData, Model};
use crate::error::{BetheError, Result};
use crate::partition::Part;
use crate::permutation::Permutation;
use crate::C64;

pub const MAX_ORACLE_PARTICLES: usize = 8;
pub const DEFAULT_ORACLE_MAX: u128 = 10_000_000;

/// Basis-size limit, overridable through `BETHE_ORACLE_MAX`.
pub fn oracle_limit() -> u128 {
    std::env::var("BETHE_ORACLE_MAX")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_ORACLE_MAX)
}

pub fn check_oracle(n: usize, m: usize) -> Result<()> {
    if m > n {
        return Err(BetheError::Dimension(format!(
            "M={m} particles on N={n} sites"
        )));
    }
    if m > MAX_ORACLE_PARTICLES {
        return Err(BetheError::OracleBound {
            what: "particle count",
            size: m as u128,
            limit: MAX_ORACLE_PARTICLES as u128,
        });
    }
    let size = binom(n, m);
    let limit = oracle_limit();
    if size > limit {
        return Err(BetheError::OracleBound {
            what: "basis size",
            size,
            limit,
        });
    }
    Ok(())
}

/// Occupancy bitmask to amplitude.
pub type SparseState = HashMap<u64, C64>;

/// Product state on disjoint supports.
pub fn sparse_product(a: &SparseState, b: &SparseState) -> SparseState {
    let mut out = SparseState::with_capacity(a.len() * b.len());
    for (&ma, &va) in a {
        for (&mb, &vb) in b {
            debug_assert_eq!(ma & mb, 0);
            out.insert(ma | mb, va * vb);
        }
    }
    out
}

pub fn sparse_axpy(acc: &mut SparseState, coef: C64, x: &SparseState) {
    for (&k, &v) in x {
        *acc.entry(k).or_default() += coef * v;
    }
}

pub fn positions_to_mask(positions: &[usize]) -> u64 {
    positions.iter().fold(0, |m, &x| m | (1u64 << (x - 1)))
}

pub fn mask_to_positions(mut mask: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(mask.count_ones() as usize);
    while mask != 0 {
        out.push(mask.trailing_zeros() as usize + 1);
        mask &= mask - 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    part: Part,
    m: usize,
    amps: Vec<C64>,
}

impl DenseState {
    pub fn zeros(part: Part, m: usize) -> Result<Self> {
        check_oracle(part.len, m)?;
        Ok(DenseState {
            part,
            m,
            amps: vec![C64::default(); binom(part.len, m) as usize],
        })
    }

    /// Vacuum `|0...0⟩` on the whole chain `1..=n`.
    pub fn vacuum(n: usize) -> Self {
        DenseState {
            part: Part::new(1, n),
            m: 0,
            amps: vec![C64::new(1.0, 0.0)],
        }
    }

    /// Random amplitudes in the unit square for every configuration.
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::zeros(Part::new(1, n), m)?;
        for a in &mut s.amps {
            *a = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        Ok(s)
    }

    pub fn from_amplitudes(part: Part, m: usize, amps: Vec<C64>) -> Result<Self> {
        let want = binom(part.len, m) as usize;
        if amps.len() != want {
            return Err(BetheError::Dimension(format!(
                "{} amplitudes for C({}, {m}) = {want}",
                amps.len(),
                part.len
            )));
        }
        Ok(DenseState { part, m, amps })
    }

    pub fn part(&self) -> Part {
        self.part
    }

    /// Number of sites covered.
    pub fn n(&self) -> usize {
        self.part.len
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn rank_of(&self, positions: &[usize]) -> Option<usize> {
        if positions.len() != self.m {
            return None;
        }
        let mut local = Vec::with_capacity(self.m);
        let mut prev = None;
        for &x in positions {
            if x < self.part.start || x > self.part.end() || prev.is_some_and(|p| p >= x) {
                return None;
            }
            prev = Some(x);
            local.push(x - self.part.start);
        }
        Some(colex_rank(&local))
    }

    /// Amplitude at absolute positions; zero for configurations outside the
    /// support or with the wrong particle number.
    pub fn amplitude(&self, positions: &[usize]) -> C64 {
        self.rank_of(positions)
            .map(|r| self.amps[r])
            .unwrap_or_default()
    }

    pub fn set(&mut self, positions: &[usize], value: C64) -> Result<()> {
        let r = self
            .rank_of(positions)
            .ok_or_else(|| BetheError::Dimension(format!("configuration {positions:?}")))?;
        self.amps[r] = value;
        Ok(())
    }

    /// `(absolute positions, amplitude)` in rank order.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, C64)> + '_ {
        let start = self.part.start;
        Combinations::new(self.part.len, self.m)
            .zip(self.amps.iter())
            .map(move |(c, &a)| (c.into_iter().map(|p| p + start).collect(), a))
    }

    pub fn to_sparse(&self) -> SparseState {
        self.iter()
            .filter(|(_, a)| *a != C64::default())
            .map(|(x, a)| (positions_to_mask(&x), a))
            .collect()
    }

    pub fn from_sparse(part: Part, m: usize, sparse: &SparseState) -> Result<Self> {
        let mut out = Self::zeros(part, m)?;
        for (&mask, &v) in sparse {
            let x = mask_to_positions(mask);
            out.set(&x, v)?;
        }
        Ok(out)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: C64) {
        for a in &mut self.amps {
            *a *= s;
        }
    }

    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            out.scale(C64::new(1.0 / n, 0.0));
        }
        out
    }

    /// `max |self - reference| / max |reference|`.
    pub fn rel_error(&self, reference: &DenseState) -> Result<f64> {
        if self.part != reference.part || self.m != reference.m {
            return Err(BetheError::Dimension(format!(
                "comparing states on {:?}/M={} and {:?}/M={}",
                self.part, self.m, reference.part, reference.m
            )));
        }
        let diff = self
            .amps
            .iter()
            .zip(&reference.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = reference.max_abs();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }
}

fn orbital_table<D: Model + ?Sized>(data: &D, part: Part) -> Vec<Vec<C64>> {
    (1..=data.m())
        .map(|j| part.sites().map(|x| data.orbital(j, x)).collect())
        .collect()
}

/// Literal permutation sum `Σ_P Θ[P] Π_j φ_{P_j}(x_j)` over the given symbols.
fn permutation_sum<D: Model + ?Sized>(
    data: &D,
    symbols: &[usize],
    part: Part,
) -> Result<DenseState> {
    let m = symbols.len();
    if m > part.len {
        return Err(BetheError::Dimension(format!(
            "{m} particles do not fit in {} sites",
            part.len
        )));
    }
    check_oracle(part.len, m)?;
    let table = orbital_table(data, part);
    let terms: Vec<(Vec<usize>, C64)> = Permutation::all(m)
        .into_iter()
        .map(|p| {
            let seq: Vec<usize> = p.image().iter().map(|&i| symbols[i - 1]).collect();
            let th = theta_of_sequence(data, &seq);
            (seq, th)
        })
        .collect();
    let size = binom(part.len, m) as usize;
    let amps: Vec<C64> = (0..size)
        .into_par_iter()
        .map_init(Vec::new, |buf, r| {
            colex_unrank(r, m, buf);
            let mut acc = C64::default();
            for (seq, th) in &terms {
                let mut t = *th;
                for (&j, &p) in seq.iter().zip(buf.iter()) {
                    t *= table[j - 1][p];
                }
                acc += t;
            }
            acc
        })
        .collect();
    Ok(DenseState { part, m, amps })
}

/// The wavefunction of `data` on the chain `1..=n`.
pub fn build_dense<D: Model + ?Sized>(data: &D, n: usize) -> Result<DenseState> {
    if let Some(l) = data.lattice() {
        if l != n {
            return Err(BetheError::Dimension(format!(
                "data defined on N={l}, asked for N={n}"
            )));
        }
    }
    let symbols: Vec<usize> = (1..=data.m()).collect();
    permutation_sum(data, &symbols, Part::new(1, n))
}

pub fn build_dense_bethe(data: &BetheData, n: usize) -> Result<DenseState> {
    build_dense(data, n)
}

pub fn build_dense_generalized(data: &GeneralizedBetheData) -> Result<DenseState> {
    build_dense(data, data.n())
}

/// Local wavefunction of the reduced data selected by `choice`, supported on
/// `part` with absolute coordinates.
pub fn build_local_bethe<D: Model + ?Sized>(
    data: &D,
    choice: Choice,
    part: Part,
) -> Result<DenseState> {
    if choice.max_symbol() > data.m() {
        return Err(BetheError::SymbolOutOfRange {
            symbol: choice.max_symbol(),
            m: data.m(),
        });
    }
    if let Some(l) = data.lattice() {
        if part.end() > l {
            return Err(BetheError::Dimension(format!("part {part:?} beyond N={l}")));
        }
    }
    permutation_sum(data, &choice.to_vec(), part)
}

/// `Σ_x conj(lhs(x)) rhs(x)`; zero across particle sectors.
pub fn inner_product(lhs: &DenseState, rhs: &DenseState) -> Result<C64> {
    if lhs.part != rhs.part {
        return Err(BetheError::Dimension(format!(
            "supports {:?} and {:?} differ",
            lhs.part, rhs.part
        )));
    }
    if lhs.m != rhs.m {
        return Ok(C64::default());
    }
    Ok(lhs
        .amps
        .par_iter()
        .zip(rhs.amps.par_iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Singular values across the cut after the first `cut` sites, all particle
/// blocks together, sorted descending.
pub fn schmidt_values(state: &DenseState, cut: usize) -> Result<Vec<f64>> {
    let n = state.n();
    if cut == 0 || cut >= n {
        return Err(BetheError::Dimension(format!("cut {cut} outside 1..{n}")));
    }
    let m = state.m;
    let n_b = n - cut;
    let mut values = Vec::new();
    for m_a in m.saturating_sub(n_b)..=m.min(cut) {
        let rows: Vec<Vec<usize>> = Combinations::new(cut, m_a).collect();
        let cols: Vec<Vec<usize>> = Combinations::new(n_b, m - m_a).collect();
        let mut mat = DMatrix::<C64>::zeros(rows.len(), cols.len());
        let mut pos = Vec::with_capacity(m);
        for (i, r) in rows.iter().enumerate() {
            for (j, c) in cols.iter().enumerate() {
                pos.clear();
                pos.extend(r.iter().copied());
                pos.extend(c.iter().map(|p| p + cut));
                mat[(i, j)] = state.amps[colex_rank(&pos)];
            }
        }
        values.extend(mat.singular_values().iter().copied());
    }
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(values)
}

/// Number of singular values above `tol * σ_max`.
pub fn schmidt_rank(state: &DenseState, cut: usize, tol: f64) -> Result<usize> {
    let values = schmidt_values(state, cut)?;
    let top = values.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(values.iter().filter(|&&s| s > tol * top).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn vacuum_and_plane_wave() {
        let v = build_dense_bethe(&BetheData::vacuum(), 5).unwrap();
        assert_eq!(v.amplitudes(), &[C64::new(1.0, 0.0)]);
        let d = BetheData::from_fn(vec![0.7], |_, _| 0.0).unwrap();
        let s = build_dense_bethe(&d, 6).unwrap();
        for x in 1..=6 {
            assert!(close(
                s.amplitude(&[x]),
                C64::from_polar(1.0, 0.7 * x as f64),
                1e-14
            ));
        }
        assert!((inner_product(&s, &s).unwrap().re - 6.0).abs() < 1e-12);
    }

    #[test]
    fn two_particle_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = BetheData::random(2, &mut rng);
        let (k1, k2, t) = (d.k()[0], d.k()[1], d.theta(2, 1));
        let s = build_dense_bethe(&d, 7).unwrap();
        for (x, a) in s.iter() {
            let (x1, x2) = (x[0] as f64, x[1] as f64);
            let want = C64::from_polar(1.0, k1 * x1 + k2 * x2)
                - C64::from_polar(1.0, t + k2 * x1 + k1 * x2);
            assert!(close(a, want, 1e-13));
        }
    }

    #[test]
    fn generalized_reduces_to_bethe() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = BetheData::random(3, &mut rng);
        let g = GeneralizedBetheData::from_bethe(&d, 7).unwrap();
        let a = build_dense_bethe(&d, 7).unwrap();
        let b = build_dense_generalized(&g).unwrap();
        assert!(b.rel_error(&a).unwrap() < 1e-13);
        assert!(build_dense(&g, 8).is_err());
    }

    #[test]
    fn generalized_two_particles_by_hand() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = GeneralizedBetheData::random(2, 5, &mut rng);
        let s = build_dense_generalized(&g).unwrap();
        let f = g.scattering()[&(2, 1)];
        for (x, a) in s.iter() {
            let phi = g.phi();
            let want =
                phi[0][x[0] - 1] * phi[1][x[1] - 1] + f * phi[1][x[0] - 1] * phi[0][x[1] - 1];
            assert!(close(a, want, 1e-13));
        }
    }

    #[test]
    fn local_state_uses_absolute_sites() {
        let d = BetheData::from_fn(vec![0.2, 0.9, 1.4], |_, _| 0.3).unwrap();
        let s = build_local_bethe(&d, Choice::singleton(2), Part::new(4, 4)).unwrap();
        assert_eq!(s.amplitudes().len(), 4);
        for x in 4..=7 {
            assert!(close(
                s.amplitude(&[x]),
                C64::from_polar(1.0, 0.9 * x as f64),
                1e-14
            ));
        }
        assert_eq!(s.amplitude(&[3]), C64::default());
        let v = build_local_bethe(&d, Choice::EMPTY, Part::new(2, 3)).unwrap();
        assert_eq!(v.amplitudes(), &[C64::new(1.0, 0.0)]);
        assert!(build_local_bethe(&d, Choice::full(3), Part::new(1, 2)).is_err());
        let full = build_local_bethe(&d, Choice::full(3), Part::new(1, 6)).unwrap();
        assert!(full.rel_error(&build_dense_bethe(&d, 6).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn orthogonal_plane_waves() {
        let n = 8;
        let a = build_dense_bethe(
            &BetheData::from_fn(vec![2.0 * PI / n as f64], |_, _| 0.0).unwrap(),
            n,
        )
        .unwrap();
        let b = build_dense_bethe(
            &BetheData::from_fn(vec![4.0 * PI / n as f64], |_, _| 0.0).unwrap(),
            n,
        )
        .unwrap();
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
        let v = DenseState::vacuum(n);
        assert_eq!(inner_product(&v, &v).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(inner_product(&v, &a).unwrap(), C64::default());
    }

    #[test]
    fn schmidt_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert_eq!(schmidt_rank(&DenseState::vacuum(6), 3, 1e-9).unwrap(), 1);
        let d = BetheData::random(2, &mut rng);
        let s = build_dense_bethe(&d, 8).unwrap();
        assert_eq!(schmidt_rank(&s, 4, 1e-9).unwrap(), 4);
        // one site hosts at most one particle: two sectors of rank one
        assert_eq!(schmidt_rank(&s, 1, 1e-9).unwrap(), 2);
        let r = DenseState::random(12, 2, &mut rng).unwrap();
        assert!(schmidt_rank(&r, 6, 1e-9).unwrap() > 4);
    }

    #[test]
    fn sparse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = DenseState::random(7, 3, &mut rng).unwrap();
        let back = DenseState::from_sparse(s.part(), 3, &s.to_sparse()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn oracle_bounds() {
        assert!(check_oracle(3, 4).is_err());
        assert!(check_oracle(40, 9).is_err());
        assert!(matches!(
            check_oracle(200, 5),
            Err(BetheError::OracleBound { .. })
        ));
        assert!(check_oracle(1024, 2).is_ok());
    }
}
