//! Bethe data `(k, θ)` and generalized data `(φ, θ)`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{BetheError, Result};
use crate::C64;

/// What the amplitude machinery needs from a wavefunction family.
///
/// Symbols are 1-based. `crossing(hi, lo)` with `hi > lo` is the factor
/// `-e^{iθ_{hi,lo}}` picked up whenever `hi` stands to the left of `lo`.
pub trait Model: Sync {
    fn m(&self) -> usize;

    fn crossing(&self, hi: usize, lo: usize) -> C64;

    /// Single-particle amplitude of symbol `j` at absolute site `x`.
    fn orbital(&self, j: usize, x: usize) -> C64;

    /// Lattice size when the data pins one (generalized data does).
    fn lattice(&self) -> Option<usize> {
        None
    }

    fn real_scattering(&self) -> bool;

    fn as_bethe(&self) -> Option<&BetheData> {
        None
    }
}

fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

fn check_pairs<T>(m: usize, theta: &BTreeMap<(usize, usize), T>) -> Result<()> {
    if theta.len() != pair_count(m) {
        return Err(BetheError::InvalidData(format!(
            "expected {} scattering angles for M={m}, got {}",
            pair_count(m),
            theta.len()
        )));
    }
    for &(j2, j1) in theta.keys() {
        if !(1 <= j1 && j1 < j2 && j2 <= m) {
            return Err(BetheError::InvalidData(format!(
                "angle key ({j2},{j1}) is not an ordered pair j2 > j1 within 1..={m}"
            )));
        }
    }
    Ok(())
}

fn crossing_table(m: usize, f: impl Fn(usize, usize) -> C64) -> Vec<C64> {
    let mut table = vec![C64::new(1.0, 0.0); m * m];
    for hi in 1..=m {
        for lo in 1..hi {
            table[(hi - 1) * m + (lo - 1)] = f(hi, lo);
        }
    }
    table
}

/// Quasi-momenta `k_1..k_M` and real scattering angles `θ_{j2 j1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetheData {
    k: Vec<f64>,
    theta: BTreeMap<(usize, usize), f64>,
    cross: Vec<C64>,
}

impl BetheData {
    pub fn new(k: Vec<f64>, theta: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let m = k.len();
        check_pairs(m, &theta)?;
        if k.iter().chain(theta.values()).any(|v| !v.is_finite()) {
            return Err(BetheError::InvalidData("non-finite parameter".into()));
        }
        let cross = crossing_table(m, |hi, lo| -C64::from_polar(1.0, theta[&(hi, lo)]));
        Ok(BetheData { k, theta, cross })
    }

    /// Builds the angle map from `f(j2, j1)`.
    pub fn from_fn(k: Vec<f64>, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let m = k.len();
        let mut theta = BTreeMap::new();
        for j2 in 1..=m {
            for j1 in 1..j2 {
                theta.insert((j2, j1), f(j2, j1));
            }
        }
        Self::new(k, theta)
    }

    pub fn vacuum() -> Self {
        Self::new(Vec::new(), BTreeMap::new()).unwrap()
    }

    /// Uniform draws of every `k_j` and `θ_{j2 j1}` from `[0, 2π)`.
    pub fn random<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Self {
        let k: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..TAU)).collect();
        let mut theta = BTreeMap::new();
        for j2 in 1..=m {
            for j1 in 1..j2 {
                theta.insert((j2, j1), rng.gen_range(0.0..TAU));
            }
        }
        Self::new(k, theta).unwrap()
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn theta_map(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.theta
    }

    pub fn theta(&self, j2: usize, j1: usize) -> f64 {
        self.theta[&(j2, j1)]
    }

    /// `e^{i k_j}`.
    pub fn phase(&self, j: usize) -> C64 {
        C64::from_polar(1.0, self.k[j - 1])
    }
}

impl Model for BetheData {
    fn m(&self) -> usize {
        self.k.len()
    }

    fn crossing(&self, hi: usize, lo: usize) -> C64 {
        self.cross[(hi - 1) * self.k.len() + (lo - 1)]
    }

    fn orbital(&self, j: usize, x: usize) -> C64 {
        C64::from_polar(1.0, self.k[j - 1] * x as f64)
    }

    fn real_scattering(&self) -> bool {
        true
    }

    fn as_bethe(&self) -> Option<&BetheData> {
        Some(self)
    }
}

/// Arbitrary single-particle rows `φ_{jx}` on a fixed lattice and complex
/// scattering factors `-e^{iθ}`, stored as given.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedBetheData {
    n: usize,
    phi: Vec<Vec<C64>>,
    scattering: BTreeMap<(usize, usize), C64>,
    cross: Vec<C64>,
}

impl GeneralizedBetheData {
    pub fn new(
        n: usize,
        phi: Vec<Vec<C64>>,
        scattering: BTreeMap<(usize, usize), C64>,
    ) -> Result<Self> {
        let m = phi.len();
        check_pairs(m, &scattering)?;
        if let Some(row) = phi.iter().position(|r| r.len() != n) {
            return Err(BetheError::InvalidData(format!(
                "phi row {} has {} columns, expected N={n}",
                row + 1,
                phi[row].len()
            )));
        }
        if m > n {
            return Err(BetheError::InvalidData(format!("M={m} exceeds N={n}")));
        }
        let cross = crossing_table(m, |hi, lo| scattering[&(hi, lo)]);
        Ok(GeneralizedBetheData {
            n,
            phi,
            scattering,
            cross,
        })
    }

    /// Plane-wave rows `φ_{jx} = e^{i k_j x}` with the same angles.
    pub fn from_bethe(data: &BetheData, n: usize) -> Result<Self> {
        let phi = (1..=data.m())
            .map(|j| (1..=n).map(|x| data.orbital(j, x)).collect())
            .collect();
        let scattering = data
            .theta
            .iter()
            .map(|(&key, &t)| (key, -C64::from_polar(1.0, t)))
            .collect();
        Self::new(n, phi, scattering)
    }

    /// Entries of `φ` uniform in the unit square, angles with real part in
    /// `[0, 2π)` and imaginary part in `[-0.5, 0.5]`.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        let phi = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            })
            .collect();
        let mut scattering = BTreeMap::new();
        for j2 in 1..=m {
            for j1 in 1..j2 {
                let theta = C64::new(rng.gen_range(0.0..TAU), rng.gen_range(-0.5..0.5));
                scattering.insert((j2, j1), -(C64::i() * theta).exp());
            }
        }
        Self::new(n, phi, scattering).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phi(&self) -> &[Vec<C64>] {
        &self.phi
    }

    /// Factors `-e^{iθ_{j2 j1}}` keyed by `(j2, j1)`.
    pub fn scattering(&self) -> &BTreeMap<(usize, usize), C64> {
        &self.scattering
    }
}

impl Model for GeneralizedBetheData {
    fn m(&self) -> usize {
        self.phi.len()
    }

    fn crossing(&self, hi: usize, lo: usize) -> C64 {
        self.cross[(hi - 1) * self.phi.len() + (lo - 1)]
    }

    fn orbital(&self, j: usize, x: usize) -> C64 {
        self.phi[j - 1][x - 1]
    }

    fn lattice(&self) -> Option<usize> {
        Some(self.n)
    }

    fn real_scattering(&self) -> bool {
        self.scattering
            .values()
            .all(|s| (s.norm() - 1.0).abs() <= 1e-12)
    }
}

/// Either kind of data, as read from a config file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyData {
    Bethe(BetheData),
    Generalized(GeneralizedBetheData),
}

impl Model for AnyData {
    fn m(&self) -> usize {
        match self {
            AnyData::Bethe(d) => d.m(),
            AnyData::Generalized(d) => d.m(),
        }
    }

    fn crossing(&self, hi: usize, lo: usize) -> C64 {
        match self {
            AnyData::Bethe(d) => d.crossing(hi, lo),
            AnyData::Generalized(d) => d.crossing(hi, lo),
        }
    }

    fn orbital(&self, j: usize, x: usize) -> C64 {
        match self {
            AnyData::Bethe(d) => d.orbital(j, x),
            AnyData::Generalized(d) => d.orbital(j, x),
        }
    }

    fn lattice(&self) -> Option<usize> {
        match self {
            AnyData::Bethe(_) => None,
            AnyData::Generalized(d) => d.lattice(),
        }
    }

    fn real_scattering(&self) -> bool {
        match self {
            AnyData::Bethe(_) => true,
            AnyData::Generalized(d) => d.real_scattering(),
        }
    }

    fn as_bethe(&self) -> Option<&BetheData> {
        match self {
            AnyData::Bethe(d) => Some(d),
            AnyData::Generalized(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn angle_count_enforced() {
        let mut theta = BTreeMap::new();
        theta.insert((2, 1), 0.5);
        assert!(BetheData::new(vec![0.1, 0.2, 0.3], theta.clone()).is_err());
        assert!(BetheData::new(vec![0.1, 0.2], theta).is_ok());
        let mut bad = BTreeMap::new();
        bad.insert((1, 2), 0.5);
        assert!(BetheData::new(vec![0.1, 0.2], bad).is_err());
    }

    #[test]
    fn crossing_is_minus_phase() {
        let d =
            BetheData::from_fn(vec![0.0, 0.0, 0.0], |j2, j1| (j2 * 10 + j1) as f64 * 0.01).unwrap();
        let c = d.crossing(3, 1);
        assert!((c + C64::from_polar(1.0, 0.31)).norm() < 1e-15);
    }

    #[test]
    fn generalized_from_bethe_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = BetheData::random(3, &mut rng);
        let g = GeneralizedBetheData::from_bethe(&d, 5).unwrap();
        for j in 1..=3 {
            for x in 1..=5 {
                assert!((g.orbital(j, x) - d.orbital(j, x)).norm() < 1e-15);
            }
        }
        assert!((g.crossing(2, 1) - d.crossing(2, 1)).norm() < 1e-15);
        assert!(g.real_scattering());
    }

    #[test]
    fn phi_shape_enforced() {
        let phi = vec![vec![C64::new(1.0, 0.0); 3]];
        assert!(GeneralizedBetheData::new(4, phi, BTreeMap::new()).is_err());
    }
}
