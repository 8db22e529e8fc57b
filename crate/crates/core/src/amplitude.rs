//! Scattering amplitudes `Θ` and shift phases `Ω`.

use crate::choice::Choice;
use crate::data::{BetheData, Model};
use crate::error::{BetheError, Result};
use crate::permutation::Permutation;
use crate::C64;

const ONE: C64 = C64::new(1.0, 0.0);

/// `Θ` of an arbitrary sequence of distinct symbols: one crossing factor per
/// inverted pair.
pub fn theta_of_sequence<D: Model + ?Sized>(data: &D, seq: &[usize]) -> C64 {
    let mut acc = ONE;
    for (i, &p) in seq.iter().enumerate() {
        for &q in &seq[i + 1..] {
            if p > q {
                acc *= data.crossing(p, q);
            }
        }
    }
    acc
}

pub fn theta_of_permutation<D: Model + ?Sized>(data: &D, p: &Permutation) -> Result<C64> {
    if p.len() != data.m() {
        return Err(BetheError::Dimension(format!(
            "permutation of {} symbols for M={}",
            p.len(),
            data.m()
        )));
    }
    Ok(theta_of_sequence(data, p.image()))
}

/// `Θ[a, b]`: a crossing factor for every `a_α > b_β`.
pub fn theta_pair<D: Model + ?Sized>(data: &D, a: Choice, b: Choice) -> Result<C64> {
    if !a.is_disjoint(b) {
        return Err(BetheError::Overlap(a, b));
    }
    Ok(theta_pair_unchecked(data, a, b))
}

pub(crate) fn theta_pair_unchecked<D: Model + ?Sized>(data: &D, a: Choice, b: Choice) -> C64 {
    let mut acc = ONE;
    for hi in a.symbols() {
        for lo in b.symbols() {
            if lo >= hi {
                break;
            }
            acc *= data.crossing(hi, lo);
        }
    }
    acc
}

/// `Θ_L[a_1, ..., a_L] = Π_{l1<l2} Θ[a_{l1}, a_{l2}]`.
pub fn theta_multi<D: Model + ?Sized>(data: &D, parts: &[Choice]) -> Result<C64> {
    let mut acc = ONE;
    for (i, &a) in parts.iter().enumerate() {
        for &b in &parts[i + 1..] {
            acc *= theta_pair(data, a, b)?;
        }
    }
    Ok(acc)
}

/// `P = R S Q^{a,b}` split at `m_a`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factorization {
    /// Local permutation of `a` producing the prefix of `P`.
    pub r: Permutation,
    /// Local permutation of `b` producing the suffix of `P`.
    pub s: Permutation,
    pub a: Choice,
    pub b: Choice,
}

pub fn factorize_permutation(p: &Permutation, m_a: usize) -> Result<Factorization> {
    if m_a > p.len() {
        return Err(BetheError::Dimension(format!(
            "split {m_a} beyond {} symbols",
            p.len()
        )));
    }
    let (head, tail) = p.image().split_at(m_a);
    let a = Choice::from_symbols(head)?;
    let b = Choice::from_symbols(tail)?;
    let local = |part: &[usize], c: Choice| {
        let sorted = c.to_vec();
        let image = part
            .iter()
            .map(|s| sorted.iter().position(|t| t == s).unwrap() + 1)
            .collect();
        Permutation::new(image)
    };
    Ok(Factorization {
        r: local(head, a)?,
        s: local(tail, b)?,
        a,
        b,
    })
}

/// Inverse of [`factorize_permutation`].
pub fn recompose(f: &Factorization) -> Result<Permutation> {
    let a = f.a.to_vec();
    let b = f.b.to_vec();
    if f.r.len() != a.len() || f.s.len() != b.len() {
        return Err(BetheError::Dimension(
            "factor sizes disagree with choices".into(),
        ));
    }
    let image =
        f.r.image()
            .iter()
            .map(|&i| a[i - 1])
            .chain(f.s.image().iter().map(|&i| b[i - 1]))
            .collect();
    Permutation::new(image)
}

/// `Θ^c[R]`: the amplitude of the local permutation `R` acting on the symbols
/// of `c`.
pub fn theta_local<D: Model + ?Sized>(data: &D, c: Choice, r: &Permutation) -> Result<C64> {
    let sym = c.to_vec();
    if r.len() != sym.len() {
        return Err(BetheError::Dimension(format!(
            "local permutation of {} symbols for choice {c}",
            r.len()
        )));
    }
    let seq: Vec<usize> = r.image().iter().map(|&i| sym[i - 1]).collect();
    Ok(theta_of_sequence(data, &seq))
}

/// `Ω_A(b) = (Π_{j∈b} e^{i k_j})^{N_A}`.
pub fn omega_shift(data: &BetheData, b: Choice, n_a: usize) -> C64 {
    let phase: f64 = b.symbols().map(|j| data.k()[j - 1]).sum();
    C64::from_polar(1.0, phase * n_a as f64)
}

/// Amplitude of the local wavefunction for choice `c` at sorted absolute
/// positions, summed over placements of the symbols by a subset recursion.
pub fn local_amplitude<D: Model + ?Sized>(data: &D, c: Choice, positions: &[usize]) -> C64 {
    let sym = c.to_vec();
    let m = sym.len();
    debug_assert_eq!(m, positions.len());
    if m == 0 {
        return ONE;
    }
    let mut orb = vec![C64::default(); m * m];
    for (s, &j) in sym.iter().enumerate() {
        for (t, &x) in positions.iter().enumerate() {
            orb[s * m + t] = data.orbital(j, x);
        }
    }
    let full = (1usize << m) - 1;
    let mut dp = vec![C64::default(); 1 << m];
    dp[0] = ONE;
    for used in 0..full {
        let v = dp[used];
        if v == C64::default() {
            continue;
        }
        let t = used.count_ones() as usize;
        for s in 0..m {
            if used & (1 << s) != 0 {
                continue;
            }
            let mut w = v * orb[s * m + t];
            // placed symbols larger than s now stand to its left
            let mut above = used >> (s + 1);
            let mut u = s + 1;
            while above != 0 {
                if above & 1 != 0 {
                    w *= data.crossing(sym[u], sym[s]);
                }
                above >>= 1;
                u += 1;
            }
            dp[used | (1 << s)] += w;
        }
    }
    dp[full]
}
