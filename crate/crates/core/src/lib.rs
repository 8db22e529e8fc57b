//! Exact tensor-network and circuit representations of Bethe wavefunctions.
//!
//! An `M`-particle Bethe wavefunction on an `N`-site chain is a permutation sum
//! of plane waves weighted by factorized two-body scattering phases. Restricted
//! to any contiguous part of the chain it lives in the span of at most `2^M`
//! local Bethe wavefunctions, one per *choice* of quasi-momenta. This crate
//! builds those local pieces, glues them into matrix product states and tree
//! tensor networks with bond dimension at most `2^M`, contracts norms and
//! overlaps, and compiles the homogeneous binary tree into a log-depth circuit
//! of two-qudit unitaries.
//!
//! Every representation can be checked against [`dense`], which evaluates the
//! defining permutation sum directly.
//!
//! ```
//! use bethe_tn::prelude::*;
//!
//! let data = BetheData::from_fn(vec![0.3, 1.1], |_, _| 0.7).unwrap();
//! let oracle = build_dense_bethe(&data, 6).unwrap();
//! let mps = build_mps(&data, &LatticePartition::uniform(6, 1).unwrap(), false).unwrap();
//! let dense = contract_to_dense(&mps).unwrap();
//! assert!(dense.rel_error(&oracle).unwrap() < 1e-12);
//! ```

pub mod amplitude;
pub mod choice;
pub mod circuit;
pub mod combinatorics;
pub mod data;
pub mod decomposition;
pub mod dense;
pub mod error;
pub mod io;
pub mod network;
pub mod overlap;
pub mod partition;
pub mod permutation;
pub mod tensors;

pub use num_complex::Complex64 as C64;

pub mod prelude {
    pub use crate::amplitude::{
        factorize_permutation, omega_shift, theta_multi, theta_of_permutation, theta_pair,
    };
    pub use crate::choice::{all_choices, Choice};
    pub use crate::circuit::{
        canonicalize, compile_circuit, embed_isometry, simulate_statevector, verify_preparation,
        Orientation, QuantumCircuit, Wiring,
    };
    pub use crate::data::{AnyData, BetheData, GeneralizedBetheData, Model};
    pub use crate::decomposition::{
        bipartite_decompose, contiguous_decompose, multipartite_decompose, reconstruct,
        reconstruct_contiguous,
    };
    pub use crate::dense::{
        build_dense, build_dense_bethe, build_dense_generalized, build_local_bethe, inner_product,
        schmidt_rank, DenseState,
    };
    pub use crate::error::{BetheError, Result};
    pub use crate::network::{
        build_binary_ttn, build_mps, build_planar_ttn, contract_to_dense, PlanarTree, TensorNetwork,
    };
    pub use crate::overlap::{
        fidelity, homogeneous_mps_overlap, homogeneous_ttn_overlap, mps_overlap, ttn_overlap,
    };
    pub use crate::partition::{LatticePartition, RingPartition};
    pub use crate::permutation::Permutation;
    pub use crate::tensors::{
        build_r, build_s, build_s_tilde, build_t, build_t_qary, build_t_tilde,
    };
    pub use crate::C64;
}
