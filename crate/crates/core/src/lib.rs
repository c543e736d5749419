//! Exact simulation of correlated few-boson quantum walks on disordered
//! one-dimensional lattices.
//!
//! The crate is organised as a pipeline:
//!
//! * [`fock`]: occupation-number basis enumeration and Bose-Hubbard
//!   Hamiltonian assembly.
//! * [`dynamics`]: exact propagation through the eigendecomposition of the
//!   Hamiltonian, observables (pair correlations and densities) and the
//!   single-particle interference oracle for the non-interacting case.
//! * [`ensemble`]: reproducible disorder sampling and parallel, worker-count
//!   independent disorder averages.
//! * [`codec`]: 8-bit image encodings of (on-site energies, observable) pairs
//!   and the PNG corpus writer.
//! * [`eval`]: verification of claimed-physical samples by re-simulation,
//!   KL divergence and unitary fidelity.
//!
//! Sites are indexed from zero throughout. Energies are in units of the
//! hopping magnitude and ħ = 1.

pub mod codec;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod fock;
pub mod grid;
mod parallel;

pub use error::{Error, Result};

/// Complex scalar used for amplitudes and propagators.
pub type C64 = num_complex::Complex64;
