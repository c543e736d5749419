//! Exact time evolution and observables.
//!
//! Propagation goes through the eigendecomposition of the real symmetric
//! Hamiltonian, U(t) = V diag(e^{-iλt}) Vᵀ, so one diagonalisation serves
//! every time and every initial state of a disorder realization.

mod observables;
mod oracle;
mod propagator;
mod wavefunction;

pub use observables::{
    correlation, density, Annihilator, CorrelationMatrix, DensityVector, PairCorrelator,
};
pub use oracle::noninteracting_correlation;
pub use propagator::{build_unitary, Propagator, Spectrum};
pub use wavefunction::WaveFunction;

/// Propagation time used throughout the training corpora.
pub const DEFAULT_TIME: f64 = 2.0;

/// Norm and unitarity tolerance.
pub const UNITARY_TOLERANCE: f64 = 1e-10;
