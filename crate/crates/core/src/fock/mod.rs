//! Occupation-number basis and Bose-Hubbard Hamiltonian.

mod basis;
mod hamiltonian;
mod lattice;

pub use basis::{FockBasis, DEFAULT_DIMENSION_CAP};
pub use hamiltonian::Hamiltonian;
pub use lattice::LatticeSpec;

use crate::Result;
use std::sync::Arc;

/// Enumerates every arrangement of `particles` bosons on `sites` sites with
/// the default dimension cap.
pub fn enumerate_fock_basis(sites: usize, particles: usize) -> Result<Arc<FockBasis>> {
    FockBasis::new(sites, particles).map(Arc::new)
}

/// Assembles the Hamiltonian of `spec` over `basis`.
pub fn build_hamiltonian(spec: &LatticeSpec, basis: &Arc<FockBasis>) -> Result<Hamiltonian> {
    Hamiltonian::build(spec, basis)
}
