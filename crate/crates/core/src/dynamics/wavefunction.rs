use std::sync::Arc;

use nalgebra::DVector;

use crate::fock::FockBasis;
use crate::{Error, Result, C64};

/// Normalised state vector over a Fock basis.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    basis: Arc<FockBasis>,
    amplitudes: DVector<C64>,
}

impl WaveFunction {
    /// The Fock state with the given per-site occupation (amplitude one on
    /// the matching basis vector).
    pub fn basis_state(basis: &Arc<FockBasis>, occupation: &[u8]) -> Result<Self> {
        let not_in_basis = || Error::NotInBasis {
            occupation: occupation.to_vec(),
            sites: basis.sites(),
            particles: basis.particles(),
        };
        if occupation.len() != basis.sites() {
            return Err(not_in_basis());
        }
        let k = basis.index_of(occupation).ok_or_else(not_in_basis)?;
        let mut amplitudes = DVector::zeros(basis.dimension());
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(Self {
            basis: Arc::clone(basis),
            amplitudes,
        })
    }

    /// Wraps `amplitudes`, rescaling them to unit norm.
    pub fn normalized(basis: &Arc<FockBasis>, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NonFinite("wavefunction norm"));
        }
        Ok(Self {
            basis: Arc::clone(basis),
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub(crate) fn from_parts(basis: Arc<FockBasis>, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dimension());
        Self { basis, amplitudes }
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// |ψ_k|² for every basis state.
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.amplitudes.iter().map(|a| a.norm_sqr())
    }

    /// ⟨ψ|A|ψ⟩ for a real symmetric operator A over the same basis.
    pub fn expectation(&self, operator: &nalgebra::DMatrix<f64>) -> f64 {
        let psi = &self.amplitudes;
        let mut acc = 0.0;
        for j in 0..psi.len() {
            let mut row = C64::new(0.0, 0.0);
            for i in 0..psi.len() {
                row += psi[i].conj() * operator[(i, j)];
            }
            acc += (row * psi[j]).re;
        }
        acc
    }
}
