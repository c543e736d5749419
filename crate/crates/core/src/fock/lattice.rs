use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical definition of a disordered open chain.
///
/// Energies are in units of |J| with ħ = 1. `disorder_bound` is the upper end
/// of the interval the on-site energies were drawn from; it is carried along
/// for the codecs and is not checked against `energies`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    energies: Vec<f64>,
    hopping: f64,
    interaction: f64,
    disorder_bound: f64,
}

impl LatticeSpec {
    pub fn new(
        energies: Vec<f64>,
        hopping: f64,
        interaction: f64,
        disorder_bound: f64,
    ) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::NoSites);
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("on-site energies"));
        }
        if !hopping.is_finite() || hopping > 0.0 {
            return Err(Error::InvalidLattice(format!(
                "hopping must be finite and <= 0, got {hopping}"
            )));
        }
        if !interaction.is_finite() || interaction < 0.0 {
            return Err(Error::InvalidLattice(format!(
                "interaction must be finite and >= 0, got {interaction}"
            )));
        }
        if !disorder_bound.is_finite() || disorder_bound < 0.0 {
            return Err(Error::InvalidLattice(format!(
                "disorder bound must be finite and >= 0, got {disorder_bound}"
            )));
        }
        Ok(Self {
            energies,
            hopping,
            interaction,
            disorder_bound,
        })
    }

    /// Clean chain (all on-site energies zero) with J = -1.
    pub fn clean(sites: usize, interaction: f64) -> Result<Self> {
        Self::new(vec![0.0; sites], -1.0, interaction, 0.0)
    }

    pub fn sites(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn interaction(&self) -> f64 {
        self.interaction
    }

    pub fn disorder_bound(&self) -> f64 {
        self.disorder_bound
    }

    /// The M×M one-body Hamiltonian: energies on the diagonal and J on the
    /// first off-diagonals (open boundaries).
    pub fn single_particle_matrix(&self) -> DMatrix<f64> {
        let m = self.sites();
        DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.energies[i]
            } else if i.abs_diff(j) == 1 {
                self.hopping
            } else {
                0.0
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(LatticeSpec::new(vec![], -1.0, 0.0, 3.0), Err(Error::NoSites)));
        assert!(LatticeSpec::new(vec![0.0], 0.5, 0.0, 3.0).is_err());
        assert!(LatticeSpec::new(vec![0.0], -1.0, -1.0, 3.0).is_err());
        assert!(LatticeSpec::new(vec![f64::NAN], -1.0, 0.0, 3.0).is_err());
        assert!(LatticeSpec::new(vec![0.0], -1.0, 0.0, -3.0).is_err());
    }

    #[test]
    fn one_body_matrix_has_open_edges() {
        let spec = LatticeSpec::new(vec![0.5, 1.0, 1.5, 2.0], -1.0, 0.0, 3.0).unwrap();
        let h = spec.single_particle_matrix();
        assert_eq!(h[(0, 3)], 0.0);
        assert_eq!(h[(3, 0)], 0.0);
        assert_eq!(h[(1, 2)], -1.0);
        assert_eq!(h[(2, 2)], 1.5);
        assert_eq!(h, h.transpose());
    }
}
