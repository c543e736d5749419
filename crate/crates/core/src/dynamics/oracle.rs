use nalgebra::{DMatrix, SymmetricEigen};

use super::CorrelationMatrix;
use crate::fock::LatticeSpec;
use crate::{Error, Result, C64};

/// Two-boson correlation for Γ = 0 from single-particle interference alone.
///
/// With u = e^{-iht} the one-body propagator and the particles starting on
/// sites `starts = (s1, s2)`:
///
/// γ_{q,r} = |u_{q,s1} u_{r,s2} + u_{q,s2} u_{r,s1}|² / (1 + δ_{s1,s2})
///
/// This never touches the two-body basis, so it is an independent check on
/// the Fock-space pipeline.
pub fn noninteracting_correlation(
    spec: &LatticeSpec,
    starts: (usize, usize),
    time: f64,
) -> Result<CorrelationMatrix> {
    if spec.interaction() != 0.0 {
        return Err(Error::Interacting(spec.interaction()));
    }
    let sites = spec.sites();
    let (s1, s2) = starts;
    if s1 >= sites || s2 >= sites {
        return Err(Error::DimensionMismatch(format!(
            "start sites {starts:?} outside a {sites}-site lattice"
        )));
    }
    if !time.is_finite() {
        return Err(Error::NonFinite("propagation time"));
    }

    let h = spec.single_particle_matrix();
    let eigen = SymmetricEigen::try_new(h, f64::EPSILON, 1000 * sites).ok_or_else(|| {
        Error::Numerical {
            reason: "one-body diagonalisation did not converge".into(),
            energies: spec.energies().to_vec(),
            hopping: spec.hopping(),
            interaction: spec.interaction(),
        }
    })?;
    let v = &eigen.eigenvectors;
    let u = DMatrix::from_fn(sites, sites, |i, j| {
        (0..sites)
            .map(|k| v[(i, k)] * v[(j, k)] * C64::from_polar(1.0, -eigen.eigenvalues[k] * time))
            .sum::<C64>()
    });

    let bunched = if s1 == s2 { 2.0 } else { 1.0 };
    let gamma = DMatrix::from_fn(sites, sites, |q, r| {
        let amplitude = u[(q, s1)] * u[(r, s2)] + u[(q, s2)] * u[(r, s1)];
        amplitude.norm_sqr() / bunched
    });
    CorrelationMatrix::from_values(gamma)
}
