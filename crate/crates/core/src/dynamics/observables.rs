use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::WaveFunction;
use crate::fock::FockBasis;
use crate::{Error, Result, C64};

/// Matrix representation of the annihilation operators a_m, mapping the
/// N-particle basis onto the (N-1)-particle basis.
#[derive(Debug, Clone)]
pub struct Annihilator {
    from: Arc<FockBasis>,
    to: Arc<FockBasis>,
    table: Vec<Option<usize>>,
}

impl Annihilator {
    /// Fails for a zero-particle basis, which has no lower sector.
    pub fn new(from: &Arc<FockBasis>) -> Result<Self> {
        let particles = from.particles();
        if particles == 0 {
            return Err(Error::DimensionMismatch(
                "cannot annihilate a particle from the vacuum sector".into(),
            ));
        }
        let to = Arc::new(FockBasis::with_cap(
            from.sites(),
            particles - 1,
            from.dimension().max(1),
        )?);
        let table = from.lowering_table(&to);
        Ok(Self {
            from: Arc::clone(from),
            to,
            table,
        })
    }

    pub fn source(&self) -> &Arc<FockBasis> {
        &self.from
    }

    pub fn target(&self) -> &Arc<FockBasis> {
        &self.to
    }

    /// out = a_site · input, where `input` is over the source basis and
    /// `out` over the target basis.
    pub fn apply_into(&self, site: usize, input: &[C64], out: &mut [C64]) {
        let sites = self.from.sites();
        debug_assert_eq!(input.len(), self.from.dimension());
        debug_assert_eq!(out.len(), self.to.dimension());
        out.fill(C64::new(0.0, 0.0));
        for (k, amplitude) in input.iter().enumerate() {
            if let Some(j) = self.table[k * sites + site] {
                let n = self.from.state(k)[site] as f64;
                out[j] = amplitude * n.sqrt();
            }
        }
    }
}

/// Evaluates γ_{q,r} = ‖a_q a_r ψ‖² for states of one basis.
#[derive(Debug, Clone)]
pub struct PairCorrelator {
    basis: Arc<FockBasis>,
    ladder: Option<(Annihilator, Annihilator)>,
}

impl PairCorrelator {
    pub fn new(basis: &Arc<FockBasis>) -> Result<Self> {
        let ladder = if basis.particles() >= 2 {
            let upper = Annihilator::new(basis)?;
            let lower = Annihilator::new(upper.target())?;
            Some((upper, lower))
        } else {
            None
        };
        Ok(Self {
            basis: Arc::clone(basis),
            ladder,
        })
    }

    pub fn correlation(&self, psi: &WaveFunction) -> Result<CorrelationMatrix> {
        if psi.basis().as_ref() != self.basis.as_ref() {
            return Err(Error::DimensionMismatch(
                "wavefunction basis differs from the correlator basis".into(),
            ));
        }
        let sites = self.basis.sites();
        let mut gamma = DMatrix::zeros(sites, sites);
        if let Some((upper, lower)) = &self.ladder {
            let mut once = vec![C64::new(0.0, 0.0); upper.target().dimension()];
            let mut twice = vec![C64::new(0.0, 0.0); lower.target().dimension()];
            for r in 0..sites {
                upper.apply_into(r, psi.amplitudes().as_slice(), &mut once);
                for q in 0..sites {
                    lower.apply_into(q, &once, &mut twice);
                    gamma[(q, r)] = twice.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
            }
        }
        Ok(CorrelationMatrix { values: gamma })
    }
}

/// Two-particle correlation γ_{q,r} = ⟨a†_q a†_r a_q a_r⟩.
///
/// Entries sum to N(N-1) for a normalised N-particle state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    values: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Validates a square, finite, non-negative matrix.
    pub fn from_values(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != values.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "correlation matrix must be square, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("correlation matrix"));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::Distribution("negative correlation entry".into()));
        }
        Ok(Self { values })
    }

    pub fn sites(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, q: usize, r: usize) -> f64 {
        self.values[(q, r)]
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// Entries divided by their sum, as a joint distribution P(q, r).
    pub fn normalized(&self) -> DMatrix<f64> {
        let total = self.total();
        if total > 0.0 {
            &self.values / total
        } else {
            self.values.clone()
        }
    }

    /// Σ_q γ_{q,q}: weight of doubly-occupied outcomes.
    pub fn bunching(&self) -> f64 {
        self.values.diagonal().sum()
    }
}

/// Site densities ⟨n_m⟩.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    values: DVector<f64>,
}

impl DensityVector {
    pub fn from_values(values: DVector<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.sum()
    }

    /// (Σ⟨n⟩)² / Σ⟨n⟩²: effective number of occupied sites.
    pub fn participation_ratio(&self) -> f64 {
        participation_ratio(self.values.as_slice())
    }
}

pub(crate) fn participation_ratio(values: &[f64]) -> f64 {
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    if sum_sq == 0.0 {
        0.0
    } else {
        sum * sum / sum_sq
    }
}

/// γ for `psi`, building the annihilation tables on the fly. Use a
/// [`PairCorrelator`] when evaluating many states of one basis.
pub fn correlation(psi: &WaveFunction) -> Result<CorrelationMatrix> {
    PairCorrelator::new(psi.basis())?.correlation(psi)
}

/// ⟨n_m⟩ = Σ_s |ψ_s|² s[m].
pub fn density(psi: &WaveFunction) -> DensityVector {
    let basis = psi.basis();
    let mut values = DVector::zeros(basis.sites());
    for (state, p) in basis.states().zip(psi.probabilities()) {
        for (m, &n) in state.iter().enumerate() {
            values[m] += p * n as f64;
        }
    }
    DensityVector { values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Hamiltonian, LatticeSpec};
    use proptest::prelude::*;

    fn basis(m: usize, n: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(m, n).unwrap())
    }

    /// γ from occupation weights: Σ_s |ψ_s|² s[q] (s[r] - δ_qr).
    fn weight_oracle(psi: &WaveFunction) -> DMatrix<f64> {
        let b = psi.basis();
        let m = b.sites();
        let mut g = DMatrix::zeros(m, m);
        for (s, p) in b.states().zip(psi.probabilities()) {
            for q in 0..m {
                for r in 0..m {
                    let nq = s[q] as f64;
                    let nr = s[r] as f64 - if q == r { 1.0 } else { 0.0 };
                    g[(q, r)] += p * nq * nr;
                }
            }
        }
        g
    }

    fn random_state(basis: &Arc<FockBasis>, seed: &[f64]) -> WaveFunction {
        let d = basis.dimension();
        let amps = DVector::from_fn(d, |k, _| {
            C64::new(seed[(2 * k) % seed.len()] - 0.5, seed[(2 * k + 1) % seed.len()] - 0.5)
        });
        WaveFunction::normalized(basis, amps).unwrap()
    }

    #[test]
    fn one_boson_per_site() {
        let psi = WaveFunction::basis_state(&basis(2, 2), &[1, 1]).unwrap();
        let g = correlation(&psi).unwrap();
        assert_eq!(g.values(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert_eq!(density(&psi).values().as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn doubly_occupied_site() {
        let psi = WaveFunction::basis_state(&basis(2, 2), &[2, 0]).unwrap();
        let g = correlation(&psi).unwrap();
        assert!((g.get(0, 0) - 2.0).abs() < 1e-15);
        assert_eq!(g.get(0, 1) + g.get(1, 0) + g.get(1, 1), 0.0);
        assert_eq!(density(&psi).values().as_slice(), &[2.0, 0.0]);
    }

    #[test]
    fn single_particle_has_no_pairs() {
        let psi = WaveFunction::basis_state(&basis(3, 1), &[0, 1, 0]).unwrap();
        assert_eq!(correlation(&psi).unwrap().total(), 0.0);
    }

    #[test]
    fn evolved_state_matches_weight_oracle() {
        let spec = LatticeSpec::new(vec![0.3, 2.1, 1.0, 0.2, 2.7, 1.9], -1.0, 3.0, 3.0).unwrap();
        for n in 2..=3 {
            let b = basis(6, n);
            let h = Hamiltonian::build(&spec, &b).unwrap();
            let u = crate::dynamics::build_unitary(&h, 2.0).unwrap();
            let mut occ = vec![0u8; 6];
            occ[2] = 1;
            occ[3] = (n - 1) as u8;
            let psi = u.propagate(&WaveFunction::basis_state(&b, &occ).unwrap()).unwrap();
            let g = correlation(&psi).unwrap();
            assert!((g.values() - weight_oracle(&psi)).amax() < 1e-13);
            assert!((g.total() - (n * (n - 1)) as f64).abs() < 1e-10);
            assert!((density(&psi).total() - n as f64).abs() < 1e-10);
        }
    }

    #[test]
    fn participation_ratio_limits() {
        let flat = DensityVector::from_values(DVector::from_element(10, 0.2));
        assert!((flat.participation_ratio() - 10.0).abs() < 1e-12);
        let mut peaked = DVector::zeros(10);
        peaked[4] = 2.0;
        assert_eq!(DensityVector::from_values(peaked).participation_ratio(), 1.0);
    }

    #[test]
    fn rejects_bad_correlation_values() {
        assert!(CorrelationMatrix::from_values(DMatrix::zeros(2, 3)).is_err());
        assert!(CorrelationMatrix::from_values(DMatrix::from_element(2, 2, -1.0)).is_err());
        assert!(CorrelationMatrix::from_values(DMatrix::from_element(2, 2, f64::NAN)).is_err());
    }

    proptest! {
        #[test]
        fn pair_sum_is_n_times_n_minus_one(seed in prop::collection::vec(0.0f64..1.0, 16), n in 2usize..=3) {
            let b = basis(5, n);
            let psi = random_state(&b, &seed);
            let g = correlation(&psi).unwrap();
            prop_assert!((g.total() - (n * (n - 1)) as f64).abs() < 1e-10);
            prop_assert!((g.values() - g.values().transpose()).amax() < 1e-12);
            prop_assert!(g.values().iter().all(|&v| v >= 0.0));
            prop_assert!((density(&psi).total() - n as f64).abs() < 1e-10);
        }
    }
}
