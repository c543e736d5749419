//! Disorder sampling and disorder-averaged statistics.
//!
//! Realization `i` of a run seeded with `master_seed` draws its on-site
//! energies from a ChaCha8 generator seeded with `master_seed` and switched
//! to stream `i`. Every realization is therefore reproducible on its own and
//! results do not depend on how realizations are scheduled across workers.

use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    CorrelationMatrix, DensityVector, PairCorrelator, Propagator, Spectrum, WaveFunction,
    DEFAULT_TIME,
};
use crate::fock::{FockBasis, Hamiltonian, LatticeSpec};
use crate::parallel::ordered_chunks;
use crate::{grid, Error, Result};

/// Realizations evaluated per parallel batch.
const CHUNK: u64 = 256;

/// On-site energies of realization `index`: `sites` i.i.d. draws from
/// [0, bound).
pub fn sample_disorder(bound: f64, master_seed: u64, index: u64, sites: usize) -> Vec<f64> {
    if bound <= 0.0 {
        return vec![0.0; sites];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    let uniform = Uniform::new(0.0, bound).expect("bound is positive and finite");
    let top = bound.next_down();
    (0..sites).map(|_| uniform.sample(&mut rng).min(top)).collect()
}

/// Everything about a walk except the disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkTemplate {
    pub sites: usize,
    pub particles: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub disorder_bound: f64,
    pub time: f64,
    /// Initial occupation per site; sums to `particles`.
    pub occupation: Vec<u8>,
}

/// The two central sites of an `sites`-site chain (sites 4 and 5 for ten
/// sites, counting from zero).
pub fn centre_pair(sites: usize) -> Vec<u8> {
    let mut occupation = vec![0u8; sites];
    match sites {
        0 => {}
        1 => occupation[0] = 2,
        _ => {
            occupation[sites / 2 - 1] = 1;
            occupation[sites / 2] = 1;
        }
    }
    occupation
}

impl WalkTemplate {
    /// Two bosons on the central pair of a ten-site chain, J = -1,
    /// disorder in [0, 3), t = 2.
    pub fn two_boson(interaction: f64) -> Self {
        Self {
            sites: 10,
            particles: 2,
            hopping: -1.0,
            interaction,
            disorder_bound: 3.0,
            time: DEFAULT_TIME,
            occupation: centre_pair(10),
        }
    }

    pub fn with_disorder_bound(mut self, bound: f64) -> Self {
        self.disorder_bound = bound;
        self
    }

    pub fn with_occupation(mut self, occupation: Vec<u8>) -> Self {
        self.particles = occupation.iter().map(|&n| n as usize).sum();
        self.sites = occupation.len();
        self.occupation = occupation;
        self
    }

    /// The lattice for one disorder realization.
    pub fn lattice(&self, energies: Vec<f64>) -> Result<LatticeSpec> {
        if energies.len() != self.sites {
            return Err(Error::DimensionMismatch(format!(
                "{} energies for a {}-site template",
                energies.len(),
                self.sites
            )));
        }
        LatticeSpec::new(energies, self.hopping, self.interaction, self.disorder_bound)
    }

    fn validate(&self) -> Result<()> {
        if !self.time.is_finite() {
            return Err(Error::NonFinite("propagation time"));
        }
        if self.occupation.len() != self.sites
            || self.occupation.iter().map(|&n| n as usize).sum::<usize>() != self.particles
        {
            return Err(Error::NotInBasis {
                occupation: self.occupation.clone(),
                sites: self.sites,
                particles: self.particles,
            });
        }
        // parameter checks shared with LatticeSpec
        self.lattice(vec![0.0; self.sites]).map(|_| ())
    }
}

/// Observables of one realization at the template's final time.
#[derive(Debug, Clone)]
pub struct Observation {
    pub energies: Vec<f64>,
    pub correlation: CorrelationMatrix,
    pub density: DensityVector,
}

/// Per-template machinery shared by all realizations: the basis, the
/// annihilation tables and the initial state.
#[derive(Debug, Clone)]
pub struct WalkEngine {
    template: WalkTemplate,
    basis: Arc<FockBasis>,
    correlator: PairCorrelator,
    initial: WaveFunction,
}

impl WalkEngine {
    pub fn new(template: WalkTemplate) -> Result<Self> {
        template.validate()?;
        let basis = Arc::new(FockBasis::new(template.sites, template.particles)?);
        let correlator = PairCorrelator::new(&basis)?;
        let initial = WaveFunction::basis_state(&basis, &template.occupation)?;
        Ok(Self {
            template,
            basis,
            correlator,
            initial,
        })
    }

    pub fn template(&self) -> &WalkTemplate {
        &self.template
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn initial_state(&self) -> &WaveFunction {
        &self.initial
    }

    pub fn spectrum(&self, energies: Vec<f64>) -> Result<Spectrum> {
        let spec = self.template.lattice(energies)?;
        Spectrum::new(&Hamiltonian::build(&spec, &self.basis)?)
    }

    pub fn observe(&self, energies: Vec<f64>) -> Result<Observation> {
        let spectrum = self.spectrum(energies.clone())?;
        let psi = spectrum.evolve(&self.initial, self.template.time)?;
        Ok(Observation {
            energies,
            correlation: self.correlator.correlation(&psi)?,
            density: crate::dynamics::density(&psi),
        })
    }

    pub fn unitary(&self, energies: Vec<f64>) -> Result<Propagator> {
        Ok(self.spectrum(energies)?.unitary(self.template.time))
    }

    pub fn sample(&self, master_seed: u64, index: u64) -> Vec<f64> {
        sample_disorder(
            self.template.disorder_bound,
            master_seed,
            index,
            self.template.sites,
        )
    }
}

/// Worker count; `0` means one worker per available core.
pub type Workers = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub realizations: u64,
    pub master_seed: u64,
    pub template: WalkTemplate,
    /// Scheduling only; results do not depend on it, so it is not recorded.
    #[serde(skip)]
    pub workers: Workers,
    /// Also average |U| elementwise.
    #[serde(default)]
    pub unitary_magnitude: bool,
}

impl EnsembleConfig {
    pub fn new(template: WalkTemplate, realizations: u64, master_seed: u64) -> Self {
        Self {
            realizations,
            master_seed,
            template,
            workers: 0,
            unitary_magnitude: false,
        }
    }
}

/// Welford accumulator over a fixed-length vector of values.
#[derive(Debug, Clone)]
struct RunningStats {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningStats {
    fn new(len: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push<'a>(&mut self, values: impl IntoIterator<Item = &'a f64>) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(values) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    /// Population standard deviation.
    fn std(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.m2.iter().map(|m2| (m2 / n).max(0.0).sqrt()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub realizations: u64,
    pub mean_correlation: DMatrix<f64>,
    pub std_correlation: DMatrix<f64>,
    pub mean_density: DVector<f64>,
    pub std_density: DVector<f64>,
    pub mean_abs_unitary: Option<DMatrix<f64>>,
}

impl EnsembleResult {
    pub fn participation_ratio(&self) -> f64 {
        crate::dynamics::DensityVector::from_values(self.mean_density.clone()).participation_ratio()
    }

    /// Writes the averaged grids (see [`crate::grid`]) and a JSON summary
    /// into `dir`.
    pub fn write_dumps(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        grid::write_matrix(&dir.join("mean_correlation.csv"), &self.mean_correlation)?;
        grid::write_matrix(&dir.join("std_correlation.csv"), &self.std_correlation)?;
        grid::write_vector(&dir.join("mean_density.csv"), self.mean_density.as_slice())?;
        grid::write_vector(&dir.join("std_density.csv"), self.std_density.as_slice())?;
        if let Some(u) = &self.mean_abs_unitary {
            grid::write_matrix(&dir.join("mean_abs_unitary.csv"), u)?;
        }
        let path = dir.join("ensemble.json");
        let json = serde_json::to_string_pretty(self).expect("ensemble result serialises");
        std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
    }
}

/// Runs the full sample → Hamiltonian → propagate → observe pipeline for
/// every realization and folds the results in index order.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult> {
    if config.realizations == 0 {
        return Err(Error::InvalidLattice("an ensemble needs at least one realization".into()));
    }
    let engine = WalkEngine::new(config.template.clone())?;
    let sites = engine.template().sites;
    let dim = engine.basis().dimension();

    let mut correlation = RunningStats::new(sites * sites);
    let mut density = RunningStats::new(sites);
    let mut unitary = config.unitary_magnitude.then(|| RunningStats::new(dim * dim));

    let realize = |index: u64| -> Result<(Observation, Option<DMatrix<f64>>)> {
        let energies = engine.sample(config.master_seed, index);
        let magnitude = if config.unitary_magnitude {
            Some(engine.unitary(energies.clone())?.matrix().map(|z| z.norm()))
        } else {
            None
        };
        Ok((engine.observe(energies)?, magnitude))
    };

    ordered_chunks(
        0..config.realizations,
        config.workers,
        CHUNK,
        realize,
        |index, outcome| {
            let (obs, magnitude) = outcome.map_err(|e| Error::Realization {
                index,
                source: Box::new(e),
            })?;
            correlation.push(obs.correlation.values().iter());
            density.push(obs.density.values().iter());
            if let (Some(stats), Some(m)) = (unitary.as_mut(), magnitude) {
                stats.push(m.iter());
            }
            Ok::<(), Error>(())
        },
    )?;

    Ok(EnsembleResult {
        config: config.clone(),
        realizations: config.realizations,
        mean_correlation: DMatrix::from_vec(sites, sites, correlation.mean.clone()),
        std_correlation: DMatrix::from_vec(sites, sites, correlation.std()),
        mean_density: DVector::from_vec(density.mean.clone()),
        std_density: DVector::from_vec(density.std()),
        mean_abs_unitary: unitary.map(|s| DMatrix::from_vec(dim, dim, s.mean)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disorder_lies_in_half_open_interval() {
        for index in 0..200 {
            let e = sample_disorder(3.0, 11, index, 10);
            assert_eq!(e.len(), 10);
            assert!(e.iter().all(|&x| (0.0..3.0).contains(&x)));
        }
    }

    #[test]
    fn clean_lattice_for_zero_bound() {
        assert_eq!(sample_disorder(0.0, 5, 9, 10), vec![0.0; 10]);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(sample_disorder(3.0, 42, 17, 10), sample_disorder(3.0, 42, 17, 10));
        assert_ne!(sample_disorder(3.0, 42, 17, 10), sample_disorder(3.0, 42, 18, 10));
        assert_ne!(sample_disorder(3.0, 42, 17, 10), sample_disorder(3.0, 43, 17, 10));
    }

    #[test]
    fn chi_square_uniformity() {
        // 10 bins, 9 degrees of freedom: critical value at p = 0.001 is 27.877
        let mut counts = [0u64; 10];
        for index in 0..1000 {
            for x in sample_disorder(3.0, 2024, index, 10) {
                counts[(x / 0.3) as usize] += 1;
            }
        }
        let expected = 1000.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 27.877, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn centre_pair_for_ten_sites() {
        assert_eq!(centre_pair(10), vec![0, 0, 0, 0, 1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn single_realization_has_zero_spread() {
        let config = EnsembleConfig::new(WalkTemplate::two_boson(3.0), 1, 99);
        let result = run_ensemble(&config).unwrap();
        let engine = WalkEngine::new(config.template.clone()).unwrap();
        let obs = engine.observe(engine.sample(99, 0)).unwrap();
        assert_eq!(&result.mean_correlation, obs.correlation.values());
        assert_eq!(&result.mean_density, obs.density.values());
        assert!(result.std_correlation.iter().all(|&s| s == 0.0));
        assert!(result.std_density.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn worker_count_does_not_change_the_result() {
        let mut config = EnsembleConfig::new(WalkTemplate::two_boson(0.0), 300, 5);
        config.unitary_magnitude = true;
        config.workers = 1;
        let a = run_ensemble(&config).unwrap();
        config.workers = 4;
        let b = run_ensemble(&config).unwrap();
        assert_eq!(a.mean_correlation, b.mean_correlation);
        assert_eq!(a.std_density, b.std_density);
        assert_eq!(a.mean_abs_unitary, b.mean_abs_unitary);
        assert!((a.mean_density.sum() - 2.0).abs() < 1e-8);
        assert!(a.mean_correlation.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn welford_matches_two_pass() {
        let data = [[1.0, 4.0], [2.0, -1.0], [7.5, 0.25], [3.0, 3.0]];
        let mut stats = RunningStats::new(2);
        for row in &data {
            stats.push(row.iter());
        }
        for k in 0..2 {
            let mean = data.iter().map(|r| r[k]).sum::<f64>() / 4.0;
            let var = data.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / 4.0;
            assert!((stats.mean[k] - mean).abs() < 1e-14);
            assert!((stats.std()[k] - var.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_empty_ensembles_and_bad_templates() {
        assert!(run_ensemble(&EnsembleConfig::new(WalkTemplate::two_boson(0.0), 0, 1)).is_err());
        let mut t = WalkTemplate::two_boson(0.0);
        t.occupation[0] = 1;
        assert!(WalkEngine::new(t).is_err());
    }
}
