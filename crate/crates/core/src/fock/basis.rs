use std::collections::HashMap;

use crate::{Error, Result};

/// Largest Hilbert-space dimension [`FockBasis::new`] will enumerate.
pub const DEFAULT_DIMENSION_CAP: usize = 10_000;

/// Ordered enumeration of N-boson occupation vectors on M sites.
///
/// States are stored in descending lexicographic order: for M = 2, N = 2 the
/// order is (2,0), (1,1), (0,2). Image layouts and propagator indices depend
/// on this order, so it must not change.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    // row-major, `sites` entries per state
    occupations: Vec<u8>,
    index: HashMap<Box<[u8]>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.particles == other.particles
    }
}

impl Eq for FockBasis {}

/// binomial(M + N - 1, N), saturating at u128::MAX.
pub(crate) fn composition_count(sites: usize, particles: usize) -> u128 {
    let n = particles as u128;
    let top = (sites + particles - 1) as u128;
    let mut acc: u128 = 1;
    for k in 1..=n.min(top - n) {
        // acc * (top - k + 1) / k stays integral at every step
        acc = match acc.checked_mul(top - k + 1) {
            Some(v) => v / k,
            None => return u128::MAX,
        };
    }
    acc
}

impl FockBasis {
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        Self::with_cap(sites, particles, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(sites: usize, particles: usize, cap: usize) -> Result<Self> {
        if sites == 0 {
            return Err(Error::NoSites);
        }
        let dimension = composition_count(sites, particles);
        if dimension > cap as u128 || particles > u8::MAX as usize {
            return Err(Error::Capacity { dimension, cap });
        }
        let dimension = dimension as usize;

        let mut occupations = Vec::with_capacity(dimension * sites);
        let mut current = vec![0u8; sites];
        fill_descending(&mut current, 0, particles, &mut occupations);
        debug_assert_eq!(occupations.len(), dimension * sites);

        let index = occupations
            .chunks_exact(sites)
            .enumerate()
            .map(|(k, s)| (Box::<[u8]>::from(s), k))
            .collect();

        Ok(Self {
            sites,
            particles,
            occupations,
            index,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dimension(&self) -> usize {
        self.occupations.len() / self.sites
    }

    /// Occupation vector of state `k`.
    pub fn state(&self, k: usize) -> &[u8] {
        &self.occupations[k * self.sites..(k + 1) * self.sites]
    }

    pub fn states(&self) -> impl ExactSizeIterator<Item = &[u8]> + '_ {
        self.occupations.chunks_exact(self.sites)
    }

    pub fn index_of(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// For every state `s` and site `m`, the index of `s - e_m` in `lower`
    /// (the basis with one particle fewer), or `None` when site `m` is empty.
    /// Flattened as `[state * sites + site]`.
    pub(crate) fn lowering_table(&self, lower: &FockBasis) -> Vec<Option<usize>> {
        debug_assert_eq!(lower.sites, self.sites);
        debug_assert_eq!(lower.particles + 1, self.particles);
        let mut scratch = vec![0u8; self.sites];
        let mut table = Vec::with_capacity(self.occupations.len());
        for state in self.states() {
            for site in 0..self.sites {
                if state[site] == 0 {
                    table.push(None);
                } else {
                    scratch.copy_from_slice(state);
                    scratch[site] -= 1;
                    table.push(lower.index_of(&scratch));
                }
            }
        }
        table
    }
}

fn fill_descending(current: &mut [u8], site: usize, remaining: usize, out: &mut Vec<u8>) {
    if site + 1 == current.len() {
        current[site] = remaining as u8;
        out.extend_from_slice(current);
        return;
    }
    for n in (0..=remaining).rev() {
        current[site] = n as u8;
        fill_descending(current, site + 1, remaining - n, out);
    }
    current[site] = 0;
}
