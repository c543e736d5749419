use std::sync::Arc;

use nalgebra::DMatrix;

use super::{FockBasis, LatticeSpec};
use crate::{Error, Result};

/// Dense real symmetric Bose-Hubbard Hamiltonian over a [`FockBasis`]:
///
/// H = Σ_m E_m n_m + J Σ_m (a†_m a_{m+1} + a†_{m+1} a_m) + (Γ/2) Σ_m n_m (n_m - 1)
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    basis: Arc<FockBasis>,
    spec: LatticeSpec,
    matrix: DMatrix<f64>,
}

impl Hamiltonian {
    pub fn build(spec: &LatticeSpec, basis: &Arc<FockBasis>) -> Result<Self> {
        let sites = basis.sites();
        if spec.sites() != sites {
            return Err(Error::DimensionMismatch(format!(
                "lattice has {} sites but basis has {sites}",
                spec.sites()
            )));
        }
        let dim = basis.dimension();
        let energies = spec.energies();
        let half_gamma = 0.5 * spec.interaction();
        let hopping = spec.hopping();

        let mut matrix = DMatrix::zeros(dim, dim);
        let mut moved = vec![0u8; sites];
        for (a, state) in basis.states().enumerate() {
            matrix[(a, a)] = state
                .iter()
                .zip(energies)
                .map(|(&n, &e)| {
                    let n = n as f64;
                    e * n + half_gamma * n * (n - 1.0)
                })
                .sum();

            if hopping == 0.0 {
                continue;
            }
            // Each bond is visited in both directions from the two endpoint
            // states, so writing both triangles here sets every element twice
            // to the same value.
            for site in 0..sites {
                for target in [site.wrapping_sub(1), site + 1] {
                    if target >= sites || state[site] == 0 {
                        continue;
                    }
                    moved.copy_from_slice(state);
                    moved[site] -= 1;
                    moved[target] += 1;
                    let b = basis
                        .index_of(&moved)
                        .expect("hopping preserves particle number");
                    let amplitude =
                        hopping * ((state[target] as f64 + 1.0) * state[site] as f64).sqrt();
                    matrix[(b, a)] = amplitude;
                    matrix[(a, b)] = amplitude;
                }
            }
        }

        Ok(Self {
            basis: Arc::clone(basis),
            spec: spec.clone(),
            matrix,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(m: usize, n: usize) -> Arc<FockBasis> {
        Arc::new(FockBasis::new(m, n).unwrap())
    }

    #[test]
    fn two_bosons_on_two_sites() {
        let spec = LatticeSpec::clean(2, 0.0).unwrap();
        let h = Hamiltonian::build(&spec, &basis(2, 2)).unwrap();
        let r2 = 2f64.sqrt();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, -r2, 0.0, -r2, 0.0, -r2, 0.0, -r2, 0.0]);
        assert!((h.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn hopping_free_limit_is_diagonal() {
        let spec = LatticeSpec::new(vec![0.3, 1.7, 2.2], 0.0, 0.0, 3.0).unwrap();
        let b = basis(3, 2);
        let h = Hamiltonian::build(&spec, &b).unwrap();
        for (a, s) in b.states().enumerate() {
            for c in 0..b.dimension() {
                let expected = if a == c {
                    s.iter().zip(spec.energies()).map(|(&n, e)| n as f64 * e).sum()
                } else {
                    0.0
                };
                assert_eq!(h.matrix()[(a, c)], expected);
            }
        }
    }

    #[test]
    fn doubly_occupied_site_pays_interaction() {
        let spec = LatticeSpec::clean(10, 1000.0).unwrap();
        let b = basis(10, 2);
        let h = Hamiltonian::build(&spec, &b).unwrap();
        let mut s = [0u8; 10];
        s[0] = 2;
        let k = b.index_of(&s).unwrap();
        assert_eq!(h.matrix()[(k, k)], 1000.0);
    }

    #[test]
    fn one_particle_sector_is_the_one_body_matrix() {
        let spec = LatticeSpec::new(vec![0.1, 2.0, 0.4, 1.1, 2.9], -1.0, 3.0, 3.0).unwrap();
        let b = basis(5, 1);
        let h = Hamiltonian::build(&spec, &b).unwrap();
        // descending order puts the particle on site 0 first
        assert_eq!(h.matrix(), &spec.single_particle_matrix());
    }

    #[test]
    fn rejects_mismatched_sites() {
        let spec = LatticeSpec::clean(3, 0.0).unwrap();
        assert!(matches!(
            Hamiltonian::build(&spec, &basis(4, 2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn exactly_symmetric_under_random_disorder() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = basis(10, 2);
        for _ in 0..100 {
            let energies = (0..10).map(|_| rng.random_range(0.0..3.0)).collect();
            let gamma = [0.0, 3.0, 1000.0][rng.random_range(0..3)];
            let spec = LatticeSpec::new(energies, -1.0, gamma, 3.0).unwrap();
            let h = Hamiltonian::build(&spec, &b).unwrap();
            assert_eq!(h.matrix(), &h.matrix().transpose());
        }
    }

    #[test]
    fn hops_connect_only_adjacent_single_moves() {
        let spec = LatticeSpec::new(vec![0.5; 6], -1.0, 3.0, 3.0).unwrap();
        let b = basis(6, 3);
        let h = Hamiltonian::build(&spec, &b).unwrap();
        for a in 0..b.dimension() {
            for c in 0..b.dimension() {
                if a == c || h.matrix()[(a, c)] == 0.0 {
                    continue;
                }
                let diff: Vec<i32> = b
                    .state(a)
                    .iter()
                    .zip(b.state(c))
                    .map(|(&x, &y)| x as i32 - y as i32)
                    .collect();
                let moved: Vec<usize> = (0..6).filter(|&i| diff[i] != 0).collect();
                assert_eq!(moved.len(), 2);
                assert_eq!(moved[1] - moved[0], 1, "open chain, nearest neighbours only");
                assert_eq!(diff[moved[0]] + diff[moved[1]], 0);
                assert_eq!(diff[moved[0]].abs(), 1);
            }
        }
    }

    #[test]
    fn edge_sites_have_one_neighbour() {
        // One particle: the number of nonzero off-diagonal entries in a row
        // is the coordination number of that site.
        let spec = LatticeSpec::clean(7, 0.0).unwrap();
        let h = Hamiltonian::build(&spec, &basis(7, 1)).unwrap();
        let degree = |row: usize| (0..7).filter(|&c| c != row && h.matrix()[(row, c)] != 0.0).count();
        assert_eq!(degree(0), 1);
        assert_eq!(degree(6), 1);
        assert!((1..6).all(|r| degree(r) == 2));
    }

    #[test]
    fn never_mixes_particle_number_sectors() {
        // Direct sum of the N = 1, 2, 3 sectors: assembling each block on its
        // own basis leaves every cross-sector element structurally zero.
        // Here we check that no hop ever lands outside its own basis.
        let spec = LatticeSpec::new(vec![1.0, 0.0, 2.0, 0.5], -1.0, 3.0, 3.0).unwrap();
        let sectors: Vec<_> = (1..=3).map(|n| basis(4, n)).collect();
        let total: usize = sectors.iter().map(|b| b.dimension()).sum();
        let mut full = DMatrix::<f64>::zeros(total, total);
        let mut offset = 0;
        let mut owner = vec![0usize; total];
        for (sector, b) in sectors.iter().enumerate() {
            let h = Hamiltonian::build(&spec, b).unwrap();
            let d = b.dimension();
            full.view_mut((offset, offset), (d, d)).copy_from(h.matrix());
            owner[offset..offset + d].fill(sector);
            offset += d;
        }
        for i in 0..total {
            for j in 0..total {
                if owner[i] != owner[j] {
                    assert_eq!(full[(i, j)], 0.0);
                }
            }
        }
    }
}
