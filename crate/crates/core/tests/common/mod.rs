//! Brute-force reference implementations, written independently of the
//! library: recursive state enumeration, Hamiltonian assembly by explicit
//! operator action, a Taylor scaling-and-squaring matrix exponential and
//! correlations from the Fock-diagonal identity ⟨a†a†aa⟩ = ⟨n n⟩ − δ⟨n⟩.

#![allow(dead_code)]

use std::collections::HashMap;

use bosewalk::C64;
use nalgebra::{DMatrix, DVector};

/// All occupation vectors of `particles` bosons on `sites` sites, in
/// whatever order the recursion produces.
pub fn compositions(sites: usize, particles: usize) -> Vec<Vec<u8>> {
    fn go(prefix: &mut Vec<u8>, left: usize, sites: usize, out: &mut Vec<Vec<u8>>) {
        if prefix.len() == sites - 1 {
            prefix.push(left as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k as u8);
            go(prefix, left - k, sites, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), particles, sites, &mut out);
    out
}

pub struct Reference {
    pub states: Vec<Vec<u8>>,
    pub index: HashMap<Vec<u8>, usize>,
    pub hamiltonian: DMatrix<f64>,
}

impl Reference {
    pub fn new(energies: &[f64], hopping: f64, interaction: f64, particles: usize) -> Self {
        let sites = energies.len();
        let states = compositions(sites, particles);
        let index: HashMap<Vec<u8>, usize> =
            states.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        let dim = states.len();
        let mut h = DMatrix::zeros(dim, dim);
        for (col, state) in states.iter().enumerate() {
            for m in 0..sites {
                let n = state[m] as f64;
                h[(col, col)] += energies[m] * n + 0.5 * interaction * n * (n - 1.0);
            }
            // a†_m a_{m+1} + a†_{m+1} a_m applied to |state⟩
            for m in 0..sites.saturating_sub(1) {
                for (to, from) in [(m, m + 1), (m + 1, m)] {
                    if state[from] == 0 {
                        continue;
                    }
                    let amplitude = ((state[from] as f64) * (state[to] as f64 + 1.0)).sqrt();
                    let mut next = state.clone();
                    next[from] -= 1;
                    next[to] += 1;
                    h[(index[&next], col)] += hopping * amplitude;
                }
            }
        }
        Self {
            states,
            index,
            hamiltonian: h,
        }
    }

    /// Amplitudes indexed by this reference's own state order.
    pub fn basis_vector(&self, occupation: &[u8]) -> DVector<C64> {
        let mut v = DVector::zeros(self.states.len());
        v[self.index[occupation]] = C64::new(1.0, 0.0);
        v
    }

    pub fn propagator(&self, time: f64) -> DMatrix<C64> {
        let generator = self.hamiltonian.map(|x| C64::new(0.0, -time * x));
        expm(&generator)
    }

    pub fn correlation(&self, psi: &DVector<C64>) -> DMatrix<f64> {
        let sites = self.states[0].len();
        let mut g = DMatrix::zeros(sites, sites);
        for (k, state) in self.states.iter().enumerate() {
            let p = psi[k].norm_sqr();
            for q in 0..sites {
                for r in 0..sites {
                    let nq = state[q] as f64;
                    let nr = state[r] as f64;
                    let same = if q == r { nq } else { 0.0 };
                    g[(q, r)] += p * (nq * nr - same);
                }
            }
        }
        g
    }

    pub fn density(&self, psi: &DVector<C64>) -> Vec<f64> {
        let sites = self.states[0].len();
        let mut n = vec![0.0; sites];
        for (k, state) in self.states.iter().enumerate() {
            for m in 0..sites {
                n[m] += psi[k].norm_sqr() * state[m] as f64;
            }
        }
        n
    }
}

/// exp(A) by scaling to ‖A‖₁ ≤ 1/2, a 30-term Taylor series and repeated
/// squaring.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let dim = a.nrows();
    let norm = (0..dim)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.5 {
        squarings += 1;
    }
    let scaled = a / C64::new(2f64.powi(squarings), 0.0);
    let mut result = DMatrix::<C64>::identity(dim, dim);
    let mut term = DMatrix::<C64>::identity(dim, dim);
    for k in 1..=30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Library amplitudes reordered into the reference state order.
pub fn reorder(reference: &Reference, library_states: &[Vec<u8>], amplitudes: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::zeros(amplitudes.len());
    for (k, state) in library_states.iter().enumerate() {
        out[reference.index[state]] = amplitudes[k];
    }
    out
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
