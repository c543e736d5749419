use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::WaveFunction;
use crate::fock::{FockBasis, Hamiltonian};
use crate::{Error, Result, C64};

/// Eigendecomposition H = V diag(λ) Vᵀ of a Hamiltonian.
#[derive(Debug, Clone)]
pub struct Spectrum {
    basis: Arc<FockBasis>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(hamiltonian: &Hamiltonian) -> Result<Self> {
        let spec = hamiltonian.spec();
        let failure = |reason: &str| Error::Numerical {
            reason: reason.to_owned(),
            energies: spec.energies().to_vec(),
            hopping: spec.hopping(),
            interaction: spec.interaction(),
        };
        let matrix = hamiltonian.matrix();
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(failure("non-finite Hamiltonian entry"));
        }
        let dim = matrix.nrows();
        let eigen = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 1000 * dim.max(1))
            .ok_or_else(|| failure("QR iteration did not converge"))?;
        Ok(Self {
            basis: Arc::clone(hamiltonian.basis()),
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    fn phases(&self, time: f64) -> (DVector<f64>, DVector<f64>) {
        let cos = self.eigenvalues.map(|e| (e * time).cos());
        let sin = self.eigenvalues.map(|e| -(e * time).sin());
        (cos, sin)
    }

    /// U(t) = e^{-iHt}. The upper triangle is computed and mirrored, so the
    /// result is exactly complex symmetric.
    pub fn unitary(&self, time: f64) -> Propagator {
        let v = &self.eigenvectors;
        let (cos, sin) = self.phases(time);
        let re = scale_columns(v, &cos) * v.transpose();
        let im = scale_columns(v, &sin) * v.transpose();
        let dim = v.nrows();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            C64::new(re[(a, b)], im[(a, b)])
        });
        Propagator {
            basis: Arc::clone(&self.basis),
            time,
            matrix,
        }
    }

    /// ψ(t) = V diag(e^{-iλt}) Vᵀ ψ(0) without forming U.
    pub fn evolve(&self, initial: &WaveFunction, time: f64) -> Result<WaveFunction> {
        check_basis(&self.basis, initial.basis())?;
        let v = &self.eigenvectors;
        let psi = initial.amplitudes();
        let re0 = v.tr_mul(&psi.map(|a| a.re));
        let im0 = v.tr_mul(&psi.map(|a| a.im));
        let (cos, sin) = self.phases(time);
        // (re0 + i im0) * (cos + i sin)
        let re = re0.component_mul(&cos) - im0.component_mul(&sin);
        let im = re0.component_mul(&sin) + im0.component_mul(&cos);
        let re = v * re;
        let im = v * im;
        let amplitudes = DVector::from_fn(re.len(), |k, _| C64::new(re[k], im[k]));
        Ok(WaveFunction::from_parts(Arc::clone(&self.basis), amplitudes))
    }
}

fn scale_columns(v: &DMatrix<f64>, factors: &DVector<f64>) -> DMatrix<f64> {
    let mut out = v.clone();
    for (mut column, &f) in out.column_iter_mut().zip(factors.iter()) {
        column *= f;
    }
    out
}

fn check_basis(expected: &FockBasis, got: &FockBasis) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch(format!(
            "state lives on a {}-site {}-particle basis, operator on {}-site {}-particle",
            got.sites(),
            got.particles(),
            expected.sites(),
            expected.particles()
        )));
    }
    Ok(())
}

/// Builds U = e^{-iHt} via the eigendecomposition of H.
pub fn build_unitary(hamiltonian: &Hamiltonian, time: f64) -> Result<Propagator> {
    if !time.is_finite() {
        return Err(Error::NonFinite("propagation time"));
    }
    Ok(Spectrum::new(hamiltonian)?.unitary(time))
}

/// Complex D×D propagator over a Fock basis.
#[derive(Debug, Clone)]
pub struct Propagator {
    basis: Arc<FockBasis>,
    time: f64,
    matrix: DMatrix<C64>,
}

impl Propagator {
    /// Wraps an arbitrary matrix (for example a decoded one). No unitarity
    /// check is made here; see [`Propagator::unitarity_defect`].
    pub fn from_matrix(basis: &Arc<FockBasis>, time: f64, matrix: DMatrix<C64>) -> Result<Self> {
        let dim = basis.dimension();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a basis of dimension {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            basis: Arc::clone(basis),
            time,
            matrix,
        })
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn propagate(&self, initial: &WaveFunction) -> Result<WaveFunction> {
        check_basis(&self.basis, initial.basis())?;
        Ok(WaveFunction::from_parts(
            Arc::clone(&self.basis),
            &self.matrix * initial.amplitudes(),
        ))
    }

    /// max |U†U - I| elementwise.
    pub fn unitarity_defect(&self) -> f64 {
        let product = self.matrix.adjoint() * &self.matrix;
        let mut worst: f64 = 0.0;
        for j in 0..product.ncols() {
            for i in 0..product.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((product[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// max |U - Uᵀ| elementwise.
    pub fn symmetry_defect(&self) -> f64 {
        (&self.matrix - self.matrix.transpose())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Matrix product self · other (both on the same basis); time adds.
    pub fn compose(&self, other: &Propagator) -> Result<Propagator> {
        check_basis(&self.basis, &other.basis)?;
        Ok(Propagator {
            basis: Arc::clone(&self.basis),
            time: self.time + other.time,
            matrix: &self.matrix * &other.matrix,
        })
    }
}
