use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DynamicsError;
use crate::hilbert::{FockDim, Operator, StateVector};
use crate::spectral::SpectralDecomposition;

pub(crate) const HERMITIAN_TOL: f64 = 1e-10;
pub(crate) const TRACE_TOL: f64 = 1e-8;
pub(crate) const PSD_TOL: f64 = -1e-8;

/// Hermitian, unit-trace, positive-semidefinite state of the resonator.
///
/// The spectral decomposition is computed lazily and cached; the matrix
/// itself never changes after construction.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    dim: FockDim,
    mat: DMatrix<Complex64>,
    spectrum: OnceLock<SpectralDecomposition>,
}

impl DensityMatrix {
    /// Validates `mat` against the density-matrix invariants.
    pub fn new(mat: DMatrix<Complex64>) -> Result<Self, DynamicsError> {
        Self::with_psd_tolerance(mat, PSD_TOL)
    }

    pub(crate) fn with_psd_tolerance(mat: DMatrix<Complex64>, psd_tol: f64) -> Result<Self, DynamicsError> {
        if mat.nrows() != mat.ncols() {
            return Err(DynamicsError::InvalidState(format!(
                "matrix is {}x{}, not square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let dim = FockDim::new(mat.nrows())?;
        let herm = (&mat - mat.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(DynamicsError::InvalidState(format!(
                "not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = mat.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(DynamicsError::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let rho = Self::unchecked(dim, mat);
        let min = rho.spectrum().raw_min_eigenvalue();
        if min < psd_tol {
            return Err(DynamicsError::InvalidState(format!(
                "smallest eigenvalue {min:e} is below {psd_tol:e}"
            )));
        }
        Ok(rho)
    }

    pub(crate) fn unchecked(dim: FockDim, mat: DMatrix<Complex64>) -> Self {
        Self {
            dim,
            mat,
            spectrum: OnceLock::new(),
        }
    }

    /// Projects an approximate state back onto Hermitian unit-trace matrices.
    /// Returns the state and `|tr(ρ) - 1|` measured before renormalization.
    pub(crate) fn hermitize_and_normalize(dim: FockDim, mat: DMatrix<Complex64>) -> (Self, f64) {
        let herm = (&mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = herm.trace().re;
        let drift = (tr - 1.0).abs();
        (Self::unchecked(dim, herm / Complex64::new(tr, 0.0)), drift)
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        Self::unchecked(psi.dim(), psi.projector())
    }

    pub fn fock(dim: FockDim, n: usize) -> Self {
        Self::from_pure(&StateVector::fock(dim, n))
    }

    pub fn vacuum(dim: FockDim) -> Self {
        Self::fock(dim, 0)
    }

    /// `p ρ1 + (1-p) ρ2`.
    pub fn mixture(p: f64, first: &DensityMatrix, second: &DensityMatrix) -> Result<Self, DynamicsError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(DynamicsError::InvalidState(format!("mixing weight {p} outside [0, 1]")));
        }
        check_dims(first.dim, second.dim)?;
        let mat = &first.mat * Complex64::new(p, 0.0) + &second.mat * Complex64::new(1.0 - p, 0.0);
        Ok(Self::unchecked(first.dim, mat))
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.mat[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // tr(ρ²) = Σ |ρ_mn|² for Hermitian ρ.
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `tr(ρ O)`. Panics on a dimension mismatch.
    pub fn expectation(&self, op: &Operator) -> Complex64 {
        assert_eq!(self.dim, op.dim(), "operator dimension mismatch");
        let m = op.matrix();
        let d = self.dim.get();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.mat[(r, c)] * m[(c, r)];
            }
        }
        acc
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        self.spectrum
            .get_or_init(|| SpectralDecomposition::of_hermitian(&self.mat))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.spectrum().raw_min_eigenvalue()
    }

    /// `<ψ|ρ|ψ>`, the fidelity with a pure state.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        assert_eq!(self.dim, psi.dim(), "state dimension mismatch");
        psi.amplitudes().dotc(&(&self.mat * psi.amplitudes())).re
    }

    /// Conjugation by the phase rotation `exp(i φ n)`.
    pub fn rotate_phase(&self, phi: f64) -> Self {
        let mat = DMatrix::from_fn(self.mat.nrows(), self.mat.ncols(), |m, n| {
            self.mat[(m, n)] * Complex64::from_polar(1.0, phi * (m as f64 - n as f64))
        });
        Self::unchecked(self.dim, mat)
    }
}

pub(crate) fn check_dims(left: FockDim, right: FockDim) -> Result<(), DynamicsError> {
    if left != right {
        return Err(DynamicsError::DimensionMismatch {
            left: left.get(),
            right: right.get(),
        });
    }
    Ok(())
}

/// Uhlmann fidelity `(tr sqrt(sqrt(ρ) σ sqrt(ρ)))²`, computed as the squared
/// trace norm of `sqrt(ρ) sqrt(σ)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, DynamicsError> {
    check_dims(rho.dim, sigma.dim)?;
    let sqrt_rho = rho.spectrum().map(|v| v.max(0.0).sqrt());
    let sqrt_sigma = sigma.spectrum().map(|v| v.max(0.0).sqrt());
    let root: f64 = (sqrt_rho * sqrt_sigma).singular_values().iter().sum();
    Ok(root * root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, number};

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn validates_invariants() {
        let d = 3;
        let good = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(0.3, 0.0),
            Complex64::new(0.2, 0.0),
        ]));
        assert!(DensityMatrix::new(good.clone()).is_ok());

        let mut bad_trace = good.clone();
        bad_trace[(0, 0)] = Complex64::new(0.6, 0.0);
        assert!(DensityMatrix::new(bad_trace).is_err());

        let mut non_herm = good.clone();
        non_herm[(0, 1)] = Complex64::new(0.1, 0.0);
        assert!(DensityMatrix::new(non_herm).is_err());

        let neg = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.1, 0.0),
            Complex64::new(-0.1, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        assert!(DensityMatrix::new(neg).is_err());
        assert!(DensityMatrix::new(DMatrix::zeros(d, d + 1)).is_err());
    }

    #[test]
    fn pure_state_purity_and_fidelity() {
        let d = dim(20);
        let psi = coherent_state(Complex64::new(1.0, 0.5), d).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.fidelity_with_pure(&psi) - 1.0).abs() < 1e-12);
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-8);
        assert!((rho.expectation(&number(d)).re - 1.25).abs() < 1e-10);
    }

    #[test]
    fn uhlmann_reduces_to_overlap_for_pure_states() {
        let d = dim(20);
        let a = coherent_state(Complex64::new(1.0, 0.0), d).unwrap();
        let b = coherent_state(Complex64::new(0.0, 1.0), d).unwrap();
        let f = fidelity(&DensityMatrix::from_pure(&a), &DensityMatrix::from_pure(&b)).unwrap();
        assert!((f - a.inner(&b).norm_sqr()).abs() < 1e-8);
    }

    #[test]
    fn phase_rotation_rotates_coherent_amplitude() {
        let d = dim(24);
        let alpha = Complex64::new(1.2, 0.0);
        let phi = 0.4;
        let rho = DensityMatrix::from_pure(&coherent_state(alpha, d).unwrap()).rotate_phase(phi);
        let target = coherent_state(alpha * Complex64::from_polar(1.0, phi), d).unwrap();
        assert!((rho.fidelity_with_pure(&target) - 1.0).abs() < 1e-12);
    }
}
