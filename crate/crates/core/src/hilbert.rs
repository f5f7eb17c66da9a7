//! Truncated Fock-space operators and canonical states.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HilbertError {
    #[error("invalid Fock dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),
    #[error("coherent amplitude |alpha| = {alpha_abs} is unsafe for a {dim}-level basis (need |alpha|^2 <= dim/4)")]
    Truncation { alpha_abs: f64, dim: usize },
    #[error("odd cat state is undefined at zero amplitude")]
    DegenerateState,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Number of retained Fock levels, `|0>` through `|dim-1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(dim: usize) -> Result<Self, HilbertError> {
        if dim < 2 {
            return Err(HilbertError::InvalidDimension(dim));
        }
        Ok(Self(dim))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Largest `|alpha|` a coherent component may carry in this basis.
    pub fn max_safe_amplitude(self) -> f64 {
        (self.0 as f64 / 4.0).sqrt()
    }

    pub fn check_amplitude(self, alpha: Complex64) -> Result<(), HilbertError> {
        if alpha.norm_sqr() > self.0 as f64 / 4.0 {
            return Err(HilbertError::Truncation {
                alpha_abs: alpha.norm(),
                dim: self.0,
            });
        }
        Ok(())
    }
}

impl std::fmt::Display for FockDim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense operator on a truncated Fock space. Entry `(row, col)` is `<row|O|col>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: FockDim,
    mat: DMatrix<Complex64>,
}

impl Operator {
    /// Wraps a square matrix. Panics if the matrix is not `dim x dim`.
    pub fn from_matrix(dim: FockDim, mat: DMatrix<Complex64>) -> Self {
        assert!(
            mat.nrows() == dim.get() && mat.ncols() == dim.get(),
            "operator matrix must be {dim}x{dim}"
        );
        Self { dim, mat }
    }

    pub fn zeros(dim: FockDim) -> Self {
        Self::from_matrix(dim, DMatrix::zeros(dim.get(), dim.get()))
    }

    pub fn identity(dim: FockDim) -> Self {
        Self::from_matrix(dim, DMatrix::identity(dim.get(), dim.get()))
    }

    pub fn from_diagonal(dim: FockDim, f: impl Fn(usize) -> Complex64) -> Self {
        let d = dim.get();
        let diag = DVector::from_fn(d, |n, _| f(n));
        Self::from_matrix(dim, DMatrix::from_diagonal(&diag))
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

    pub fn dagger(&self) -> Self {
        Self::from_matrix(self.dim, self.mat.adjoint())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_matrix(self.dim, &self.mat * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entrywise deviation from `O = O^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim.get();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.mat[(r, c)] - self.mat[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Complex64 {
        psi.amplitudes().dotc(&(&self.mat * psi.amplitudes()))
    }

    pub fn apply(&self, psi: &StateVector) -> DVector<Complex64> {
        &self.mat * psi.amplitudes()
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator::from_matrix(self.dim, &self.mat * &rhs.mat)
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator::from_matrix(self.dim, &self.mat + &rhs.mat)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimension mismatch");
        Operator::from_matrix(self.dim, &self.mat - &rhs.mat)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_matrix(self.dim, -&self.mat)
    }
}

/// Normalized pure state in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    dim: FockDim,
    amps: DVector<Complex64>,
}

impl StateVector {
    /// Normalizes `amps`. Panics on a zero vector or a length that mismatches `dim`.
    pub fn from_amplitudes(dim: FockDim, amps: DVector<Complex64>) -> Self {
        assert_eq!(amps.len(), dim.get(), "amplitude vector length must equal dim");
        let norm = amps.norm();
        assert!(norm > 0.0, "cannot normalize a zero vector");
        Self {
            dim,
            amps: amps / Complex64::new(norm, 0.0),
        }
    }

    /// Fock state `|n>`. Panics if `n >= dim`.
    pub fn fock(dim: FockDim, n: usize) -> Self {
        assert!(n < dim.get(), "Fock level {n} outside a {dim}-level basis");
        let mut amps = DVector::zeros(dim.get());
        amps[n] = ONE;
        Self { dim, amps }
    }

    pub fn vacuum(dim: FockDim) -> Self {
        Self::fock(dim, 0)
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.dotc(&other.amps)
    }

    /// `|psi><psi|` as a raw matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.amps * self.amps.adjoint()
    }
}

pub fn annihilation(dim: FockDim) -> Operator {
    let d = dim.get();
    let mut mat = DMatrix::zeros(d, d);
    for n in 1..d {
        mat[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    Operator::from_matrix(dim, mat)
}

pub fn creation(dim: FockDim) -> Operator {
    annihilation(dim).dagger()
}

/// `a^dagger a`, diagonal `0, 1, ..., dim-1`.
pub fn number(dim: FockDim) -> Operator {
    Operator::from_diagonal(dim, |n| Complex64::new(n as f64, 0.0))
}

/// `(X, P)` with `X = (a^dagger + a)/sqrt 2` and `P = i(a^dagger - a)/sqrt 2`.
pub fn quadratures(dim: FockDim) -> (Operator, Operator) {
    let a = annihilation(dim);
    let ad = a.dagger();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&ad + &a).scale_real(s);
    let p = (&ad - &a).scale(Complex64::new(0.0, s));
    (x, p)
}

/// Photon-number parity `(-1)^n`.
pub fn parity(dim: FockDim) -> Operator {
    Operator::from_diagonal(dim, |n| if n % 2 == 0 { ONE } else { -ONE })
}

/// Unnormalized truncated coherent amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)`.
fn coherent_amplitudes(alpha: Complex64, dim: FockDim) -> DVector<Complex64> {
    let d = dim.get();
    let mut amps = DVector::from_element(d, ZERO);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps[0] = c;
    for n in 1..d {
        c = c * alpha / (n as f64).sqrt();
        amps[n] = c;
    }
    amps
}

/// Norm of the coherent-state amplitudes retained by the truncation, before
/// renormalization.
pub fn coherent_retained_norm(alpha: Complex64, dim: FockDim) -> f64 {
    coherent_amplitudes(alpha, dim).norm()
}

pub fn coherent_state(alpha: Complex64, dim: FockDim) -> Result<StateVector, HilbertError> {
    dim.check_amplitude(alpha)?;
    Ok(StateVector::from_amplitudes(dim, coherent_amplitudes(alpha, dim)))
}

/// Cat state `|alpha> + s|-alpha>` for parity sign `s = +1` or `-1`.
///
/// Built directly from the parity-filtered coherent amplitudes, so small
/// odd cats do not suffer cancellation.
pub fn cat_state(alpha: Complex64, parity_sign: i32, dim: FockDim) -> Result<StateVector, HilbertError> {
    assert!(parity_sign == 1 || parity_sign == -1, "parity sign must be +1 or -1");
    dim.check_amplitude(alpha)?;
    let want = if parity_sign == 1 { 0 } else { 1 };
    if parity_sign == -1 && alpha.norm() == 0.0 {
        return Err(HilbertError::DegenerateState);
    }
    let d = dim.get();
    let mut amps = DVector::from_element(d, ZERO);
    // The prefactor e^{-|a|^2/2} cancels in the normalization; dropping it keeps
    // tiny odd cats representable.
    let mut c = ONE;
    for n in 0..d {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        if n % 2 == want {
            amps[n] = c;
        }
    }
    if amps.norm() == 0.0 {
        return Err(HilbertError::DegenerateState);
    }
    Ok(StateVector::from_amplitudes(dim, amps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, FRAC_1_SQRT_2};

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(FockDim::new(1), Err(HilbertError::InvalidDimension(1)));
        assert_eq!(FockDim::new(0), Err(HilbertError::InvalidDimension(0)));
        assert!(FockDim::new(2).is_ok());
    }

    #[test]
    fn ladder_entries() {
        let a = annihilation(dim(3));
        assert_eq!(a.get(0, 1), ONE);
        assert!((a.get(1, 2).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.get(0, 2), ZERO);
        assert_eq!(a.get(1, 0), ZERO);
    }

    #[test]
    fn commutator_is_identity_below_the_edge() {
        let d = dim(7);
        let a = annihilation(d);
        let c = a.commutator(&a.dagger());
        for r in 0..6 {
            for col in 0..6 {
                let expect = if r == col { ONE } else { ZERO };
                assert!((c.get(r, col) - expect).norm() < 1e-14);
            }
        }
        // The truncation edge carries -(dim-1).
        assert!((c.get(6, 6).re + 6.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_entries_and_commutator() {
        let (x, _) = quadratures(dim(2));
        assert!((x.get(0, 1).re - FRAC_1_SQRT_2).abs() < 1e-15);

        let (x, p) = quadratures(dim(4));
        assert!((p.get(1, 2) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!(x.is_hermitian(1e-12) && p.is_hermitian(1e-12));

        let d = dim(9);
        let (x, p) = quadratures(d);
        let c = x.commutator(&p);
        for r in 0..8 {
            for col in 0..8 {
                let expect = if r == col { Complex64::new(0.0, 1.0) } else { ZERO };
                assert!((c.get(r, col) - expect).norm() < 1e-13, "({r},{col})");
            }
        }
    }

    #[test]
    fn number_operator_matches_ladder_product() {
        let d = dim(6);
        let a = annihilation(d);
        let n = &a.dagger() * &a;
        assert!((n.matrix() - number(d).matrix()).norm() < 1e-13);
        assert!(n.is_hermitian(1e-14));
    }

    #[test]
    fn parity_diagonal() {
        let p = parity(dim(3));
        assert_eq!(p.get(0, 0), ONE);
        assert_eq!(p.get(1, 1), -ONE);
        assert_eq!(p.get(2, 2), ONE);
        let one = StateVector::fock(dim(3), 1);
        assert_eq!(p.expectation(&one).re, -1.0);
    }

    #[test]
    fn coherent_vacuum_and_poisson_weight() {
        let vac = coherent_state(ZERO, dim(5)).unwrap();
        assert_eq!(vac, StateVector::vacuum(dim(5)));

        let c = coherent_state(ONE, dim(30)).unwrap();
        assert!((c.amplitudes()[0].norm_sqr() - 1.0 / E).abs() < 1e-12);
    }

    #[test]
    fn coherent_mean_photon_number() {
        let d = dim(40);
        let c = coherent_state(Complex64::new(2.0, 0.0), d).unwrap();
        let mean: f64 = c
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum();
        assert!((mean - 4.0).abs() < 1e-6);
        assert!((number(d).expectation(&c).re - 4.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_truncation_error_carries_context() {
        let err = coherent_state(Complex64::new(3.0, 0.0), dim(30)).unwrap_err();
        assert_eq!(err, HilbertError::Truncation { alpha_abs: 3.0, dim: 30 });
    }

    #[test]
    fn retained_norm_is_high_when_safe() {
        for d in [8usize, 16, 40, 60] {
            let fd = dim(d);
            let alpha = Complex64::from_polar(fd.max_safe_amplitude(), 0.7);
            assert!(coherent_retained_norm(alpha, fd) >= 0.999, "dim {d}");
        }
    }

    #[test]
    fn cat_parity_structure() {
        let d = dim(40);
        let pi = parity(d);
        let even = cat_state(Complex64::new(2.0, 0.0), 1, d).unwrap();
        assert!((pi.expectation(&even).re - 1.0).abs() < 1e-10);
        for (n, a) in even.amplitudes().iter().enumerate() {
            if n % 2 == 1 {
                assert_eq!(*a, ZERO);
            }
        }
        let odd = cat_state(Complex64::new(2.0, 0.0), -1, d).unwrap();
        assert!((pi.expectation(&odd).re + 1.0).abs() < 1e-10);
        assert!(even.inner(&odd).norm() < 1e-10);
    }

    #[test]
    fn cat_limits() {
        let d = dim(10);
        let even = cat_state(Complex64::new(1e-9, 0.0), 1, d).unwrap();
        assert!((even.amplitudes()[0].norm() - 1.0).abs() < 1e-12);
        let zero = cat_state(ZERO, 1, d).unwrap();
        assert_eq!(zero, StateVector::vacuum(d));
        assert_eq!(cat_state(ZERO, -1, d), Err(HilbertError::DegenerateState));
        // Tiny odd cat tends to |1>.
        let odd = cat_state(Complex64::new(1e-6, 0.0), -1, d).unwrap();
        assert!((odd.amplitudes()[1].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cat_matches_coherent_superposition() {
        let d = dim(40);
        let alpha = Complex64::new(1.3, -0.8);
        let plus = coherent_state(alpha, d).unwrap();
        let minus = coherent_state(-alpha, d).unwrap();
        let sum = StateVector::from_amplitudes(d, plus.amplitudes() + minus.amplitudes());
        let cat = cat_state(alpha, 1, d).unwrap();
        assert!((sum.inner(&cat).norm() - 1.0).abs() < 1e-12);
    }
}
