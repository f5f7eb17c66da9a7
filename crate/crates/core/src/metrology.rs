//! Quantum Fisher information over phase-space displacements and quadrature
//! squeezing.
//!
//! Two angle conventions are in use and both are kept as-is:
//!
//! - the QFI generator is `A(θ) = X sinθ + P cosθ`;
//! - the squeezing quadrature is `X cosθ + P sinθ`.
//!
//! The same physical direction therefore has angles `θ` and `π/2 − θ` in the
//! two conventions; see [`qfi_to_variance_angle`].

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::DensityMatrix;
use crate::hilbert::{quadratures, FockDim, Operator};
use crate::spectral::complex_product;

/// QFI of any coherent state; the 0 dB reference for the QFI gain.
pub const COHERENT_QFI: f64 = 2.0;
/// Quadrature variance of the vacuum; the 0 dB reference for squeezing.
pub const VACUUM_VARIANCE: f64 = 0.5;
/// Default lower bound on `λ_k + λ_l` for a pair to enter the QFI sum.
pub const DEFAULT_EIGENSUM_FLOOR: f64 = 1e-12;
/// Number of angles in the brute-force cross-check over `[0, π)`.
pub const GRID_POINTS: usize = 720;
/// Relative agreement required between closed-form and scanned QFI maxima.
pub const QFI_GRID_TOL: f64 = 1e-6;
/// Absolute agreement required between closed-form and scanned variance minima.
pub const VARIANCE_GRID_TOL: f64 = 1e-9;

/// Most negative eigenvalue of `ρ` accepted and treated as zero. Matches the
/// positivity tolerance of [`DensityMatrix`]; integrated states routinely
/// carry round-off negativity just below `−1e−10`.
pub const NEGATIVITY_LIMIT: f64 = -1e-8;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetrologyError {
    #[error("generator is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),
    #[error("dimension mismatch: state has {state} levels, operator {operator}")]
    DimensionMismatch { state: usize, operator: usize },
    #[error("state has eigenvalue {0:e}, below the negativity limit")]
    NegativeEigenvalue(f64),
    #[error("{quantity}: closed form gives {closed:.12e}, grid scan {grid:.12e}")]
    GridMismatch {
        quantity: &'static str,
        closed: f64,
        grid: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiOptions {
    pub eigensum_floor: f64,
    /// Also maximize by scanning [`GRID_POINTS`] angles and fail on disagreement.
    pub grid_check: bool,
}

impl Default for QfiOptions {
    fn default() -> Self {
        Self {
            eigensum_floor: DEFAULT_EIGENSUM_FLOOR,
            grid_check: false,
        }
    }
}

/// Maximum of the QFI over displacement directions.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiResult {
    pub f_max: f64,
    /// Optimal angle in `[0, π)`, generator convention `X sinθ + P cosθ`.
    pub theta_opt: f64,
    /// `10 log10(f_max / 2)`.
    pub gq_db: f64,
    /// Quadratic form over `(sinθ, cosθ)`: `F(θ) = vᵀ M v`.
    pub m_matrix: Matrix2<f64>,
    /// Scanned maximum, when the grid check ran.
    pub grid_max: Option<f64>,
}

/// Minimum quadrature variance.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeResult {
    pub v_min: f64,
    /// Squeezed angle in `[0, π)`, quadrature convention `X cosθ + P sinθ`.
    pub theta_min: f64,
    /// `−10 log10(v_min / 0.5)`; positive means squeezed.
    pub s_db: f64,
    /// Centered covariance of `(X, P)` with the symmetrized cross moment.
    pub covariance: Matrix2<f64>,
    /// Scanned minimum, when the grid check ran.
    pub grid_min: Option<f64>,
}

/// Quadrature operators and their second moments for one basis size.
#[derive(Debug, Clone)]
pub struct QuadratureOps {
    dim: FockDim,
    x: Operator,
    p: Operator,
    x2: Operator,
    p2: Operator,
    /// `(XP + PX)/2`.
    xp: Operator,
}

impl QuadratureOps {
    pub fn new(dim: FockDim) -> Self {
        let (x, p) = quadratures(dim);
        let x2 = &x * &x;
        let p2 = &p * &p;
        let xp = (&(&x * &p) + &(&p * &x)).scale_real(0.5);
        Self { dim, x, p, x2, p2, xp }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn x(&self) -> &Operator {
        &self.x
    }

    pub fn p(&self) -> &Operator {
        &self.p
    }
}

/// Displacement generator `A(θ) = X sinθ + P cosθ`.
pub fn displacement_generator(theta: f64, dim: FockDim) -> Operator {
    let (x, p) = quadratures(dim);
    &x.scale_real(theta.sin()) + &p.scale_real(theta.cos())
}

/// Converts a generator angle to the quadrature angle of the same direction.
pub fn qfi_to_variance_angle(theta: f64) -> f64 {
    wrap_pi(FRAC_PI_2 - theta)
}

/// Inverse of [`qfi_to_variance_angle`].
pub fn variance_to_qfi_angle(theta: f64) -> f64 {
    wrap_pi(FRAC_PI_2 - theta)
}

/// Maps an angle into `[0, π)`.
pub fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

pub fn qfi_decibels(f: f64) -> f64 {
    10.0 * (f / COHERENT_QFI).log10()
}

pub fn squeezing_decibels(v: f64) -> f64 {
    -10.0 * (v / VACUUM_VARIANCE).log10()
}

fn check_state(rho: &DensityMatrix, op: &Operator) -> Result<(), MetrologyError> {
    if rho.dim() != op.dim() {
        return Err(MetrologyError::DimensionMismatch {
            state: rho.dim().get(),
            operator: op.dim().get(),
        });
    }
    Ok(())
}

/// Eigenvalues of `rho` with negatives set to zero, or an error if any is
/// below [`NEGATIVITY_LIMIT`].
fn clamped_eigenvalues(rho: &DensityMatrix) -> Result<Vec<f64>, MetrologyError> {
    let s = rho.spectrum();
    if s.raw_min_eigenvalue() < NEGATIVITY_LIMIT {
        return Err(MetrologyError::NegativeEigenvalue(s.raw_min_eigenvalue()));
    }
    Ok(s.eigenvalues().iter().map(|v| v.max(0.0)).collect())
}

/// `w_kl = 2(λ_k − λ_l)²/(λ_k + λ_l)`, zero below the floor.
fn pair_weights(lambda: &[f64], floor: f64) -> DMatrix<f64> {
    let d = lambda.len();
    DMatrix::from_fn(d, d, |k, l| {
        let s = lambda[k] + lambda[l];
        if s > floor {
            let diff = lambda[k] - lambda[l];
            2.0 * diff * diff / s
        } else {
            0.0
        }
    })
}

/// Quantum Fisher information of `rho` for the Hermitian generator `a`.
pub fn qfi(rho: &DensityMatrix, a: &Operator) -> Result<f64, MetrologyError> {
    qfi_with_floor(rho, a, DEFAULT_EIGENSUM_FLOOR)
}

pub fn qfi_with_floor(rho: &DensityMatrix, a: &Operator, floor: f64) -> Result<f64, MetrologyError> {
    check_state(rho, a)?;
    let herm = a.hermiticity_error();
    if herm > HERMITIAN_TOL {
        return Err(MetrologyError::NonHermitian(herm));
    }
    let w = pair_weights(&clamped_eigenvalues(rho)?, floor);
    let ae = rho.spectrum().to_eigenbasis(a.matrix());
    Ok(w.iter().zip(ae.iter()).map(|(w, z)| w * z.norm_sqr()).sum())
}

/// Spectrum of `ρ` with `X` and `P` in its eigenbasis.
struct EigenQuadratures {
    /// Clamped, for the QFI weights.
    lambda: Vec<f64>,
    /// Unclamped; moments are linear in `ρ` and need no clamping.
    raw: Vec<f64>,
    xe: DMatrix<Complex64>,
    pe: DMatrix<Complex64>,
}

impl EigenQuadratures {
    fn new(rho: &DensityMatrix, ops: &QuadratureOps) -> Result<Self, MetrologyError> {
        check_state(rho, &ops.x)?;
        let lambda = clamped_eigenvalues(rho)?;
        let u = rho.spectrum().eigenvectors();
        let d = lambda.len();
        // a U is a shifted, scaled copy of U; one dense product gives U† a U,
        // and X, P follow from it and its adjoint.
        let au = DMatrix::from_fn(d, d, |m, k| {
            if m + 1 < d {
                u[(m + 1, k)] * ((m + 1) as f64).sqrt()
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let ae = complex_product(&u.adjoint(), &au);
        let aed = ae.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let xe = (&ae + &aed) * Complex64::new(s, 0.0);
        let pe = (aed - ae) * Complex64::new(0.0, s);
        let raw = rho.spectrum().raw_eigenvalues().to_vec();
        Ok(Self { lambda, raw, xe, pe })
    }
}

/// [`qfi_max_with`] with default options.
pub fn qfi_max(rho: &DensityMatrix) -> Result<QfiResult, MetrologyError> {
    qfi_max_with(rho, &QuadratureOps::new(rho.dim()), &QfiOptions::default())
}

pub fn qfi_max_with(
    rho: &DensityMatrix,
    ops: &QuadratureOps,
    opts: &QfiOptions,
) -> Result<QfiResult, MetrologyError> {
    let eq = EigenQuadratures::new(rho, ops)?;
    let w = pair_weights(&eq.lambda, opts.eigensum_floor);
    let mut q = closed_form_qfi(&eq, &w);
    if opts.grid_check {
        q.grid_max = Some(check_qfi(&q, AngleScan::new(&eq, &w).extrema().0)?);
    }
    Ok(q)
}

/// QFI maximum and variance minimum together, sharing one eigenbasis
/// transform and, with `opts.grid_check`, one angle scan.
pub fn evaluate(
    rho: &DensityMatrix,
    ops: &QuadratureOps,
    opts: &QfiOptions,
) -> Result<(QfiResult, SqueezeResult), MetrologyError> {
    let eq = EigenQuadratures::new(rho, ops)?;
    let w = pair_weights(&eq.lambda, opts.eigensum_floor);
    let mut q = closed_form_qfi(&eq, &w);
    let mut s = closed_form_squeezing(rho, ops);
    if opts.grid_check {
        let (f_max, v_min) = AngleScan::new(&eq, &w).extrema();
        q.grid_max = Some(check_qfi(&q, f_max)?);
        s.grid_min = Some(check_variance(&s, v_min)?);
    }
    Ok((q, s))
}

fn closed_form_qfi(eq: &EigenQuadratures, w: &DMatrix<f64>) -> QfiResult {
    let (mut mxx, mut mpp, mut mxp) = (0.0, 0.0, 0.0);
    for ((w, x), p) in w.iter().zip(eq.xe.iter()).zip(eq.pe.iter()) {
        if *w == 0.0 {
            continue;
        }
        mxx += w * x.norm_sqr();
        mpp += w * p.norm_sqr();
        mxp += w * (x * p.conj()).re;
    }
    let m = Matrix2::new(mxx, mxp, mxp, mpp);
    let f_max = extreme_eigenvalues(&m).0.max(0.0);
    // F(θ) = (Mxx + Mpp)/2 + (Mpp − Mxx)/2 cos2θ + Mxp sin2θ.
    let theta_opt = wrap_pi(0.5 * (2.0 * mxp).atan2(mpp - mxx));
    QfiResult {
        f_max,
        theta_opt,
        gq_db: qfi_decibels(f_max),
        m_matrix: m,
        grid_max: None,
    }
}

fn check_qfi(q: &QfiResult, grid: f64) -> Result<f64, MetrologyError> {
    let gap = (q.f_max - grid).abs();
    if gap.is_nan() || gap > QFI_GRID_TOL * q.f_max.max(f64::MIN_POSITIVE) {
        return Err(MetrologyError::GridMismatch {
            quantity: "QFI maximum",
            closed: q.f_max,
            grid,
        });
    }
    Ok(grid)
}

fn check_variance(s: &SqueezeResult, grid: f64) -> Result<f64, MetrologyError> {
    let gap = (s.v_min - grid).abs();
    if gap.is_nan() || gap > VARIANCE_GRID_TOL {
        return Err(MetrologyError::GridMismatch {
            quantity: "variance minimum",
            closed: s.v_min,
            grid,
        });
    }
    Ok(grid)
}

/// Brute-force angle scan. At each generator angle `θ` it forms every
/// matrix element `⟨l|A(θ)|k⟩ = s X_lk + c P_lk` in the eigenbasis and
/// accumulates both the QFI `Σ w_kl |A_lk|²` and the second moment
/// `Σ λ_k |A_lk|²`. Since `A(θ)` is the quadrature at angle `π/2 − θ`, the
/// same pass yields the variance at that quadrature angle.
struct AngleScan {
    w: Vec<f64>,
    lam: Vec<f64>,
    xr: Vec<f64>,
    xi: Vec<f64>,
    pr: Vec<f64>,
    pi: Vec<f64>,
    /// `(λ_k, X_kk, P_kk)` for the mean.
    diag: Vec<(f64, f64, f64)>,
}

impl AngleScan {
    fn new(eq: &EigenQuadratures, w: &DMatrix<f64>) -> Self {
        let d = eq.lambda.len();
        let mut scan = AngleScan {
            w: Vec::new(),
            lam: Vec::new(),
            xr: Vec::new(),
            xi: Vec::new(),
            pr: Vec::new(),
            pi: Vec::new(),
            diag: Vec::new(),
        };
        for k in 0..d {
            for l in 0..d {
                let (x, p) = (eq.xe[(l, k)], eq.pe[(l, k)]);
                let (wk, lk) = (w[(l, k)], eq.raw[k]);
                if (wk == 0.0 && lk == 0.0) || (x.norm_sqr() == 0.0 && p.norm_sqr() == 0.0) {
                    continue;
                }
                scan.w.push(wk);
                scan.lam.push(lk);
                scan.xr.push(x.re);
                scan.xi.push(x.im);
                scan.pr.push(p.re);
                scan.pi.push(p.im);
            }
            if eq.raw[k] != 0.0 {
                scan.diag.push((eq.raw[k], eq.xe[(k, k)].re, eq.pe[(k, k)].re));
            }
        }
        scan
    }

    /// `(F(θ), Var[A(θ)])` for generator angle `θ`.
    fn at(&self, theta: f64) -> (f64, f64) {
        const LANES: usize = 4;
        let (s, c) = theta.sin_cos();
        let mut f = [0.0; LANES];
        let mut second = [0.0; LANES];
        let n = self.w.len();
        let body = n - n % LANES;
        // Independent partial sums let the loop vectorize.
        for base in (0..body).step_by(LANES) {
            for j in 0..LANES {
                let i = base + j;
                let re = s * self.xr[i] + c * self.pr[i];
                let im = s * self.xi[i] + c * self.pi[i];
                let mag = re * re + im * im;
                f[j] += self.w[i] * mag;
                second[j] += self.lam[i] * mag;
            }
        }
        for i in body..n {
            let re = s * self.xr[i] + c * self.pr[i];
            let im = s * self.xi[i] + c * self.pi[i];
            let mag = re * re + im * im;
            f[0] += self.w[i] * mag;
            second[0] += self.lam[i] * mag;
        }
        let mean: f64 = self.diag.iter().map(|(l, x, p)| l * (s * x + c * p)).sum();
        (f.iter().sum(), second.iter().sum::<f64>() - mean * mean)
    }

    /// `(max F, min Var)` over the grid, each refined around its best sample.
    fn extrema(&self) -> (f64, f64) {
        let grid: Vec<(f64, f64)> = (0..GRID_POINTS).map(|i| self.at(grid_angle(i))).collect();
        let f: Vec<f64> = grid.iter().map(|v| v.0).collect();
        let neg_v: Vec<f64> = grid.iter().map(|v| -v.1).collect();
        (
            refine_max(&f, |theta| self.at(theta).0),
            -refine_max(&neg_v, |theta| -self.at(theta).1),
        )
    }
}

fn grid_angle(i: usize) -> f64 {
    i as f64 * PI / GRID_POINTS as f64
}

/// `(λ_max, λ_min)` of a real symmetric 2×2 matrix.
fn extreme_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let r = half.hypot(m[(0, 1)]);
    (mean + r, mean - r)
}

/// Largest of the π-periodic grid samples `values`, refined by one parabolic
/// step through the best sample and its neighbours. The refined value is an
/// actual evaluation of `f`, never an extrapolation.
fn refine_max(values: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    let (best, &fb) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    let fl = values[(best + n - 1) % n];
    let fr = values[(best + 1) % n];
    let curvature = fl - 2.0 * fb + fr;
    if curvature < 0.0 {
        let h = PI / n as f64;
        let offset = 0.5 * (fl - fr) / curvature * h;
        fb.max(f(grid_angle(best) + offset))
    } else {
        fb
    }
}

/// `Var[X cosθ + P sinθ]`.
pub fn variance(rho: &DensityMatrix, theta: f64) -> f64 {
    let c = covariance_matrix(rho, &QuadratureOps::new(rho.dim()));
    let (s, co) = theta.sin_cos();
    co * co * c[(0, 0)] + s * s * c[(1, 1)] + 2.0 * s * co * c[(0, 1)]
}

/// Centered `(X, P)` covariance with `(XP + PX)/2` as the cross moment.
/// Panics on a dimension mismatch.
pub fn covariance_matrix(rho: &DensityMatrix, ops: &QuadratureOps) -> Matrix2<f64> {
    let mx = rho.expectation(&ops.x).re;
    let mp = rho.expectation(&ops.p).re;
    let vxx = rho.expectation(&ops.x2).re - mx * mx;
    let vpp = rho.expectation(&ops.p2).re - mp * mp;
    let cxp = rho.expectation(&ops.xp).re - mx * mp;
    Matrix2::new(vxx, cxp, cxp, vpp)
}

fn closed_form_squeezing(rho: &DensityMatrix, ops: &QuadratureOps) -> SqueezeResult {
    let cov = covariance_matrix(rho, ops);
    let v_min = extreme_eigenvalues(&cov).1;
    // V(θ) = (Vxx + Vpp)/2 + (Vxx − Vpp)/2 cos2θ + Cxp sin2θ.
    let theta_min = wrap_pi(0.5 * (-2.0 * cov[(0, 1)]).atan2(cov[(1, 1)] - cov[(0, 0)]));
    SqueezeResult {
        v_min,
        theta_min,
        s_db: squeezing_decibels(v_min),
        covariance: cov,
        grid_min: None,
    }
}

/// [`squeeze_level_with`] without the grid check.
pub fn squeeze_level(rho: &DensityMatrix) -> SqueezeResult {
    squeeze_level_with(rho, &QuadratureOps::new(rho.dim()), false)
        .expect("squeezing without the grid check cannot fail")
}

/// Minimum quadrature variance from the covariance matrix. With `grid_check`
/// the minimum is also found by scanning angles, each variance evaluated
/// independently in the eigenbasis of `rho`.
pub fn squeeze_level_with(
    rho: &DensityMatrix,
    ops: &QuadratureOps,
    grid_check: bool,
) -> Result<SqueezeResult, MetrologyError> {
    check_state(rho, &ops.x)?;
    let mut s = closed_form_squeezing(rho, ops);
    if grid_check {
        let eq = EigenQuadratures::new(rho, ops)?;
        let w = DMatrix::zeros(eq.lambda.len(), eq.lambda.len());
        s.grid_min = Some(check_variance(&s, AngleScan::new(&eq, &w).extrema().1)?);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{cat_state, coherent_state, StateVector};

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    fn pure_variance(psi: &StateVector, a: &Operator) -> f64 {
        let mean = a.expectation(psi).re;
        let second = (a * a).expectation(psi).re;
        second - mean * mean
    }

    #[test]
    fn generator_special_angles() {
        let d = dim(8);
        let (x, p) = quadratures(d);
        let close = |a: &Operator, b: &Operator| (a.matrix() - b.matrix()).camax() < 1e-14;
        assert!(close(&displacement_generator(FRAC_PI_2, d), &x));
        assert!(close(&displacement_generator(0.0, d), &p));
        let diag = (&x + &p).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(close(&displacement_generator(PI / 4.0, d), &diag));
        let g = displacement_generator(0.7, d);
        assert!(g.is_hermitian(1e-14));
        assert!(close(&displacement_generator(0.7 + PI, d), &g.scale_real(-1.0)));
    }

    #[test]
    fn coherent_and_vacuum_qfi() {
        let d = dim(30);
        let rho = DensityMatrix::from_pure(&coherent_state(Complex64::new(0.7, 0.0), d).unwrap());
        for theta in [0.0, 0.3, 1.1, 2.5] {
            let f = qfi(&rho, &displacement_generator(theta, d)).unwrap();
            assert!((f - 2.0).abs() < 1e-6, "theta {theta}: {f}");
        }
        let vac = DensityMatrix::vacuum(d);
        assert!((qfi(&vac, &quadratures(d).0).unwrap() - 2.0).abs() < 1e-9);
        let r = qfi_max(&vac).unwrap();
        assert!((r.f_max - 2.0).abs() < 1e-9);
        assert!(r.gq_db.abs() < 1e-8);
    }

    #[test]
    fn even_cat_qfi_matches_pure_state_variance() {
        let d = dim(40);
        let psi = cat_state(Complex64::new(2.0, 0.0), 1, d).unwrap();
        let (_, p) = quadratures(d);
        let f = qfi(&DensityMatrix::from_pure(&psi), &p).unwrap();
        let oracle = 4.0 * pure_variance(&psi, &p);
        assert!((f - oracle).abs() < 1e-6 * oracle);
    }

    #[test]
    fn rejects_non_hermitian_generator() {
        let d = dim(6);
        let a = crate::hilbert::annihilation(d);
        let err = qfi(&DensityMatrix::vacuum(d), &a);
        assert!(matches!(err, Err(MetrologyError::NonHermitian(_))));
    }

    #[test]
    fn vacuum_and_coherent_variance() {
        let d = dim(40);
        let vac = DensityMatrix::vacuum(d);
        let coh = DensityMatrix::from_pure(&coherent_state(Complex64::new(2.0, 0.0), d).unwrap());
        for theta in [0.0, 0.4, 1.3, 2.9] {
            assert!((variance(&vac, theta) - 0.5).abs() < 1e-12);
            assert!((variance(&coh, theta) - 0.5).abs() < 1e-9);
        }
        let s = squeeze_level(&vac);
        assert!(s.s_db.abs() < 1e-10);
    }

    #[test]
    fn grid_checks_agree_on_a_cat() {
        let d = dim(40);
        let psi = cat_state(Complex64::from_polar(1.5, 0.3), 1, d).unwrap();
        let rho = DensityMatrix::from_pure(&psi);
        let ops = QuadratureOps::new(d);
        let opts = QfiOptions {
            grid_check: true,
            ..QfiOptions::default()
        };
        let q = qfi_max_with(&rho, &ops, &opts).unwrap();
        assert!(q.grid_max.is_some());
        let s = squeeze_level_with(&rho, &ops, true).unwrap();
        assert!(s.grid_min.is_some());
        let (q2, s2) = evaluate(&rho, &ops, &opts).unwrap();
        assert_eq!(q2, q);
        assert!((s2.grid_min.unwrap() - s.grid_min.unwrap()).abs() < 1e-12);
        // The optimum is attained at the reported angle.
        let at = qfi(&rho, &displacement_generator(q.theta_opt, d)).unwrap();
        assert!((at - q.f_max).abs() < 1e-9 * q.f_max);
        assert!((variance(&rho, s.theta_min) - s.v_min).abs() < 1e-12);
    }

    #[test]
    fn angle_conventions_are_mutually_inverse() {
        for theta in [0.0, 0.2, 1.0, 3.0] {
            let back = variance_to_qfi_angle(qfi_to_variance_angle(theta));
            assert!((back - wrap_pi(theta)).abs() < 1e-12);
        }
        assert!((qfi_to_variance_angle(FRAC_PI_2) - 0.0).abs() < 1e-15);
    }
}
