//! Wigner functions and photon-number statistics.
//!
//! Phase-space coordinates follow `α = (x + ip)/√2`, so the vacuum Wigner
//! function is `exp(−x² − p²)/π` and `∫∫ W dx dp = 1`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::DensityMatrix;

/// Required agreement of `π W(0, 0)` with `tr(Π ρ)`.
pub const ORIGIN_CHECK_TOL: f64 = 1e-8;
/// Populations are clamped from below at this value.
pub const POPULATION_FLOOR: f64 = -1e-10;

const UNIFORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PhaseSpaceError {
    #[error("{0} axis is empty")]
    EmptyAxis(&'static str),
    #[error("{0} axis is not uniformly spaced and increasing")]
    NonUniform(&'static str),
    #[error("{axis} spacing {spacing} exceeds {limit:.6} = pi/(2 sqrt(2 dim)); the grid is too coarse for the basis")]
    Aliasing {
        axis: &'static str,
        spacing: f64,
        limit: f64,
    },
    #[error("origin self-check failed: pi W(0,0) = {pi_w0:.12e}, parity = {parity:.12e}")]
    OriginCheck { pi_w0: f64, parity: f64 },
}

/// Uniformly spaced axis `[start, end]` with `n` points.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / (n - 1) as f64;
            (0..n).map(|i| start + i as f64 * step).collect()
        }
    }
}

/// The 121 × 121 grid over `[−5, 5]²`.
pub fn default_axis() -> Vec<f64> {
    linspace(-5.0, 5.0, 121)
}

/// Wigner function sampled on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    /// `values[(i, j)] = W(x_axis[i], p_axis[j])`.
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    fn step(axis: &[f64]) -> f64 {
        if axis.len() < 2 {
            1.0
        } else {
            axis[1] - axis[0]
        }
    }

    /// Riemann sum `Σ W Δx Δp`.
    pub fn integral(&self) -> f64 {
        self.values.sum() * Self::step(&self.x_axis) * Self::step(&self.p_axis)
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }

    pub fn max(&self) -> f64 {
        self.values.max()
    }

    /// `Σ_p W(x, p) Δp` for each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = Self::step(&self.p_axis);
        self.values.row_iter().map(|r| r.sum() * dp).collect()
    }

    /// Polar angle, folded into `(−π/2, π/2]`, of the grid point with the
    /// largest `|W|` at radius at least `min_radius`. The fold identifies the
    /// two lobes of a state symmetric under `α → −α`.
    pub fn lobe_angle(&self, min_radius: f64) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for (i, &x) in self.x_axis.iter().enumerate() {
            for (j, &p) in self.p_axis.iter().enumerate() {
                if x.hypot(p) < min_radius {
                    continue;
                }
                let w = self.values[(i, j)].abs();
                if best.is_none_or(|(bw, _)| w > bw) {
                    best = Some((w, p.atan2(x)));
                }
            }
        }
        best.map(|(_, a)| fold_half_turn(a))
    }
}

fn fold_half_turn(a: f64) -> f64 {
    let mut a = a;
    while a > PI / 2.0 {
        a -= PI;
    }
    while a <= -PI / 2.0 {
        a += PI;
    }
    a
}

fn check_axis(axis: &[f64], name: &'static str, limit: f64) -> Result<(), PhaseSpaceError> {
    if axis.is_empty() {
        return Err(PhaseSpaceError::EmptyAxis(name));
    }
    if axis.len() < 2 {
        return Ok(());
    }
    let step = axis[1] - axis[0];
    let uniform = step > 0.0
        && axis
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= UNIFORM_TOL * step.abs().max(1.0));
    if !uniform {
        return Err(PhaseSpaceError::NonUniform(name));
    }
    if step > limit {
        return Err(PhaseSpaceError::Aliasing {
            axis: name,
            spacing: step,
            limit,
        });
    }
    Ok(())
}

/// Largest grid spacing accepted for a `dim`-level state.
pub fn max_spacing(dim: usize) -> f64 {
    PI / (2.0 * (2.0 * dim as f64).sqrt())
}

/// Wigner function at a single phase-space point.
///
/// Sums `ρ_mn W_mn(α)` with the displaced-number-state functions
/// `W_mn ∝ α^{n−m} L_m^{n−m}(4|α|²) e^{−2|α|²}` generated by their upward
/// recurrence in `m` and `n`.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let d = rho.dim().get();
    let mut w = vec![Complex64::new(0.0, 0.0); d];
    wigner_point_with(rho.matrix(), x, p, &mut w)
}

fn wigner_point_with(rho: &DMatrix<Complex64>, x: f64, p: f64, w: &mut [Complex64]) -> f64 {
    let d = rho.nrows();
    let a = Complex64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
    let a2 = a * 2.0;
    let a2c = a2.conj();
    let sqrt: Vec<f64> = (0..d).map(|k| (k as f64).sqrt()).collect();
    w[0] = Complex64::new((-2.0 * a.norm_sqr()).exp() / PI, 0.0);
    let mut total = rho[(0, 0)].re * w[0].re;
    for n in 1..d {
        w[n] = a2 * w[n - 1] / sqrt[n];
        total += 2.0 * (rho[(0, n)] * w[n]).re;
    }
    for m in 1..d {
        let mut temp = w[m];
        w[m] = (a2c * temp - w[m - 1] * sqrt[m]) / sqrt[m];
        total += (rho[(m, m)] * w[m]).re;
        for n in m + 1..d {
            let next = (a2 * w[n - 1] - temp * sqrt[m]) / sqrt[n];
            temp = w[n];
            w[n] = next;
            total += 2.0 * (rho[(m, n)] * w[n]).re;
        }
    }
    total
}

/// Wigner function of `rho` on the grid `x_axis × p_axis`.
///
/// Both axes must be uniform with spacing at most [`max_spacing`]. As a
/// self-check, `π W(0, 0)` is compared with the parity `tr(Π ρ)`.
pub fn wigner(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> Result<WignerGrid, PhaseSpaceError> {
    let d = rho.dim().get();
    let limit = max_spacing(d);
    check_axis(x_axis, "x", limit)?;
    check_axis(p_axis, "p", limit)?;
    let parity: f64 = (0..d)
        .map(|n| if n % 2 == 0 { rho.get(n, n).re } else { -rho.get(n, n).re })
        .sum();
    let pi_w0 = PI * wigner_point(rho, 0.0, 0.0);
    if (pi_w0 - parity).abs() > ORIGIN_CHECK_TOL {
        return Err(PhaseSpaceError::OriginCheck { pi_w0, parity });
    }
    let mat = rho.matrix();
    let columns: Vec<Vec<f64>> = x_axis
        .par_iter()
        .map(|&x| {
            let mut buf = vec![Complex64::new(0.0, 0.0); d];
            p_axis.iter().map(|&p| wigner_point_with(mat, x, p, &mut buf)).collect()
        })
        .collect();
    let values = DMatrix::from_fn(x_axis.len(), p_axis.len(), |i, j| columns[i][j]);
    Ok(WignerGrid {
        x_axis: x_axis.to_vec(),
        p_axis: p_axis.to_vec(),
        values,
    })
}

/// Fock-state populations `P_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    pub probabilities: Vec<f64>,
}

impl PhotonDistribution {
    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn odd_population(&self) -> f64 {
        self.probabilities.iter().skip(1).step_by(2).sum()
    }

    pub fn mean(&self) -> f64 {
        self.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// `P_n = Re ρ_nn`, clamped below at [`POPULATION_FLOOR`].
pub fn photon_distribution(rho: &DensityMatrix) -> PhotonDistribution {
    PhotonDistribution {
        probabilities: (0..rho.dim().get())
            .map(|n| rho.get(n, n).re.max(POPULATION_FLOOR))
            .collect(),
    }
}

/// Total population of odd Fock states.
pub fn odd_population(rho: &DensityMatrix) -> f64 {
    photon_distribution(rho).odd_population()
}

/// Position density `<x|ρ|x>` for the quadrature `X = (a + a†)/√2`, from the
/// Hermite functions of the truncated basis.
pub fn position_density(rho: &DensityMatrix, x: f64) -> f64 {
    let d = rho.dim().get();
    let mut psi = vec![0.0; d];
    psi[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if d > 1 {
        psi[1] = std::f64::consts::SQRT_2 * x * psi[0];
    }
    for n in 1..d - 1 {
        let k = n as f64;
        psi[n + 1] = (2.0 / (k + 1.0)).sqrt() * x * psi[n] - (k / (k + 1.0)).sqrt() * psi[n - 1];
    }
    let mut total = 0.0;
    for m in 0..d {
        for n in 0..d {
            total += (rho.get(m, n) * psi[m] * psi[n]).re;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::classical_mixture;
    use crate::hilbert::{cat_state, coherent_state, FockDim};

    fn dim(d: usize) -> FockDim {
        FockDim::new(d).unwrap()
    }

    #[test]
    fn vacuum_peak_and_normalization() {
        let rho = DensityMatrix::vacuum(dim(20));
        assert!((wigner_point(&rho, 0.0, 0.0) - 1.0 / PI).abs() < 1e-14);
        let axis = default_axis();
        let g = wigner(&rho, &axis, &axis).unwrap();
        assert!((g.integral() - 1.0).abs() < 2e-2);
        assert!(g.max() <= (1.0 + 1e-6) / PI);
    }

    #[test]
    fn even_cat_origin_value() {
        for alpha in [0.5, 1.3, 2.0] {
            let rho = DensityMatrix::from_pure(&cat_state(Complex64::new(alpha, 0.3), 1, dim(40)).unwrap());
            assert!((wigner_point(&rho, 0.0, 0.0) - 1.0 / PI).abs() < 1e-10);
        }
    }

    #[test]
    fn mixture_is_nonnegative() {
        let rho = classical_mixture(Complex64::new(2.0, 0.0), dim(40)).unwrap();
        let axis = default_axis();
        let g = wigner(&rho, &axis, &axis).unwrap();
        assert!(g.min() >= -1e-6);
    }

    #[test]
    fn grid_validation() {
        let rho = DensityMatrix::vacuum(dim(60));
        let fine = default_axis();
        let coarse = linspace(-5.0, 5.0, 21);
        assert!(matches!(wigner(&rho, &coarse, &fine), Err(PhaseSpaceError::Aliasing { .. })));
        assert!(matches!(wigner(&rho, &[], &fine), Err(PhaseSpaceError::EmptyAxis(_))));
        let bumpy = vec![0.0, 0.05, 0.07, 0.1];
        assert!(matches!(wigner(&rho, &bumpy, &fine), Err(PhaseSpaceError::NonUniform(_))));
    }

    #[test]
    fn populations() {
        let d = dim(30);
        let p = photon_distribution(&DensityMatrix::fock(d, 1));
        assert_eq!(p.probabilities[1], 1.0);
        assert_eq!(p.total(), 1.0);
        let coh = DensityMatrix::from_pure(&coherent_state(Complex64::new(1.0, 0.0), d).unwrap());
        assert!((photon_distribution(&coh).probabilities[0] - (-1.0f64).exp()).abs() < 1e-12);
        let cat = DensityMatrix::from_pure(&cat_state(Complex64::new(2.0, 0.0), 1, d).unwrap());
        let pc = photon_distribution(&cat);
        assert!(pc.probabilities.iter().skip(1).step_by(2).all(|p| p.abs() < 1e-12));
        assert_eq!(odd_population(&DensityMatrix::fock(d, 1)), 1.0);
    }

    #[test]
    fn mixture_odd_population() {
        let rho = classical_mixture(Complex64::new(2.0, 0.0), dim(40)).unwrap();
        let expected = (1.0 - (-8.0f64).exp()) / 2.0;
        assert!((odd_population(&rho) - expected).abs() < 1e-10);
    }

    #[test]
    fn lobe_angle_of_rotated_cat() {
        let alpha = Complex64::from_polar(2.0, -PI / 4.0);
        let rho = DensityMatrix::from_pure(&cat_state(alpha, 1, dim(40)).unwrap());
        let axis = linspace(-4.0, 4.0, 201);
        let g = wigner(&rho, &axis, &axis).unwrap();
        assert!((g.lobe_angle(1.0).unwrap() + PI / 4.0).abs() < 0.05);
    }
}
