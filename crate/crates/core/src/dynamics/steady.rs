//! Analytic and numeric steady states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{DensityMatrix, DynamicsError, LindbladGenerator, ModelParams};
use crate::hilbert::{coherent_state, FockDim};

/// Regime factor standing in for "much less than" in the validity checks.
pub const REGIME_FACTOR: f64 = 0.1;

/// Residual bound `‖L(ρ)‖ ≤ RESIDUAL_TOL ‖L‖` for numeric steady states.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Complex amplitude `α = r0 e^{i θ0}` of a coherent steady-state component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyAmplitude {
    pub alpha: Complex64,
    pub r0: f64,
    pub theta0: f64,
    pub validity_ok: bool,
}

impl SteadyAmplitude {
    fn from_alpha(alpha: Complex64, validity_ok: bool) -> Self {
        Self {
            alpha,
            r0: alpha.norm(),
            theta0: alpha.arg(),
            validity_ok,
        }
    }
}

/// Amplitude of the quasi-degenerate coherent eigenstates `|±α0>` of the
/// lossy Kerr Hamiltonian without two-photon loss.
///
/// `r0 = ((4ε² − κ²/4)/(4K²))^{1/4}` and `tan 2θ0 = κ/sqrt(16ε² − κ²)`, with
/// `θ0` on the principal branch `[0, π/4)`. The approximation holds for
/// `κ ≪ 8K r0²`, encoded as `κ < 0.1 · 8K r0²`.
pub fn steady_amplitude_tpd_kerr_spl(params: &ModelParams) -> Result<SteadyAmplitude, DynamicsError> {
    params.validate()?;
    let ModelParams { epsilon, kerr, kappa, .. } = *params;
    if kerr == 0.0 {
        return Err(DynamicsError::ModelMismatch(
            "K = 0: the Kerr amplitude is undefined, use the two-photon-loss amplitude".into(),
        ));
    }
    let disc = 16.0 * epsilon * epsilon - kappa * kappa;
    if disc <= 0.0 {
        return Err(DynamicsError::Regime(format!(
            "16 epsilon^2 = {} does not exceed kappa^2 = {}",
            16.0 * epsilon * epsilon,
            kappa * kappa
        )));
    }
    let r0 = ((4.0 * epsilon * epsilon - kappa * kappa / 4.0) / (4.0 * kerr * kerr)).powf(0.25);
    let theta0 = 0.5 * (kappa / disc.sqrt()).atan();
    let validity_ok = kappa < REGIME_FACTOR * 8.0 * kerr * r0 * r0;
    Ok(SteadyAmplitude {
        alpha: Complex64::from_polar(r0, theta0),
        r0,
        theta0,
        validity_ok,
    })
}

/// Cat-manifold amplitude `α = sqrt(z)`, `z = ε/(K + iκ₂/2)`, exact without
/// single-photon loss.
///
/// `validity_ok` reports whether the single-photon loss is small against the
/// confinement rate, `κ < 0.1 · 8 |K + iκ₂/2| |α|²`, which is the analogue of
/// the Kerr-branch regime condition.
pub fn steady_amplitude_tpd_etpl(params: &ModelParams) -> Result<SteadyAmplitude, DynamicsError> {
    params.validate()?;
    if params.kerr == 0.0 && params.kappa2 == 0.0 {
        return Err(DynamicsError::UndefinedAmplitude);
    }
    let denom = Complex64::new(params.kerr, 0.5 * params.kappa2);
    let z = Complex64::new(params.epsilon, 0.0) / denom;
    let alpha = z.sqrt();
    let validity_ok = params.kappa < REGIME_FACTOR * 8.0 * denom.norm() * alpha.norm_sqr();
    Ok(SteadyAmplitude::from_alpha(alpha, validity_ok))
}

/// `½(|α><α| + |−α><−α|)`.
pub fn classical_mixture(alpha: Complex64, dim: FockDim) -> Result<DensityMatrix, DynamicsError> {
    let plus = coherent_state(alpha, dim)?;
    let minus = coherent_state(-alpha, dim)?;
    let mat = (plus.projector() + minus.projector()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::unchecked(dim, mat))
}

/// Unique steady state of the full master equation, `L(ρ) = 0` with `tr ρ = 1`.
///
/// Every term of the generator preserves `m − n mod 2` of a matrix element
/// `ρ_mn`, and the trace lives in the even block, so only that block is
/// assembled. One redundant population equation is replaced by the trace
/// condition and the square system is solved by LU.
///
/// Without single-photon loss photon-number parity is conserved and each
/// parity sector carries its own steady state; that case is rejected with
/// [`DynamicsError::AmbiguousSteadyState`]. Use
/// [`numeric_steady_state_in_sector`] there.
pub fn numeric_steady_state(params: &ModelParams, dim: FockDim) -> Result<DensityMatrix, DynamicsError> {
    params.validate_rates()?;
    if !params.has_dissipation() {
        return Err(DynamicsError::InvalidParams(
            "a steady state needs kappa > 0 or kappa2 > 0".into(),
        ));
    }
    if params.kappa == 0.0 {
        return Err(DynamicsError::AmbiguousSteadyState);
    }
    solve_block(params, dim, |m, n| (m + n) % 2 == 0)
}

/// Steady state inside one photon-number-parity sector when single-photon
/// loss is absent. `parity_sign` is `+1` (even) or `−1` (odd).
pub fn numeric_steady_state_in_sector(
    params: &ModelParams,
    dim: FockDim,
    parity_sign: i32,
) -> Result<DensityMatrix, DynamicsError> {
    params.validate_rates()?;
    if parity_sign != 1 && parity_sign != -1 {
        return Err(DynamicsError::InvalidParams(format!(
            "parity sign must be +1 or -1, got {parity_sign}"
        )));
    }
    if params.kappa != 0.0 {
        return Err(DynamicsError::ModelMismatch(
            "single-photon loss couples the parity sectors; use numeric_steady_state".into(),
        ));
    }
    if params.kappa2 == 0.0 {
        return Err(DynamicsError::InvalidParams(
            "a parity-sector steady state needs kappa2 > 0".into(),
        ));
    }
    let s = if parity_sign == 1 { 0 } else { 1 };
    solve_block(params, dim, move |m, n| m % 2 == s && n % 2 == s)
}

fn solve_block(
    params: &ModelParams,
    dim: FockDim,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<DensityMatrix, DynamicsError> {
    let d = dim.get();
    let generator = LindbladGenerator::new(params, dim);
    let cells: Vec<(usize, usize)> = (0..d)
        .flat_map(|n| (0..d).map(move |m| (m, n)))
        .filter(|&(m, n)| keep(m, n))
        .collect();
    let size = cells.len();

    let zero = Complex64::new(0.0, 0.0);
    let mut lmat = DMatrix::from_element(size, size, zero);
    let mut basis = vec![zero; d * d];
    let mut image = vec![zero; d * d];
    for (col, &(p, q)) in cells.iter().enumerate() {
        basis[p + q * d] = Complex64::new(1.0, 0.0);
        generator.apply(&basis, &mut image);
        basis[p + q * d] = zero;
        for (row, &(m, n)) in cells.iter().enumerate() {
            lmat[(row, col)] = image[m + n * d];
        }
    }
    let l_norm = lmat.norm();

    // The population equations sum to zero, so the first one is redundant.
    let trace_row = cells
        .iter()
        .position(|&(m, n)| m == n)
        .ok_or_else(|| DynamicsError::SteadySolve("block contains no populations".into()))?;
    for (col, &(m, n)) in cells.iter().enumerate() {
        lmat[(trace_row, col)] = if m == n { Complex64::new(1.0, 0.0) } else { zero };
    }
    let mut rhs = DVector::from_element(size, zero);
    rhs[trace_row] = Complex64::new(1.0, 0.0);

    let sol = lmat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DynamicsError::SteadySolve("singular Liouvillian block".into()))?;
    let mut mat = DMatrix::from_element(d, d, zero);
    for (k, &(m, n)) in cells.iter().enumerate() {
        mat[(m, n)] = sol[k];
    }
    let (approx, _) = DensityMatrix::hermitize_and_normalize(dim, mat);

    let residual = generator.apply_matrix(approx.matrix()).norm();
    if residual > RESIDUAL_TOL * l_norm {
        return Err(DynamicsError::SteadySolve(format!(
            "residual {residual:e} exceeds {RESIDUAL_TOL:e} x |L| = {:e}",
            RESIDUAL_TOL * l_norm
        )));
    }
    DensityMatrix::new(approx.into_matrix())
}
