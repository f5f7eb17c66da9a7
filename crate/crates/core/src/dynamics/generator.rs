use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::check_dims;
use super::{DensityMatrix, DynamicsError, ModelParams};
use crate::hilbert::{annihilation, FockDim, Operator};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `H = ε(a†² + a²) − K a†²a²`.
pub fn build_hamiltonian(params: &ModelParams, dim: FockDim) -> Operator {
    let a = annihilation(dim);
    let a2 = &a * &a;
    let ad2 = a2.dagger();
    let drive = (&ad2 + &a2).scale_real(params.epsilon);
    let kerr = (&ad2 * &a2).scale_real(params.kerr);
    &drive - &kerr
}

fn dissipator(op: &Operator, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let o = op.matrix();
    let od = o.adjoint();
    let odo = &od * o;
    o * rho * &od - (&odo * rho + rho * &odo) * Complex64::new(0.5, 0.0)
}

/// `dρ/dt = −i[H, ρ] + κ D[a]ρ + κ₂ D[a²]ρ`, evaluated with dense products.
///
/// This is the reference form of the generator; [`LindbladGenerator`] is the
/// banded form used by the integrator.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    params: &ModelParams,
    hamiltonian: &Operator,
) -> Result<DMatrix<Complex64>, DynamicsError> {
    check_dims(rho.dim(), hamiltonian.dim())?;
    let r = rho.matrix();
    let h = hamiltonian.matrix();
    let mut out = (h * r - r * h) * (-I);
    if params.kappa != 0.0 {
        let a = annihilation(rho.dim());
        out += dissipator(&a, r) * Complex64::new(params.kappa, 0.0);
    }
    if params.kappa2 != 0.0 {
        let a = annihilation(rho.dim());
        out += dissipator(&(&a * &a), r) * Complex64::new(params.kappa2, 0.0);
    }
    Ok(out)
}

/// Banded Lindblad generator for the model Hamiltonian.
///
/// Writes the master equation as `−i(H_eff ρ − ρ H_eff†) + κ aρa† + κ₂ a²ρa†²`
/// with `H_eff = H − (i/2)(κ a†a + κ₂ a†²a²)`. Every operator involved has at
/// most three nonzero diagonals, so one evaluation costs `O(dim²)`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    d: usize,
    /// Diagonal of `H_eff`.
    h_diag: Vec<Complex64>,
    /// `<m|H|m+2> = ε sqrt((m+1)(m+2))`.
    h_off: Vec<f64>,
    /// `sqrt(κ (m+1))`, so `(κ aρa†)_mn = s1[m] s1[n] ρ_{m+1,n+1}`.
    jump1: Vec<f64>,
    /// `sqrt(κ₂ (m+1)(m+2))`.
    jump2: Vec<f64>,
}

impl LindbladGenerator {
    pub fn new(params: &ModelParams, dim: FockDim) -> Self {
        let d = dim.get();
        let h_diag = (0..d)
            .map(|n| {
                let n = n as f64;
                let pairs = n * (n - 1.0);
                Complex64::new(-params.kerr * pairs, -0.5 * (params.kappa * n + params.kappa2 * pairs))
            })
            .collect();
        let h_off = (0..d.saturating_sub(2))
            .map(|m| params.epsilon * (((m + 1) * (m + 2)) as f64).sqrt())
            .collect();
        let jump1 = (0..d.saturating_sub(1))
            .map(|m| (params.kappa * (m + 1) as f64).sqrt())
            .collect();
        let jump2 = (0..d.saturating_sub(2))
            .map(|m| (params.kappa2 * ((m + 1) * (m + 2)) as f64).sqrt())
            .collect();
        Self {
            d,
            h_diag,
            h_off,
            jump1,
            jump2,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Evaluates the generator on a column-major `dim x dim` matrix.
    pub fn apply(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.d;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        let at = |m: usize, n: usize| rho[m + n * d];
        for n in 0..d {
            let hd_n = self.h_diag[n].conj();
            for m in 0..d {
                let r = at(m, n);
                // H_eff ρ
                let mut left = self.h_diag[m] * r;
                if m + 2 < d {
                    left += at(m + 2, n) * self.h_off[m];
                }
                if m >= 2 {
                    left += at(m - 2, n) * self.h_off[m - 2];
                }
                // ρ H_eff†
                let mut right = r * hd_n;
                if n + 2 < d {
                    right += at(m, n + 2) * self.h_off[n];
                }
                if n >= 2 {
                    right += at(m, n - 2) * self.h_off[n - 2];
                }
                let mut v = (left - right) * (-I);
                if m + 1 < d && n + 1 < d {
                    v += at(m + 1, n + 1) * (self.jump1[m] * self.jump1[n]);
                }
                if m + 2 < d && n + 2 < d {
                    v += at(m + 2, n + 2) * (self.jump2[m] * self.jump2[n]);
                }
                out[m + n * d] = v;
            }
        }
    }

    pub fn apply_matrix(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.d, self.d);
        self.apply(rho.as_slice(), out.as_mut_slice());
        out
    }

    /// Evaluates the generator on an [`EvenLayout`]-packed matrix.
    pub fn apply_packed(&self, layout: &EvenLayout, rho: &[Complex64], out: &mut [Complex64]) {
        let d = self.d;
        debug_assert_eq!(layout.dim(), d);
        debug_assert_eq!(rho.len(), layout.len());
        for n in 0..d {
            let hd_n = self.h_diag[n].conj();
            let col = layout.offset[n];
            let len = layout.offset[n + 1] - col;
            let first = n % 2;
            for j in 0..len {
                let m = first + 2 * j;
                let idx = col + j;
                let r = rho[idx];
                let mut left = self.h_diag[m] * r;
                if m + 2 < d {
                    left += rho[idx + 1] * self.h_off[m];
                }
                if m >= 2 {
                    left += rho[idx - 1] * self.h_off[m - 2];
                }
                let mut right = r * hd_n;
                if n + 2 < d {
                    right += rho[layout.offset[n + 2] + j] * self.h_off[n];
                }
                if n >= 2 {
                    right += rho[layout.offset[n - 2] + j] * self.h_off[n - 2];
                }
                let mut v = (left - right) * (-I);
                if m + 1 < d && n + 1 < d {
                    // Row m + 1 of column n + 1, which starts at row (n + 1) % 2.
                    let k = layout.offset[n + 1] + (m + 1 - (n + 1) % 2) / 2;
                    v += rho[k] * (self.jump1[m] * self.jump1[n]);
                }
                if m + 2 < d && n + 2 < d {
                    v += rho[layout.offset[n + 2] + j + 1] * (self.jump2[m] * self.jump2[n]);
                }
                out[idx] = v;
            }
        }
    }
}

/// Column-major storage of the entries `(m, n)` with `m − n` even.
///
/// The generator never couples these to entries with odd `m − n`, so a state
/// without odd coherences (anything diagonal in the Fock basis, for example)
/// keeps that structure exactly and can be integrated in half the storage.
#[derive(Debug, Clone)]
pub struct EvenLayout {
    d: usize,
    /// `offset[n]` is the packed index of `(n % 2, n)`; `offset[d]` is the length.
    offset: Vec<usize>,
}

impl EvenLayout {
    pub fn new(dim: FockDim) -> Self {
        let d = dim.get();
        let mut offset = Vec::with_capacity(d + 1);
        let mut acc = 0;
        for n in 0..d {
            offset.push(acc);
            acc += (d - n % 2).div_ceil(2);
        }
        offset.push(acc);
        Self { d, offset }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.offset[self.d]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether every entry with odd `m − n` is exactly zero.
    pub fn fits(&self, mat: &DMatrix<Complex64>) -> bool {
        let zero = Complex64::new(0.0, 0.0);
        (0..self.d).all(|n| (0..self.d).all(|m| (m + n) % 2 == 0 || mat[(m, n)] == zero))
    }

    pub fn pack(&self, mat: &DMatrix<Complex64>) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.len());
        for n in 0..self.d {
            for m in (n % 2..self.d).step_by(2) {
                out.push(mat[(m, n)]);
            }
        }
        out
    }

    pub fn unpack(&self, packed: &[Complex64]) -> DMatrix<Complex64> {
        let mut mat = DMatrix::zeros(self.d, self.d);
        for n in 0..self.d {
            let col = self.offset[n];
            for (j, m) in (n % 2..self.d).step_by(2).enumerate() {
                mat[(m, n)] = packed[col + j];
            }
        }
        mat
    }
}
