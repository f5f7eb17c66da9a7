//! Eigendecomposition of Hermitian matrices, eigenvalues sorted descending.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigenvalues at or above this (negative) value are clamped to zero.
pub const CLAMP_FLOOR: f64 = -1e-10;

/// Entries smaller than this fraction of the largest are zeroed before the
/// decomposition. Squares of smaller values underflow in the Householder
/// norms and poison the eigenvectors with NaN.
const FLUSH_RATIO: f64 = 1e-40;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    raw_eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<Complex64>,
    raw_min: f64,
}

impl SpectralDecomposition {
    /// Decomposes the Hermitian part of `mat`. Eigenvalues in `(CLAMP_FLOOR, 0)`
    /// are set to 0; more negative values are kept and reported by
    /// [`Self::raw_min_eigenvalue`].
    ///
    /// Matrices that do not mix even and odd indices are decomposed block by
    /// block.
    pub fn of_hermitian(mat: &DMatrix<Complex64>) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let mut herm = (mat + mat.adjoint()) * Complex64::new(0.5, 0.0);
        let cutoff = herm.camax() * FLUSH_RATIO;
        herm.apply(|z| {
            if z.norm() < cutoff {
                *z = zero;
            }
        });
        let d = mat.nrows();
        let parity_blocks = d >= 4
            && (0..d).all(|c| (0..d).all(|r| (r + c) % 2 == 0 || herm[(r, c)] == zero));
        // (eigenvalue, eigenvector in the full basis)
        let mut pairs: Vec<(f64, DVector<Complex64>)> = Vec::with_capacity(d);
        if parity_blocks {
            for start in 0..2 {
                let idx: Vec<usize> = (start..d).step_by(2).collect();
                let block = herm.select_rows(&idx).select_columns(&idx);
                let eig = SymmetricEigen::new(block);
                for k in 0..idx.len() {
                    let mut v = DVector::zeros(d);
                    for (i, &row) in idx.iter().enumerate() {
                        v[row] = eig.eigenvectors[(i, k)];
                    }
                    pairs.push((eig.eigenvalues[k], v));
                }
            }
        } else {
            let eig = SymmetricEigen::new(herm);
            for k in 0..d {
                pairs.push((eig.eigenvalues[k], eig.eigenvectors.column(k).into_owned()));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut vecs = DMatrix::zeros(d, d);
        let mut vals = Vec::with_capacity(d);
        for (col, (val, vec)) in pairs.into_iter().enumerate() {
            vecs.set_column(col, &vec);
            vals.push(val);
        }
        let raw_min = vals.last().copied().unwrap_or(0.0);
        let raw_eigenvalues = vals.clone();
        for v in &mut vals {
            if *v < 0.0 && *v > CLAMP_FLOOR {
                *v = 0.0;
            }
        }
        Self {
            eigenvalues: vals,
            raw_eigenvalues,
            eigenvectors: vecs,
            raw_min,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvalues before clamping, same order.
    pub fn raw_eigenvalues(&self) -> &[f64] {
        &self.raw_eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<Complex64> {
        &self.eigenvectors
    }

    /// Smallest eigenvalue before clamping.
    pub fn raw_min_eigenvalue(&self) -> f64 {
        self.raw_min
    }

    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let diag = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&v| Complex64::new(v, 0.0)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&diag) * self.eigenvectors.adjoint()
    }

    /// `U^dagger O U`: the matrix of `op` in the eigenbasis.
    pub fn to_eigenbasis(&self, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let u = &self.eigenvectors;
        complex_product(&u.adjoint(), &complex_product(op, u))
    }

    /// Applies `f` to the eigenvalues and rebuilds the matrix.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<Complex64> {
        let diag = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&v| Complex64::new(f(v), 0.0)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&diag) * self.eigenvectors.adjoint()
    }
}

/// `a b` assembled from four real products, which take the blocked real
/// kernel instead of the generic complex loop.
pub fn complex_product(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    re.zip_map(&im, Complex64::new)
}
