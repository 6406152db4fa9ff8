//! Dense linear-algebra helpers built on `nalgebra`.
//!
//! All solves against covariance matrices go through [`Cholesky`]; no explicit
//! inverse is ever formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    /// Factorises a symmetric matrix, reading only its lower triangle.
    ///
    /// Fails with [`Error::NotPositiveDefinite`] naming the first pivot whose
    /// Schur complement is not strictly positive.
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        let mut l = a.lower_triangle();
        // Left-looking column variant: column-major friendly.
        for j in 0..n {
            for k in 0..j {
                let ljk = l[(j, k)];
                if ljk != 0.0 {
                    for i in j..n {
                        l[(i, j)] -= l[(i, k)] * ljk;
                    }
                }
            }
            let d = l[(j, j)];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let s = d.sqrt();
            l[(j, j)] = s;
            for i in j + 1..n {
                l[(i, j)] /= s;
            }
        }
        Ok(Self { l })
    }

    /// Wraps an existing lower-triangular factor with a positive diagonal.
    pub fn from_factor(l: DMatrix<f64>) -> Self {
        debug_assert!(l.is_square());
        Self { l }
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// `L⁻¹ b`.
    pub fn solve_lower(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        x
    }

    /// `L⁻¹ B` for a matrix right-hand side.
    pub fn solve_lower_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        x
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.solve_lower(b);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// `A⁻¹ B`.
    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.solve_lower_mat(b);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// `log det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `bᵀ A⁻¹ b`.
    pub fn inv_quad(&self, b: &DVector<f64>) -> f64 {
        self.solve_lower(b).norm_squared()
    }

    /// `tr(A⁻¹ B)` for symmetric positive semidefinite `B = M Mᵀ`, given `M`.
    pub fn trace_inv_gram(&self, m: &DMatrix<f64>) -> f64 {
        self.solve_lower_mat(m).norm_squared()
    }
}

/// Symmetric eigenvalues of `a`, clipped at zero when they are negative by no
/// more than `1e-10 · |tr a|`.
pub fn psd_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let sym = symmetrize(a);
    let trace = sym.trace().abs().max(f64::MIN_POSITIVE);
    let mut ev = sym.symmetric_eigenvalues();
    for e in ev.iter_mut() {
        if *e < 0.0 {
            if *e < -1e-10 * trace {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *e });
            }
            *e = 0.0;
        }
    }
    Ok(ev)
}

/// Principal square root of a symmetric positive semidefinite matrix.
pub fn psd_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = symmetrize(a);
    let trace = sym.trace().abs().max(f64::MIN_POSITIVE);
    let eig = sym.symmetric_eigen();
    let mut roots = eig.eigenvalues.clone();
    for e in roots.iter_mut() {
        if *e < 0.0 {
            if *e < -1e-10 * trace {
                return Err(Error::NotPositiveSemidefinite { eigenvalue: *e });
            }
            *e = 0.0;
        }
        *e = e.sqrt();
    }
    let v = &eig.eigenvectors;
    let scaled = v * DMatrix::from_diagonal(&roots);
    Ok(symmetrize(&(scaled * v.transpose())))
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Sub-matrix `a[idx, idx]`.
pub fn principal_submatrix(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| a[(idx[i], idx[j])])
}

/// Sub-matrix `a[rows, cols]`.
pub fn submatrix(a: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])])
}
