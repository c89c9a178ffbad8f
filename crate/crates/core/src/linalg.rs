//! Small dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A symmetric positive definite shape matrix with cached factorizations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    log_det: f64,
    sqrt: DMatrix<f64>,
    inv_sqrt: DMatrix<f64>,
}

impl SpdMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || matrix.ncols() != n {
            return Err(Error::InvalidDensity(format!(
                "shape matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > 1e-12 * matrix.amax().max(1.0) || matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDensity(
                "shape matrix must be finite and symmetric".into(),
            ));
        }
        let eig = matrix.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidDensity(format!(
                "shape matrix must be positive definite (eigenvalues {:?})",
                eig.eigenvalues.as_slice()
            )));
        }
        let q = &eig.eigenvectors;
        let build = |f: &dyn Fn(f64) -> f64| {
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
            let m = q * d * q.transpose();
            (&m + m.transpose()) * 0.5
        };
        let inverse = build(&|l| 1.0 / l);
        let sqrt = build(&|l: f64| l.sqrt());
        let inv_sqrt = build(&|l: f64| 1.0 / l.sqrt());
        let log_det = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        Ok(Self {
            matrix,
            inverse,
            log_det,
            sqrt,
            inv_sqrt,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }
    pub fn log_det(&self) -> f64 {
        self.log_det
    }
    pub fn det(&self) -> f64 {
        self.log_det.exp()
    }
    pub fn sqrt(&self) -> &DMatrix<f64> {
        &self.sqrt
    }
    pub fn inv_sqrt(&self) -> &DMatrix<f64> {
        &self.inv_sqrt
    }

    /// zᵗ R⁻¹ z
    pub fn quad_form(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.inverse * z))
    }
}

/// Spectral norm of a symmetric matrix.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, l| a.max(l.abs()))
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |v| v.len());
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidDensity("ragged or empty matrix".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &l| a.min(l))
}
