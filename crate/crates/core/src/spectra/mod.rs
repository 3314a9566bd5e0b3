//! Dense symmetric spectral routines: eigendecomposition, sphering with an
//! eigenvalue cutoff, numerical rank, and chunked moment accumulation.

pub(crate) mod eigen;
mod moments;
pub(crate) mod sphering;

pub use eigen::{sym_eig, EigenDecomposition};
pub use moments::{MomentAccumulator, Moments};
pub use sphering::{machine_rank, numerical_rank, sphering_transform, SpheringTransform};

use nalgebra::DMatrix;

use crate::error::{Result, SfaError};

/// Default cutoff ratio for treating an eigenvalue as zero: `λ / λ_max ≤ ε`.
pub const DEFAULT_EPSILON: f64 = 1e-7;

/// Tolerances asserted on every eigendecomposition.
pub mod tolerance {
    /// `|v_iᵀ v_j − δ_ij|` bound for returned eigenvectors.
    pub const ORTHONORMALITY: f64 = 1e-10;
    /// Residual bound relative to `max(1, |λ_max|)`.
    pub const RESIDUAL: f64 = 1e-9;
    /// Negative eigenvalues of a PSD input down to `−PSD_CLAMP·|λ_max|` are reported as 0.
    pub const PSD_CLAMP: f64 = 1e-12;
    /// Entrywise bound on `S·B·Sᵀ − I`.
    pub const SPHERING: f64 = 1e-8;
}

/// Square symmetric matrix. Symmetry is exact: the constructor stores `(A + Aᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(SfaError::DimensionMismatch {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(SfaError::InvalidParameter(
                "symmetric matrix must have order >= 1".into(),
            ));
        }
        let sym = (&a + a.transpose()) * 0.5;
        Ok(Self(sym))
    }

    pub fn from_row_slice(order: usize, data: &[f64]) -> Result<Self> {
        if data.len() != order * order {
            return Err(SfaError::DimensionMismatch {
                expected: order * order,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(order, order, data))
    }

    pub fn identity(order: usize) -> Self {
        Self(DMatrix::identity(order, order))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { diag[i] } else { 0.0 }))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub(crate) fn check_finite(&self, role: &'static str) -> Result<()> {
        let n = self.order();
        for j in 0..n {
            for i in 0..n {
                if !self.0[(i, j)].is_finite() {
                    return Err(SfaError::NonFinite { role, row: i, col: j });
                }
            }
        }
        Ok(())
    }
}
