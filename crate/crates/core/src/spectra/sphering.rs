use nalgebra::{DMatrix, DVector};

use super::eigen::{sym_eig_for, EigenDecomposition};
use super::SymmetricMatrix;
use crate::error::{Result, SfaError};

/// Compact sphering transform `z = S (v − mean)` with `S` of shape `P × M`.
///
/// Row `k` of `S` is `r_kᵀ / √λ_k` for the `k`-th largest eigenvalue of the
/// covariance. Eigen-directions with `λ / λ_max ≤ ε` are removed, so `S·B·Sᵀ`
/// is the `P × P` identity.
#[derive(Debug, Clone)]
pub struct SpheringTransform {
    pub s_matrix: DMatrix<f64>,
    /// Positions in `spectrum` that produced the rows of `s_matrix`.
    pub kept_indices: Vec<usize>,
    /// Positions in `spectrum` removed by the cutoff.
    pub dropped_indices: Vec<usize>,
    /// All `M` eigenvalues of the input covariance, descending.
    pub spectrum: Vec<f64>,
    pub epsilon: f64,
    pub mean: DVector<f64>,
}

impl SpheringTransform {
    /// Number of kept directions, `P`.
    pub fn rank(&self) -> usize {
        self.kept_indices.len()
    }

    pub fn input_dim(&self) -> usize {
        self.s_matrix.ncols()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.s_matrix * (v - &self.mean)
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SfaError::InvalidParameter(format!(
            "cutoff epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    Ok(())
}

/// Eigen-indices sorted by descending eigenvalue, ties by ascending index.
fn descending(eig: &EigenDecomposition) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..eig.len()).collect();
    idx.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    idx
}

pub(crate) fn count_above(eigenvalues: impl Iterator<Item = f64> + Clone, epsilon: f64) -> Result<usize> {
    let lambda_max = eigenvalues.clone().fold(f64::NEG_INFINITY, f64::max);
    if !(lambda_max > 0.0) {
        return Err(SfaError::DegenerateCovariance {
            epsilon,
            lambda_max,
        });
    }
    Ok(eigenvalues.filter(|&l| l / lambda_max > epsilon).count())
}

pub fn sphering_transform(
    b: &SymmetricMatrix,
    mean: &DVector<f64>,
    epsilon: f64,
) -> Result<SpheringTransform> {
    sphering_transform_for(b, mean, epsilon, "covariance")
}

pub(crate) fn sphering_transform_for(
    b: &SymmetricMatrix,
    mean: &DVector<f64>,
    epsilon: f64,
    role: &'static str,
) -> Result<SpheringTransform> {
    check_epsilon(epsilon)?;
    if mean.len() != b.order() {
        return Err(SfaError::DimensionMismatch {
            expected: b.order(),
            got: mean.len(),
        });
    }
    let eig = sym_eig_for(b, role)?;
    let order = descending(&eig);
    let spectrum: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let p = count_above(spectrum.iter().copied(), epsilon)?;
    if p == 0 {
        return Err(SfaError::DegenerateCovariance {
            epsilon,
            lambda_max: spectrum[0],
        });
    }

    let m = b.order();
    let mut s = DMatrix::zeros(p, m);
    for (row, &src) in order.iter().take(p).enumerate() {
        let scale = spectrum[row].sqrt().recip();
        for col in 0..m {
            s[(row, col)] = eig.eigenvectors[(col, src)] * scale;
        }
    }

    Ok(SpheringTransform {
        s_matrix: s,
        kept_indices: (0..p).collect(),
        dropped_indices: (p..m).collect(),
        spectrum,
        epsilon,
        mean: mean.clone(),
    })
}

/// Number of eigenvalues with `λ / λ_max > ε`.
pub fn numerical_rank(b: &SymmetricMatrix, epsilon: f64) -> Result<usize> {
    check_epsilon(epsilon)?;
    let eig = sym_eig_for(b, "covariance")?;
    count_above(eig.eigenvalues.iter().copied(), epsilon)
}

/// Rank at working precision: the cutoff ratio is `order · f64::EPSILON`.
pub fn machine_rank(b: &SymmetricMatrix) -> Result<usize> {
    numerical_rank(b, b.order() as f64 * f64::EPSILON)
}
