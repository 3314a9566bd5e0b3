use nalgebra::{DMatrix, DVector};

use super::SymmetricMatrix;
use crate::error::{Result, SfaError};

/// Streaming accumulator for the mean, the covariance and the second moment
/// of first differences of a vector-valued signal fed in chunks.
///
/// Chunks are merged with the pairwise (Chan et al.) update of the centered
/// co-moment, so the result does not depend on how the series is split apart
/// from floating-point summation order. Differences are formed within a chunk
/// only; the pair straddling two chunks is never counted.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    dim: usize,
    count: usize,
    mean: DVector<f64>,
    comoment: DMatrix<f64>,
    deriv_count: usize,
    deriv_moment: DMatrix<f64>,
}

/// Finalized moments of an accumulated signal.
#[derive(Debug, Clone)]
pub struct Moments {
    pub mean: DVector<f64>,
    /// Population covariance `⟨vvᵀ⟩ − v₀v₀ᵀ`.
    pub b: SymmetricMatrix,
    /// Raw second moment of first differences, `⟨v̇v̇ᵀ⟩`.
    pub c_prime: SymmetricMatrix,
    pub count: usize,
    pub deriv_count: usize,
}

const GRAM_BLOCK: usize = 64;

/// `XᵀX` summed pairwise over row blocks, which keeps the rounding error
/// growth logarithmic in the number of rows.
fn blocked_gram(x: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = x.nrows();
    if rows <= GRAM_BLOCK {
        let b = x.rows(0, rows);
        return b.tr_mul(&b);
    }
    let half = (rows / 2).div_ceil(GRAM_BLOCK) * GRAM_BLOCK;
    let top = x.rows(0, half).into_owned();
    let bottom = x.rows(half, rows - half).into_owned();
    blocked_gram(&top) + blocked_gram(&bottom)
}

impl MomentAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            count: 0,
            mean: DVector::zeros(dim),
            comoment: DMatrix::zeros(dim, dim),
            deriv_count: 0,
            deriv_moment: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn deriv_count(&self) -> usize {
        self.deriv_count
    }

    /// Adds one chunk; rows are successive samples.
    pub fn update(&mut self, chunk: &DMatrix<f64>) -> Result<()> {
        if chunk.ncols() != self.dim {
            return Err(SfaError::DimensionMismatch {
                expected: self.dim,
                got: chunk.ncols(),
            });
        }
        let k = chunk.nrows();
        if k < 2 {
            return Err(SfaError::InsufficientSamples { needed: 2, got: k });
        }

        let chunk_mean = chunk.row_mean().transpose();
        let mut centered = chunk.clone();
        for mut row in centered.row_iter_mut() {
            row -= chunk_mean.transpose();
        }
        let chunk_comoment = blocked_gram(&centered);

        let diffs = chunk.rows(1, k - 1) - chunk.rows(0, k - 1);
        self.deriv_moment += &blocked_gram(&diffs);
        self.deriv_count += k - 1;

        self.combine(k, &chunk_mean, &chunk_comoment);
        Ok(())
    }

    /// Merges an independently filled accumulator into this one.
    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if other.dim != self.dim {
            return Err(SfaError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        self.deriv_moment += &other.deriv_moment;
        self.deriv_count += other.deriv_count;
        self.combine(other.count, &other.mean, &other.comoment);
        Ok(())
    }

    fn combine(&mut self, n_b: usize, mean_b: &DVector<f64>, comoment_b: &DMatrix<f64>) {
        if n_b == 0 {
            return;
        }
        if self.count == 0 {
            self.count = n_b;
            self.mean.copy_from(mean_b);
            self.comoment.copy_from(comoment_b);
            return;
        }
        let n_a = self.count as f64;
        let nb = n_b as f64;
        let n = n_a + nb;
        let delta = mean_b - &self.mean;
        self.mean.axpy(nb / n, &delta, 1.0);
        self.comoment += comoment_b;
        self.comoment.ger(n_a * nb / n, &delta, &delta, 1.0);
        self.count += n_b;
    }

    pub fn finalize(&self) -> Result<Moments> {
        if self.count < 2 {
            return Err(SfaError::InsufficientSamples {
                needed: 2,
                got: self.count,
            });
        }
        if self.deriv_count < 1 {
            return Err(SfaError::InsufficientSamples {
                needed: 1,
                got: self.deriv_count,
            });
        }
        Ok(Moments {
            mean: self.mean.clone(),
            b: SymmetricMatrix::new(&self.comoment / self.count as f64)?,
            c_prime: SymmetricMatrix::new(&self.deriv_moment / self.deriv_count as f64)?,
            count: self.count,
            deriv_count: self.deriv_count,
        })
    }
}
