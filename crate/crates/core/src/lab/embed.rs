use nalgebra::DMatrix;

use crate::error::{Result, SfaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingSpec {
    pub m: usize,
    pub tau: usize,
}

impl EmbeddingSpec {
    pub fn new(m: usize, tau: usize) -> Result<Self> {
        if m == 0 || tau == 0 {
            return Err(SfaError::InvalidParameter(format!(
                "embedding needs m >= 1 and tau >= 1, got m = {m}, tau = {tau}"
            )));
        }
        Ok(Self { m, tau })
    }

    /// Samples spanned by one vector.
    pub fn span(&self) -> usize {
        self.tau * (self.m - 1) + 1
    }

    /// Offset from the first sample of a window to its centre. For even `m`
    /// this is the half-span rounded down, i.e. an extra `⌊τ/2⌋` shift.
    pub fn center_offset(&self) -> usize {
        self.tau * (self.m - 1) / 2
    }
}

/// Delay vectors (rows, time-ordered) and the centre index of each.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub vectors: DMatrix<f64>,
    pub centers: Vec<usize>,
}

pub fn embed(values: &[f64], spec: EmbeddingSpec) -> Result<Embedding> {
    let span = spec.span();
    if values.len() < span {
        return Err(SfaError::SeriesTooShort {
            needed: span,
            got: values.len(),
        });
    }
    let k = values.len() - span + 1;
    let vectors = DMatrix::from_fn(k, spec.m, |s, j| values[s + j * spec.tau]);
    let off = spec.center_offset();
    Ok(Embedding {
        vectors,
        centers: (off..off + k).collect(),
    })
}
