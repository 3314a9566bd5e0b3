use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SfaError};
use crate::spectra::{sphering::sphering_transform_for, MomentAccumulator};

/// Relative floor for input-covariance eigenvalues in sphere mode. Directions
/// below it carry only roundoff and are not amplified to unit variance.
pub const DEFAULT_INPUT_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreprocessMode {
    Sphere,
    Normalize,
    None,
}

impl fmt::Display for PreprocessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreprocessMode::Sphere => "sphere",
            PreprocessMode::Normalize => "normalize",
            PreprocessMode::None => "none",
        })
    }
}

impl FromStr for PreprocessMode {
    type Err = SfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(PreprocessMode::Sphere),
            "normalize" => Ok(PreprocessMode::Normalize),
            "none" => Ok(PreprocessMode::None),
            other => Err(SfaError::InvalidParameter(format!(
                "unknown preprocessing mode {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PreprocessOptions {
    pub mode: PreprocessMode,
    /// Output dimension. `None` keeps every direction above `floor` (sphere)
    /// or all inputs (other modes).
    pub dim: Option<usize>,
    pub floor: f64,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            mode: PreprocessMode::Sphere,
            dim: None,
            floor: DEFAULT_INPUT_FLOOR,
        }
    }
}

impl PreprocessOptions {
    pub fn with_dim(mode: PreprocessMode, dim: usize) -> Self {
        Self {
            mode,
            dim: Some(dim),
            ..Self::default()
        }
    }
}

/// `x = W0 (s − s0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessor {
    pub w0: DMatrix<f64>,
    pub s0: DVector<f64>,
    pub mode: PreprocessMode,
}

impl Preprocessor {
    pub fn input_dim(&self) -> usize {
        self.w0.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w0.nrows()
    }

    /// Transforms a `K × m` sample matrix into `K × n`.
    pub fn transform(&self, series: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if series.ncols() != self.input_dim() {
            return Err(SfaError::DimensionMismatch {
                expected: self.input_dim(),
                got: series.ncols(),
            });
        }
        let mut centered = series.clone();
        for mut row in centered.row_iter_mut() {
            row -= self.s0.transpose();
        }
        Ok(centered * self.w0.transpose())
    }
}

pub fn fit_preprocessor(series: &DMatrix<f64>, opts: &PreprocessOptions) -> Result<Preprocessor> {
    let (k, m) = series.shape();
    if k < 2 {
        return Err(SfaError::InsufficientSamples { needed: 2, got: k });
    }
    if let Some(n) = opts.dim {
        if n == 0 || n > m {
            return Err(SfaError::InvalidParameter(format!(
                "preprocessed dimension must lie in 1..={m}, got {n}"
            )));
        }
        if opts.mode != PreprocessMode::Sphere && n != m {
            return Err(SfaError::InvalidParameter(format!(
                "mode {} cannot reduce dimension ({m} -> {n})",
                opts.mode
            )));
        }
    }

    let mut acc = MomentAccumulator::new(m);
    acc.update(series)?;
    let moments = acc.finalize()?;
    let s0 = moments.mean.clone();

    let w0 = match opts.mode {
        PreprocessMode::None => DMatrix::identity(m, m),
        PreprocessMode::Normalize => {
            let cov = moments.b.as_matrix();
            let mut w0 = DMatrix::zeros(m, m);
            for i in 0..m {
                let var = cov[(i, i)];
                if !(var > 0.0) {
                    return Err(SfaError::ZeroVariance { index: i });
                }
                w0[(i, i)] = var.sqrt().recip();
            }
            w0
        }
        PreprocessMode::Sphere => {
            let sph = sphering_transform_for(&moments.b, &s0, opts.floor, "input covariance")?;
            let achievable = sph.rank();
            let n = opts.dim.unwrap_or(achievable);
            if n > achievable {
                return Err(SfaError::UnachievableDimension {
                    requested: n,
                    achievable,
                });
            }
            sph.s_matrix.rows(0, n).into_owned()
        }
    };

    Ok(Preprocessor {
        w0,
        s0,
        mode: opts.mode,
    })
}
