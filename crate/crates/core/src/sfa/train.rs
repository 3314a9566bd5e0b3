use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::expansion::{expand_rows, expansion_dim};
use super::preprocess::{fit_preprocessor, PreprocessOptions, Preprocessor};
use crate::error::{Result, SfaError};
use crate::spectra::eigen::{fix_sign, sym_eig_for};
use crate::spectra::sphering::{count_above, sphering_transform_for};
use crate::spectra::{MomentAccumulator, Moments, SymmetricMatrix, DEFAULT_EPSILON};

/// Eigenvalues in `[−NEGATIVE_CLAMP, 0)` are reported as 0.
pub const NEGATIVE_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GenEig,
    SvdSfa,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::GenEig => "GEN_EIG",
            Method::SvdSfa => "SVD_SFA",
        })
    }
}

impl FromStr for Method {
    type Err = SfaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gen" | "GEN_EIG" => Ok(Method::GenEig),
            "svd" | "SVD_SFA" => Ok(Method::SvdSfa),
            other => Err(SfaError::InvalidParameter(format!(
                "unknown method {other:?} (expected gen or svd)"
            ))),
        }
    }
}

/// Numerical health of a trained model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// `numerical_rank(B, ε)`.
    pub rank_of_b: usize,
    /// `numerical_rank(B, M·f64::EPSILON)`.
    pub machine_rank: usize,
    /// The Cholesky factorization of `B` failed and the uncapped whitening path was used.
    pub cholesky_failed: bool,
    /// Eigenvalues below `−NEGATIVE_CLAMP`.
    pub negative_eigenvalues: usize,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    /// `B` is singular at working precision.
    pub fn rank_deficient(&self, expanded_dim: usize) -> bool {
        self.machine_rank < expanded_dim
    }
}

/// Eigenpairs of a training problem before they are wrapped into a model.
#[derive(Debug, Clone)]
pub struct SfaSolution {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// `M × N`; column `j` is `w'_j`.
    pub weights: DMatrix<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SfaModel {
    pub preprocessor: Preprocessor,
    pub v0: DVector<f64>,
    pub eigenvalues: DVector<f64>,
    pub weights: DMatrix<f64>,
    pub method: Method,
    pub epsilon: f64,
    pub rank_of_b: usize,
    pub machine_rank: usize,
    pub unstable: bool,
}

impl SfaModel {
    pub fn expanded_dim(&self) -> usize {
        self.v0.len()
    }

    /// Number of available components (`P` or `N_G`).
    pub fn components(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn input_dim(&self) -> usize {
        self.preprocessor.input_dim()
    }
}

fn check_pair(b: &SymmetricMatrix, c_prime: &SymmetricMatrix) -> Result<()> {
    if b.order() != c_prime.order() {
        return Err(SfaError::DimensionMismatch {
            expected: b.order(),
            got: c_prime.order(),
        });
    }
    b.check_finite("expanded covariance")?;
    c_prime.check_finite("derivative moment")
}

/// Symmetrized `S · A · Sᵀ`.
fn congruence(s: &DMatrix<f64>, a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    SymmetricMatrix::new(s * a.as_matrix() * s.transpose())
}

/// `(numerical_rank(B, ε), machine_rank(B))` from the eigenvalues of `B`.
fn ranks(spectrum: &[f64], epsilon: f64) -> Result<(usize, usize)> {
    let machine_eps = spectrum.len() as f64 * f64::EPSILON;
    Ok((
        count_above(spectrum.iter().copied(), epsilon)?,
        count_above(spectrum.iter().copied(), machine_eps)?,
    ))
}

fn clamp_negatives(values: &mut DVector<f64>) -> (usize, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut negatives = 0;
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v >= -NEGATIVE_CLAMP {
                *v = 0.0;
            } else {
                negatives += 1;
            }
        }
    }
    (negatives, min)
}

/// Eigenproblem of `C = S·C'·Sᵀ` with `S` the compact sphering of `B`.
pub fn solve_svd_sfa(
    b: &SymmetricMatrix,
    c_prime: &SymmetricMatrix,
    epsilon: f64,
) -> Result<SfaSolution> {
    check_pair(b, c_prime)?;
    let sph = sphering_transform_for(b, &DVector::zeros(b.order()), epsilon, "expanded covariance")?;
    let c = congruence(&sph.s_matrix, c_prime)?;
    let eig = sym_eig_for(&c, "sphered derivative moment")?;
    let mut eigenvalues = eig.eigenvalues;
    let (negative_eigenvalues, min_eigenvalue) = clamp_negatives(&mut eigenvalues);
    let weights = sph.s_matrix.tr_mul(&eig.eigenvectors);
    let (_, machine_rank) = ranks(&sph.spectrum, epsilon)?;
    Ok(SfaSolution {
        eigenvalues,
        weights,
        diagnostics: Diagnostics {
            rank_of_b: sph.rank(),
            machine_rank,
            cholesky_failed: false,
            negative_eigenvalues,
            min_eigenvalue,
        },
    })
}

/// Generalized problem `C'·w' = λ·B·w'` by Cholesky reduction, falling back to
/// whitening with every eigenvalue of `B` (no cutoff) when `B` is not
/// numerically positive definite. Eigenvectors satisfy `w'ᵀ·B·w' = 1` through
/// the reduction.
pub fn solve_gen_eig(
    b: &SymmetricMatrix,
    c_prime: &SymmetricMatrix,
    epsilon: f64,
) -> Result<SfaSolution> {
    check_pair(b, c_prime)?;
    let m = b.order();
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SfaError::InvalidParameter(format!(
            "cutoff epsilon must lie in (0, 1), got {epsilon}"
        )));
    }

    let (mut eigenvalues, mut weights, cholesky_failed, b_spectrum) =
        match Cholesky::new(b.as_matrix().clone()) {
            Some(chol) => {
                let l = chol.l();
                let x = l
                    .solve_lower_triangular(c_prime.as_matrix())
                    .ok_or(SfaError::NoConvergence {
                        role: "Cholesky factor",
                    })?;
                let c = l
                    .solve_lower_triangular(&x.transpose())
                    .ok_or(SfaError::NoConvergence {
                        role: "Cholesky factor",
                    })?;
                let eig = sym_eig_for(&SymmetricMatrix::new(c)?, "reduced derivative moment")?;
                let w = l
                    .transpose()
                    .solve_upper_triangular(&eig.eigenvectors)
                    .ok_or(SfaError::NoConvergence {
                        role: "Cholesky factor",
                    })?;
                let spectrum = sym_eig_for(b, "expanded covariance")?.eigenvalues;
                (eig.eigenvalues, w, false, spectrum)
            }
            None => {
                let eig_b = sym_eig_for(b, "expanded covariance")?;
                // keeps exact zeros finite; far below any roundoff-level eigenvalue
                let floor = (eig_b.max_eigenvalue().abs() * f64::EPSILON * f64::EPSILON)
                    .max(f64::MIN_POSITIVE);
                let mut s = eig_b.eigenvectors.transpose();
                for (k, mut row) in s.row_iter_mut().enumerate() {
                    let lambda = eig_b.eigenvalues[k].abs().max(floor);
                    row /= lambda.sqrt();
                }
                let c = congruence(&s, c_prime)?;
                let eig = sym_eig_for(&c, "whitened derivative moment")?;
                (
                    eig.eigenvalues,
                    s.tr_mul(&eig.eigenvectors),
                    true,
                    eig_b.eigenvalues,
                )
            }
        };

    for mut col in weights.column_iter_mut() {
        fix_sign(col.as_mut_slice());
    }
    let (negative_eigenvalues, min_eigenvalue) = clamp_negatives(&mut eigenvalues);
    debug_assert_eq!(weights.nrows(), m);
    let (rank_of_b, machine_rank) = ranks(b_spectrum.as_slice(), epsilon)?;

    Ok(SfaSolution {
        eigenvalues,
        weights,
        diagnostics: Diagnostics {
            rank_of_b,
            machine_rank,
            cholesky_failed,
            negative_eigenvalues,
            min_eigenvalue,
        },
    })
}

/// Preprocesses and expands each chunk and feeds it to a moment accumulator.
pub fn accumulate_training<'a, I>(preprocessor: &Preprocessor, chunks: I) -> Result<Moments>
where
    I: IntoIterator<Item = &'a DMatrix<f64>>,
{
    let mut acc = MomentAccumulator::new(expansion_dim(preprocessor.output_dim()));
    for chunk in chunks {
        let x = preprocessor.transform(chunk)?;
        acc.update(&expand_rows(&x))?;
    }
    acc.finalize()
}

fn into_model(
    preprocessor: &Preprocessor,
    moments: &Moments,
    solution: SfaSolution,
    method: Method,
    epsilon: f64,
) -> SfaModel {
    let m = moments.b.order();
    let d = solution.diagnostics;
    let unstable = method == Method::GenEig
        && (d.cholesky_failed || d.rank_deficient(m) || d.negative_eigenvalues > 0);
    SfaModel {
        preprocessor: preprocessor.clone(),
        v0: moments.mean.clone(),
        eigenvalues: solution.eigenvalues,
        weights: solution.weights,
        method,
        epsilon,
        rank_of_b: d.rank_of_b,
        machine_rank: d.machine_rank,
        unstable,
    }
}

pub fn train_svd_sfa(
    preprocessor: &Preprocessor,
    moments: &Moments,
    epsilon: f64,
) -> Result<SfaModel> {
    let sol = solve_svd_sfa(&moments.b, &moments.c_prime, epsilon)?;
    Ok(into_model(preprocessor, moments, sol, Method::SvdSfa, epsilon))
}

/// `epsilon` only affects the rank diagnostic.
pub fn train_gen_eig(
    preprocessor: &Preprocessor,
    moments: &Moments,
    epsilon: f64,
) -> Result<SfaModel> {
    let sol = solve_gen_eig(&moments.b, &moments.c_prime, epsilon)?;
    Ok(into_model(preprocessor, moments, sol, Method::GenEig, epsilon))
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub method: Method,
    pub epsilon: f64,
    pub preprocess: PreprocessOptions,
    /// Rows per accumulation chunk; `None` feeds the series in one piece.
    pub chunk_len: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            method: Method::SvdSfa,
            epsilon: DEFAULT_EPSILON,
            preprocess: PreprocessOptions::default(),
            chunk_len: None,
        }
    }
}

/// Fitted preprocessor and expanded-signal moments of a training series.
pub fn prepare(series: &DMatrix<f64>, opts: &TrainOptions) -> Result<(Preprocessor, Moments)> {
    let pre = fit_preprocessor(series, &opts.preprocess)?;
    let k = series.nrows();
    let moments = match opts.chunk_len {
        None => accumulate_training(&pre, std::iter::once(series))?,
        Some(len) => {
            if len < 2 {
                return Err(SfaError::InvalidParameter(format!(
                    "chunk length must be at least 2, got {len}"
                )));
            }
            let mut chunks = Vec::new();
            let mut start = 0;
            while start < k {
                let mut end = (start + len).min(k);
                if k - end == 1 {
                    end = k;
                }
                chunks.push(series.rows(start, end - start).into_owned());
                start = end;
            }
            accumulate_training(&pre, chunks.iter())?
        }
    };
    Ok((pre, moments))
}

/// Fits the preprocessor, accumulates moments and trains with `opts.method`.
pub fn train(series: &DMatrix<f64>, opts: &TrainOptions) -> Result<SfaModel> {
    let (pre, moments) = prepare(series, opts)?;
    train_from(&pre, &moments, opts.method, opts.epsilon)
}

pub fn train_from(
    pre: &Preprocessor,
    moments: &Moments,
    method: Method,
    epsilon: f64,
) -> Result<SfaModel> {
    match method {
        Method::SvdSfa => train_svd_sfa(pre, moments, epsilon),
        Method::GenEig => train_gen_eig(pre, moments, epsilon),
    }
}

/// `y_j(t) = w'_jᵀ (v(t) − v0)` for `j = 1..k`; returns `K × k`.
pub fn apply_model(model: &SfaModel, series: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let available = model.components();
    if k == 0 || k > available {
        return Err(SfaError::TooManyComponents {
            requested: k,
            available,
        });
    }
    let x = model.preprocessor.transform(series)?;
    let mut v = expand_rows(&x);
    for mut row in v.row_iter_mut() {
        row -= model.v0.transpose();
    }
    Ok(v * model.weights.columns(0, k))
}
