use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{tolerance, SymmetricMatrix};
use crate::error::{Result, SfaError};

/// Eigenpairs of a symmetric matrix, eigenvalues ascending. Column `k` of
/// `eigenvectors` has unit norm and belongs to `eigenvalues[k]`; its entry of
/// largest magnitude is positive.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.len() - 1]
    }

    /// Sets eigenvalues in `[−PSD_CLAMP·|λ_max|, 0)` to zero. Larger negative
    /// values are left alone so callers can see them.
    pub fn clamp_psd(&mut self) {
        let floor = -tolerance::PSD_CLAMP * self.max_eigenvalue().abs();
        for lam in self.eigenvalues.iter_mut() {
            if *lam < 0.0 && *lam >= floor {
                *lam = 0.0;
            }
        }
    }

    /// Largest `|v_iᵀ v_j − δ_ij|` over all eigenvector pairs.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.eigenvectors.tr_mul(&self.eigenvectors);
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Largest `‖A v_k − λ_k v_k‖₂ / max(1, |λ_max|)` over all pairs.
    pub fn residual(&self, a: &SymmetricMatrix) -> f64 {
        let scale = self
            .eigenvalues
            .iter()
            .fold(1.0f64, |acc, l| acc.max(l.abs()));
        let av = a.as_matrix() * &self.eigenvectors;
        (0..self.len())
            .map(|k| (av.column(k) - self.eigenvectors.column(k) * self.eigenvalues[k]).norm())
            .fold(0.0, f64::max)
            / scale
    }
}

/// Full eigendecomposition of a symmetric matrix. Deterministic for identical input.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    sym_eig_for(a, "symmetric matrix")
}

pub(crate) fn sym_eig_for(a: &SymmetricMatrix, role: &'static str) -> Result<EigenDecomposition> {
    a.check_finite(role)?;
    let n = a.order();
    let raw = SymmetricEigen::try_new(a.as_matrix().clone(), f64::EPSILON, 1000 * n.max(10))
        .ok_or(SfaError::NoConvergence { role })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        raw.eigenvalues[i]
            .total_cmp(&raw.eigenvalues[j])
            .then(i.cmp(&j))
    });

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| raw.eigenvalues[i]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = raw.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        fix_sign(col.as_mut_slice());
        eigenvectors.set_column(dst, &col);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Flips `v` so its entry of largest magnitude (first one on ties) is positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &SymmetricMatrix, d: &EigenDecomposition) {
        assert!(d.orthonormality_error() <= tolerance::ORTHONORMALITY);
        assert!(d.residual(a) <= tolerance::RESIDUAL);
        for w in d.eigenvalues.as_slice().windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let a = SymmetricMatrix::identity(3);
        let d = sym_eig(&a).unwrap();
        check(&a, &d);
        for &l in d.eigenvalues.iter() {
            assert!((l - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two() {
        let a = SymmetricMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let d = sym_eig(&a).unwrap();
        check(&a, &d);
        assert!((d.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 3.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // (1,-1)/√2 with tie on magnitude: first entry made positive
        assert!((d.eigenvectors[(0, 0)] - h).abs() < 1e-12);
        assert!((d.eigenvectors[(1, 0)] + h).abs() < 1e-12);
        assert!((d.eigenvectors[(0, 1)] - h).abs() < 1e-12);
        assert!((d.eigenvectors[(1, 1)] - h).abs() < 1e-12);
    }

    #[test]
    fn diagonal_with_zero() {
        let a = SymmetricMatrix::from_diagonal(&[0.0, 5.0]);
        let d = sym_eig(&a).unwrap();
        check(&a, &d);
        assert_eq!(d.eigenvalues.as_slice(), &[0.0, 5.0]);
    }

    #[test]
    fn rejects_non_finite() {
        let a = SymmetricMatrix::from_row_slice(2, &[1.0, f64::NAN, f64::NAN, 1.0]).unwrap();
        assert!(matches!(sym_eig(&a), Err(SfaError::NonFinite { .. })));
    }

    #[test]
    fn clamp_only_touches_roundoff_negatives() {
        let a = SymmetricMatrix::from_diagonal(&[-1e-14, -0.5, 4.0]);
        let mut d = sym_eig(&a).unwrap();
        d.clamp_psd();
        assert_eq!(d.eigenvalues.as_slice(), &[-0.5, 0.0, 4.0]);
    }

    #[test]
    fn deterministic() {
        let a = SymmetricMatrix::from_row_slice(3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 1.0])
            .unwrap();
        let d1 = sym_eig(&a).unwrap();
        let d2 = sym_eig(&a).unwrap();
        assert_eq!(d1.eigenvalues, d2.eigenvalues);
        assert_eq!(d1.eigenvectors, d2.eigenvectors);
    }
}
