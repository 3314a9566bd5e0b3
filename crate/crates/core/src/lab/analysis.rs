use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Result, SfaError};

pub const MEAN_TOLERANCE: f64 = 1e-6;
pub const VARIANCE_TOLERANCE: f64 = 1e-3;
/// `η(y_1)` above this multiple of the reference `η` counts as not slow.
pub const NOT_SLOW_FACTOR: f64 = 3.0;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn check_pair(force: &[f64], y: &[f64]) -> Result<()> {
    if force.len() != y.len() {
        return Err(SfaError::DimensionMismatch {
            expected: force.len(),
            got: y.len(),
        });
    }
    if force.len() < 2 {
        return Err(SfaError::InsufficientSamples {
            needed: 2,
            got: force.len(),
        });
    }
    Ok(())
}

/// Least-squares fit `a·γ + b` of the force to a signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub a: f64,
    pub b: f64,
    pub aligned: Vec<f64>,
    pub mse: f64,
}

/// Mean squared error of `a·γ + b` against `y`.
pub fn alignment_mse(force: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    force
        .iter()
        .zip(y)
        .map(|(g, v)| {
            let e = a * g + b - v;
            e * e
        })
        .sum::<f64>()
        / force.len() as f64
}

pub fn align(force: &[f64], y: &[f64]) -> Result<Alignment> {
    check_pair(force, y)?;
    let (mg, my) = (mean(force), mean(y));
    let mut cov = 0.0;
    let mut var = 0.0;
    for (g, v) in force.iter().zip(y) {
        cov += (g - mg) * (v - my);
        var += (g - mg) * (g - mg);
    }
    if !(var > 0.0) {
        return Err(SfaError::ZeroVariance { index: 0 });
    }
    let a = cov / var;
    let b = my - a * mg;
    let aligned: Vec<f64> = force.iter().map(|g| a * g + b).collect();
    let mse = alignment_mse(force, y, a, b);
    Ok(Alignment { a, b, aligned, mse })
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if !(sxx > 0.0) {
        return Err(SfaError::ZeroVariance { index: 0 });
    }
    if !(syy > 0.0) {
        return Err(SfaError::ZeroVariance { index: 1 });
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// `η = (T/2π)·√(⟨ẏ²⟩/⟨y²⟩)` on mean-removed `y`, `T` the sample count and
/// `ẏ` the first difference.
pub fn slowness_eta(y: &[f64]) -> Result<f64> {
    let t = y.len();
    if t < 2 {
        return Err(SfaError::InsufficientSamples { needed: 2, got: t });
    }
    let mu = mean(y);
    let var = y.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / t as f64;
    if !(var > 0.0) {
        return Err(SfaError::ZeroVariance { index: 0 });
    }
    let dd = y.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum::<f64>() / (t - 1) as f64;
    Ok(t as f64 / (2.0 * PI) * (dd / var).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlownessReport {
    pub mean: Vec<f64>,
    /// `⟨y_j²⟩`.
    pub variance: Vec<f64>,
    /// NaN for a constant component.
    pub eta: Vec<f64>,
    /// `⟨y_j y_k⟩`.
    pub decorrelation: DMatrix<f64>,
    pub eta_reference: Option<f64>,
    pub mean_violation: bool,
    pub variance_violation: bool,
    pub not_slow: bool,
}

/// Constraint and slowness summary of `K × k` output signals. Violations are
/// reported through the flags, never as errors.
pub fn constraint_report(y: &DMatrix<f64>, force: Option<&[f64]>) -> SlownessReport {
    let (n, k) = y.shape();
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = (0..k).map(|j| y.column(j).iter().copied().collect()).collect();
    let mean: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let decorrelation = y.tr_mul(y) / nf;
    let variance: Vec<f64> = (0..k).map(|j| decorrelation[(j, j)]).collect();
    let eta: Vec<f64> = cols
        .iter()
        .map(|c| slowness_eta(c).unwrap_or(f64::NAN))
        .collect();
    let eta_reference = force.and_then(|f| slowness_eta(f).ok());
    let not_slow = match (eta_reference, eta.first()) {
        (Some(r), Some(&e)) => !(e <= NOT_SLOW_FACTOR * r),
        _ => false,
    };
    SlownessReport {
        mean_violation: mean.iter().any(|m| !(m.abs() <= MEAN_TOLERANCE)),
        variance_violation: variance
            .iter()
            .any(|v| !((v - 1.0).abs() <= VARIANCE_TOLERANCE)),
        not_slow,
        mean,
        variance,
        eta,
        decorrelation,
        eta_reference,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::logistic::driving_series;

    #[test]
    fn exact_affine() {
        let g: Vec<f64> = (0..50).map(|t| (t as f64 * 0.3).sin()).collect();
        let y: Vec<f64> = g.iter().map(|v| 2.0 * v + 3.0).collect();
        let al = align(&g, &y).unwrap();
        assert!((al.a - 2.0).abs() < 1e-12 && (al.b - 3.0).abs() < 1e-12);
        assert!(al.mse < 1e-24);
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        let al = align(&g, &neg).unwrap();
        assert!((al.a + 1.0).abs() < 1e-12 && al.b.abs() < 1e-12);
    }

    #[test]
    fn zero_variance_force() {
        assert!(align(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
        assert!(align(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn eta_of_driving_force() {
        let g = driving_series(6000);
        let eta = slowness_eta(&g).unwrap();
        // discrete oracle: mean-removed second moment and squared differences
        let mu = g.iter().sum::<f64>() / 6000.0;
        let var: f64 = g.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / 6000.0;
        let dd: f64 = (1..6000).map(|t| (g[t] - g[t - 1]).powi(2)).sum::<f64>() / 5999.0;
        let oracle = 6000.0 / (2.0 * PI) * (dd / var).sqrt();
        assert!((eta - oracle).abs() < 1e-12);
        let analytic = 6000.0 * 0.0125 / (2.0 * PI);
        assert!((analytic - 11.936_620_731_892_15).abs() < 1e-10);
        assert!(eta > 11.6 && eta < 12.0, "{eta}");
    }

    #[test]
    fn eta_scale_invariant() {
        let g = driving_series(1000);
        let e0 = slowness_eta(&g).unwrap();
        let scaled: Vec<f64> = g.iter().map(|v| -3.5 * v + 7.0).collect();
        assert!((slowness_eta(&scaled).unwrap() - e0).abs() < 1e-12 * e0);
        assert!(slowness_eta(&[2.0; 10]).is_err());
    }

    #[test]
    fn sine_cosine_decorrelated() {
        let n = 1000;
        let omega = 2.0 * PI * 5.0 / n as f64;
        let y = DMatrix::from_fn(n, 2, |t, j| {
            let p = omega * t as f64;
            2f64.sqrt() * if j == 0 { p.sin() } else { p.cos() }
        });
        let r = constraint_report(&y, None);
        assert!(r.decorrelation[(0, 1)].abs() < 1e-12);
        assert!((r.variance[0] - 1.0).abs() < 1e-12);
        assert!(!r.mean_violation && !r.variance_violation && !r.not_slow);
    }

    #[test]
    fn flags() {
        let g = driving_series(2000);
        let fast = DMatrix::from_fn(2000, 1, |t, _| 0.5 * ((t as f64) * 1.1).sin() + 0.01);
        let r = constraint_report(&fast, Some(&g));
        assert!(r.mean_violation && r.variance_violation && r.not_slow);
        let constant = DMatrix::from_element(10, 1, 1.0);
        let r = constraint_report(&constant, None);
        assert!(r.eta[0].is_nan());
        assert!(r.mean_violation && !r.variance_violation);
    }
}
