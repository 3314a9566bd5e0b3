#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sfa_core::sfa::{solve_gen_eig, solve_svd_sfa};
use sfa_core::spectra::{MomentAccumulator, Moments};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Sinusoids of well separated frequencies plus a little white noise, mixed
/// by a random rotation with scales in [0.5, 2]. Rows are samples.
pub fn mixed_sinusoids(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> DMatrix<f64> {
    let omegas: Vec<f64> = (0..dim)
        .map(|i| 0.04 * (i + 1) as f64 * (1.0 + 0.2 * rng.random::<f64>()))
        .collect();
    let phases: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() * 6.0).collect();
    let noise = normal_matrix(rng, k, dim);
    let sources = DMatrix::from_fn(k, dim, |t, i| {
        (omegas[i] * t as f64 + phases[i]).sin() + 0.05 * noise[(t, i)]
    });
    let q = normal_matrix(rng, dim, dim).qr().q();
    let scales = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            0.5 + 1.5 * rng.random::<f64>()
        } else {
            0.0
        }
    });
    sources * scales * q
}

pub fn moments(x: &DMatrix<f64>) -> Moments {
    let mut acc = MomentAccumulator::new(x.ncols());
    acc.update(x).unwrap();
    acc.finalize().unwrap()
}

pub fn centered(x: &DMatrix<f64>, mean: &nalgebra::DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for mut row in c.row_iter_mut() {
        row -= mean.transpose();
    }
    c
}

/// Largest relative eigenvalue gap and largest sign-aligned RMS difference of
/// projected signals between the two training algorithms on random data.
pub fn equivalence_trial(seed: u64, dim: usize) -> (f64, f64) {
    let mut r = rng(seed);
    let x = mixed_sinusoids(&mut r, 40 * dim, dim);
    let mo = moments(&x);
    let g = solve_gen_eig(&mo.b, &mo.c_prime, 1e-7).unwrap();
    let s = solve_svd_sfa(&mo.b, &mo.c_prime, 1e-7).unwrap();
    assert_eq!(g.eigenvalues.len(), s.eigenvalues.len());
    let rel = g
        .eigenvalues
        .iter()
        .zip(s.eigenvalues.iter())
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
        .fold(0.0, f64::max);
    let xc = centered(&x, &mo.mean);
    let yg = &xc * &g.weights;
    let ys = &xc * &s.weights;
    let n = x.nrows() as f64;
    let mut worst = 0.0f64;
    for j in 0..dim {
        let plus = (yg.column(j) - ys.column(j)).norm() / n.sqrt();
        let minus = (yg.column(j) + ys.column(j)).norm() / n.sqrt();
        worst = worst.max(plus.min(minus));
    }
    (rel, worst)
}
