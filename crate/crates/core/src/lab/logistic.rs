use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::series::{SeriesMeta, TimeSeries};
use crate::error::{Result, SfaError};

/// Angular frequency of the driving force, per sample.
pub const DRIVING_OMEGA: f64 = 0.0125;

pub const DEFAULT_Q: f64 = 1.2;
pub const DEFAULT_LENGTH: usize = 6000;
pub const DEFAULT_W0: f64 = 0.1;
pub const DEFAULT_BURN_IN: usize = 0;

/// `γ(t) = sin(0.0125·t)`.
pub fn driving_force(t: f64) -> f64 {
    (DRIVING_OMEGA * t).sin()
}

/// `γ(t)` for `t = 0..len`.
pub fn driving_series(len: usize) -> Vec<f64> {
    (0..len).map(|t| driving_force(t as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Forcing {
    Sine,
    /// `γ ≡ 0`.
    Off,
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticConfig {
    pub q: f64,
    pub length: usize,
    pub w0: f64,
    pub burn_in: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub forcing: Forcing,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            length: DEFAULT_LENGTH,
            w0: DEFAULT_W0,
            burn_in: DEFAULT_BURN_IN,
            noise_sigma: 0.0,
            seed: 0,
            forcing: Forcing::Sine,
        }
    }
}

impl LogisticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.1..=3.9).contains(&self.q) {
            return Err(SfaError::InvalidParameter(format!(
                "q must lie in [0.1, 3.9], got {}",
                self.q
            )));
        }
        if !(self.w0 > 0.0 && self.w0 < 1.0) {
            return Err(SfaError::InvalidParameter(format!(
                "w0 must lie in (0, 1), got {}",
                self.w0
            )));
        }
        if self.length == 0 {
            return Err(SfaError::InvalidParameter("length must be positive".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(SfaError::InvalidParameter(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// `w(t+1) = (4 − q + 0.1·γ(t))·w(t)·(1 − w(t))`, with `t = 0` at the first
/// retained sample, followed by additive Gaussian noise on the retained samples.
/// Noise is drawn from ChaCha8 seeded with `seed`.
pub fn logistic_series(config: &LogisticConfig) -> Result<TimeSeries> {
    config.validate()?;
    let total = config.burn_in + config.length;
    let mut values = Vec::with_capacity(config.length);
    let mut w = config.w0;
    for step in 0..total {
        let t = step as f64 - config.burn_in as f64;
        if step >= config.burn_in {
            values.push(w);
        }
        if step + 1 == total {
            break;
        }
        let gamma = match config.forcing {
            Forcing::Sine => driving_force(t),
            Forcing::Off => 0.0,
        };
        w *= (4.0 - config.q + 0.1 * gamma) * (1.0 - w);
        if !(w > 0.0 && w < 1.0) {
            return Err(SfaError::UnitIntervalEscape {
                t: step + 1,
                value: w,
            });
        }
    }

    if config.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, config.noise_sigma)
            .map_err(|e| SfaError::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for v in values.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }

    Ok(TimeSeries {
        values,
        meta: Some(SeriesMeta {
            q: config.q,
            noise_sigma: config.noise_sigma,
            seed: config.seed,
        }),
    })
}
