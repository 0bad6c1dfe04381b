//! Synthetic scoring data with a planted pairwise interaction.
//!
//! Features are standard normal. The true log-odds are
//!
//! ```text
//! b0 + w · Σ linear_i + γ · sigmoid(s · (pair_a − c)) · sigmoid(s · (pair_b − c))
//! ```
//!
//! where the last term is a soft AND of two thresholds: the pair only
//! matters when both variables are high, which no sum of per-variable
//! transforms can reproduce. The intercept `b0` is calibrated by
//! bisection so the expected event rate matches the request. Cells go
//! missing completely at random; noise columns carry no signal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Column, Frame};
use crate::scalar::sigmoid;

pub const SYNTH_TARGET: &str = "y";
pub const MIN_ROWS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("n_rows must be at least {MIN_ROWS}, got {0}")]
    TooFewRows(usize),
    #[error("event_rate must lie in (0, 1), got {0}")]
    InvalidEventRate(f64),
    #[error("missing_rate must lie in [0, 1), got {0}")]
    InvalidMissingRate(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_rows: usize,
    pub n_linear: usize,
    pub n_noise: usize,
    pub linear_weight: f64,
    pub interaction_strength: f64,
    pub sharpness: f64,
    pub offset: f64,
    pub event_rate: f64,
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_rows: 10_000,
            n_linear: 4,
            n_noise: 4,
            linear_weight: 0.6,
            interaction_strength: 8.0,
            sharpness: 6.0,
            offset: 0.5,
            event_rate: 0.5,
            missing_rate: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_rows < MIN_ROWS {
            return Err(SynthError::TooFewRows(self.n_rows));
        }
        if !(self.event_rate > 0.0 && self.event_rate < 1.0) {
            return Err(SynthError::InvalidEventRate(self.event_rate));
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(SynthError::InvalidMissingRate(self.missing_rate));
        }
        for (name, v) in [
            ("linear_weight", self.linear_weight),
            ("interaction_strength", self.interaction_strength),
            ("sharpness", self.sharpness),
            ("offset", self.offset),
        ] {
            if !v.is_finite() {
                return Err(SynthError::NonFinite(name));
            }
        }
        Ok(())
    }

    /// Feature names in column order.
    pub fn feature_names(&self) -> Vec<String> {
        let mut names = vec!["pair_a".to_string(), "pair_b".to_string()];
        names.extend((1..=self.n_linear).map(|i| format!("lin_{i}")));
        names.extend((1..=self.n_noise).map(|i| format!("noise_{i}")));
        names
    }
}

/// Intercept whose mean event probability over `eta` equals `rate`.
fn calibrate_intercept(eta: &[f64], rate: f64) -> f64 {
    let mean = |b: f64| eta.iter().map(|&e| sigmoid(b + e)).sum::<f64>() / eta.len() as f64;
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates a labelled frame with target column `y`.
pub fn generate(cfg: &SynthConfig) -> Result<Frame, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names = cfg.feature_names();
    let n = cfg.n_rows;
    let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(n); names.len()];
    for _ in 0..n {
        for col in data.iter_mut() {
            col.push(rng.sample(StandardNormal));
        }
    }
    let eta: Vec<f64> = (0..n)
        .map(|i| {
            let linear: f64 = (0..cfg.n_linear).map(|k| data[2 + k][i]).sum();
            let both = sigmoid(cfg.sharpness * (data[0][i] - cfg.offset))
                * sigmoid(cfg.sharpness * (data[1][i] - cfg.offset));
            cfg.linear_weight * linear + cfg.interaction_strength * both
        })
        .collect();
    let b0 = calibrate_intercept(&eta, cfg.event_rate);
    let y: Vec<f64> = eta
        .iter()
        .map(|&e| if rng.random::<f64>() < sigmoid(b0 + e) { 1.0 } else { 0.0 })
        .collect();
    let mut columns: Vec<Column> = names
        .into_iter()
        .zip(data)
        .map(|(name, col)| {
            let values = col
                .into_iter()
                .map(|v| if rng.random::<f64>() < cfg.missing_rate { None } else { Some(v) })
                .collect();
            Column::new(name, values)
        })
        .collect();
    columns.push(Column::dense(SYNTH_TARGET, &y));
    Ok(Frame::new(columns, Some(SYNTH_TARGET.to_string())).expect("generated frame is consistent"))
}
