use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::{FitOptions, DEFAULT_ALPHA};
use crate::ingest::{IngestConfig, OrdinalMaps};
use crate::metrics::DEFAULT_THRESHOLD;
use crate::prep::{DEFAULT_BINS, DEFAULT_SMOOTHING};
use crate::stager::{StageConfig, DEFAULT_TOP_N, DEFAULT_VIF_THRESHOLD};
use crate::tinynet::{TrainConfig, DEFAULT_LEARNING_RATES, MAX_ITERS, MAX_LEARNING_RATE, MIN_LEARNING_RATE};
use crate::varclust::DEFAULT_MIN_EXPLAINED;

pub const DEFAULT_FRACTION: f64 = 0.6;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

/// Flat run configuration, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub target: String,
    pub positive_label: String,
    pub sentinels: Vec<String>,
    pub categorical: Vec<String>,
    pub ordinal_maps: OrdinalMaps,
    pub fraction: f64,
    pub seed: u64,
    pub n_bins: usize,
    pub smoothing: f64,
    pub min_explained: f64,
    pub top_n: usize,
    pub learning_rates: Vec<f64>,
    pub max_iters: usize,
    pub hidden_nodes: usize,
    pub alpha_enter: f64,
    pub alpha_stay: f64,
    pub vif_threshold: f64,
    pub threshold: f64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    /// Display labels for coefficient tables.
    pub labels: BTreeMap<String, String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            target: "target".into(),
            positive_label: "1".into(),
            sentinels: Vec::new(),
            categorical: Vec::new(),
            ordinal_maps: OrdinalMaps::new(),
            fraction: DEFAULT_FRACTION,
            seed: 0,
            n_bins: DEFAULT_BINS,
            smoothing: DEFAULT_SMOOTHING,
            min_explained: DEFAULT_MIN_EXPLAINED,
            top_n: DEFAULT_TOP_N,
            learning_rates: DEFAULT_LEARNING_RATES.to_vec(),
            max_iters: MAX_ITERS,
            hidden_nodes: 1,
            alpha_enter: DEFAULT_ALPHA,
            alpha_stay: DEFAULT_ALPHA,
            vif_threshold: DEFAULT_VIF_THRESHOLD,
            threshold: DEFAULT_THRESHOLD,
            workers: 0,
            labels: BTreeMap::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `input` or `output_dir` is resolved
    /// against the file's directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = toml::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.output_dir] {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.target.trim().is_empty() {
            return Err(invalid("target", "must not be empty"));
        }
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(invalid("fraction", format!("{} is not strictly between 0 and 1", self.fraction)));
        }
        if self.n_bins < 2 {
            return Err(invalid("n_bins", "must be at least 2"));
        }
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            return Err(invalid("smoothing", "must be a finite non-negative number"));
        }
        if !(self.min_explained > 0.0 && self.min_explained <= 1.0) {
            return Err(invalid("min_explained", "must lie in (0, 1]"));
        }
        if self.top_n == 0 {
            return Err(invalid("top_n", "must be at least 1"));
        }
        if self.learning_rates.is_empty() {
            return Err(invalid("learning_rates", "must not be empty"));
        }
        if let Some(lr) = self
            .learning_rates
            .iter()
            .find(|&&lr| !(MIN_LEARNING_RATE..=MAX_LEARNING_RATE).contains(&lr))
        {
            return Err(invalid("learning_rates", format!("{lr} is outside [1e-5, 1e-1]")));
        }
        if self.max_iters == 0 || self.max_iters > MAX_ITERS {
            return Err(invalid("max_iters", format!("must lie in 1..={MAX_ITERS}")));
        }
        if self.hidden_nodes == 0 {
            return Err(invalid("hidden_nodes", "must be at least 1"));
        }
        for (field, a) in [("alpha_enter", self.alpha_enter), ("alpha_stay", self.alpha_stay)] {
            if !(a > 0.0 && a < 1.0) {
                return Err(invalid(field, "must lie in (0, 1)"));
            }
        }
        if !(self.vif_threshold >= 1.0) {
            return Err(invalid("vif_threshold", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(invalid("threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            target_name: self.target.clone(),
            invalid_sentinels: self.sentinels.clone(),
            positive_label: self.positive_label.clone(),
            categorical: self.categorical.clone(),
            ordinal_maps: self.ordinal_maps.clone(),
        }
    }

    pub fn stage(&self) -> StageConfig {
        StageConfig {
            top_n: self.top_n,
            min_explained: self.min_explained,
            seed: self.seed,
            net: TrainConfig {
                learning_rates: self.learning_rates.clone(),
                max_iters: self.max_iters,
                hidden_nodes: self.hidden_nodes,
                ..TrainConfig::default()
            },
            alpha_enter: self.alpha_enter,
            alpha_stay: self.alpha_stay,
            vif_threshold: self.vif_threshold,
            threshold: self.threshold,
            fit: FitOptions::default(),
        }
    }
}
