//! Orchestration of both modelling stages and the one-stage baseline.
//!
//! Stage one screens every variable pair for a logistic interaction,
//! trains a small network on the strongest pairs and keeps cluster
//! representatives of their outputs as new features. Stage two selects,
//! prunes and progressively reduces a logistic model.

mod report;
mod stage_one;
mod stage_two;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::{fit_interaction_pair, FitOptions, GlmError, DEFAULT_ALPHA};
use crate::ingest::{Frame, FrameError};
use crate::metrics::{MetricsError, DEFAULT_THRESHOLD};
use crate::tinynet::{TinyNetError, TrainConfig};
use crate::varclust::{VarclusError, DEFAULT_MIN_EXPLAINED};

pub use report::{coefficient_table, format_p_value, path_table, FeatureLabels, TableFormat};
pub use stage_one::{build_stage_one, derive_seed, StageOneNet, StageOneResult};
pub use stage_two::{run_one_stage, run_stage_two, ModelPath, PathStep};

pub const DEFAULT_TOP_N: usize = 50;
pub const DEFAULT_VIF_THRESHOLD: f64 = 10.0;

#[derive(Debug, Error)]
pub enum StagerError {
    #[error("need at least two variables to form pairs, got {0}")]
    TooFewVariables(usize),
    #[error("top_n must be at least 1")]
    InvalidTopN,
    #[error("no screened pair converged")]
    NoConvergedPairs,
    #[error("every stage-one network diverged or produced a constant output")]
    AllNetsDiverged,
    #[error("no candidate survives the sign constraint")]
    EmptyAfterPruning,
    #[error("no candidate variables")]
    NoCandidates,
    #[error("frame has no target column")]
    NoTarget,
    #[error("column `{0}` has missing values")]
    MissingValues(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    TinyNet(#[from] TinyNetError),
    #[error(transparent)]
    Varclust(#[from] VarclusError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Knobs shared by both stages.
#[derive(Debug, Clone, PartialEq)]
pub struct StageConfig {
    pub top_n: usize,
    pub min_explained: f64,
    pub seed: u64,
    pub net: TrainConfig<f64>,
    pub alpha_enter: f64,
    pub alpha_stay: f64,
    pub vif_threshold: f64,
    /// Probability cut used for accuracy.
    pub threshold: f64,
    pub fit: FitOptions<f64>,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            top_n: DEFAULT_TOP_N,
            min_explained: DEFAULT_MIN_EXPLAINED,
            seed: 0,
            net: TrainConfig::default(),
            alpha_enter: DEFAULT_ALPHA,
            alpha_stay: DEFAULT_ALPHA,
            vif_threshold: DEFAULT_VIF_THRESHOLD,
            threshold: DEFAULT_THRESHOLD,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub pair: (String, String),
    /// Wald chi-square of the product term, 0 when the fit is unreliable.
    pub wald: f64,
    pub p: f64,
    pub converged: bool,
}

/// All unordered pairs of distinct variables in lexicographic order.
pub fn enumerate_pairs(variables: &[String]) -> Result<Vec<(String, String)>, StagerError> {
    if variables.len() < 2 {
        return Err(StagerError::TooFewVariables(variables.len()));
    }
    let mut sorted = variables.to_vec();
    sorted.sort();
    let mut out = Vec::with_capacity(sorted.len() * (sorted.len() - 1) / 2);
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            out.push((a.clone(), b.clone()));
        }
    }
    Ok(out)
}

/// Dense columns of `names` from `frame`; any missing cell is an error.
pub(crate) fn dense_columns(frame: &Frame, names: &[String]) -> Result<Vec<Vec<f64>>, StagerError> {
    names
        .iter()
        .map(|n| {
            frame
                .values(n)?
                .iter()
                .map(|v| v.ok_or_else(|| StagerError::MissingValues(n.clone())))
                .collect()
        })
        .collect()
}

pub(crate) fn labels_of(frame: &Frame) -> Result<Vec<u8>, StagerError> {
    frame.labels().ok_or(StagerError::NoTarget)
}

/// Fits `1 + a + b + a·b` for every pair. Results follow the order of
/// `pairs` regardless of how the work is scheduled; failed fits are
/// recorded as unconverged with Wald 0.
pub fn screen_interactions(
    train: &Frame,
    pairs: &[(String, String)],
    opts: &FitOptions<f64>,
) -> Result<Vec<PairScore>, StagerError> {
    let y = labels_of(train)?;
    let mut names: Vec<String> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    names.sort();
    names.dedup();
    let cols = dense_columns(train, &names)?;
    let col = |n: &str| &cols[names.binary_search_by(|x| x.as_str().cmp(n)).expect("collected")];
    Ok(pairs
        .par_iter()
        .map(|(a, b)| match fit_interaction_pair(col(a), col(b), &y, opts) {
            Ok(fit) => PairScore {
                pair: (a.clone(), b.clone()),
                wald: fit.wald,
                p: fit.p_value,
                converged: fit.reliable,
            },
            Err(e) => {
                log::debug!("interaction fit for ({a}, {b}) failed: {e}");
                PairScore {
                    pair: (a.clone(), b.clone()),
                    wald: 0.0,
                    p: 1.0,
                    converged: false,
                }
            }
        })
        .collect())
}

/// Indices of the `n` largest Wald statistics among converged pairs, ties
/// in input order. The flag is set when fewer than `n` pairs qualified.
pub fn select_top_n(scores: &[PairScore], n: usize) -> Result<(Vec<usize>, bool), StagerError> {
    if n == 0 {
        return Err(StagerError::InvalidTopN);
    }
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].converged).collect();
    idx.sort_by(|&a, &b| scores[b].wald.total_cmp(&scores[a].wald).then(a.cmp(&b)));
    let saturated = idx.len() < n;
    if saturated {
        log::warn!("only {} converged pairs available for top {n}", idx.len());
    }
    idx.truncate(n);
    Ok((idx, saturated))
}
