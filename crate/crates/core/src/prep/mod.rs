//! Preprocessing: stratified holdout split, median imputation with missing
//! indicators, and weight-of-evidence encoding. Everything is fit on the
//! training partition only and then applied unchanged to other frames.

mod impute;
mod split;
mod woe;

use thiserror::Error;

use crate::ingest::FrameError;

pub use impute::{apply_impute, fit_impute, median, ImputePlan, INDICATOR_PREFIX};
pub use split::{stratified_split, SplitResult};
pub use woe::{
    apply_woe, fit_woe, fit_woe_with, woe_value, WoeBin, WoeBinning, WoeEncoder, DEFAULT_BINS,
    DEFAULT_SMOOTHING,
};

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("frame has no designated target")]
    NoTarget,
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error("target class {0} has no rows")]
    DegenerateStratum(u8),
    #[error("frame has no rows")]
    EmptyFrame,
    #[error("variable `{0}` still has missing values")]
    MissingValues(String),
    #[error("bin count must be at least 2, got {0}")]
    InvalidBinCount(usize),
    #[error(transparent)]
    Frame(#[from] FrameError),
}
