//! Logistic regression by Newton–Raphson with Wald inference, Wald-based
//! stepwise selection, and variance inflation factors.

mod logistic;
mod stepwise;
mod vif;

use thiserror::Error;

pub use logistic::{
    fit_interaction_pair, fit_logistic, log_likelihood, predict_proba, FitOptions,
    InteractionFit, LogisticModel, SEPARATION_LIMIT,
};
pub use stepwise::{stepwise_select, DEFAULT_ALPHA};
pub use vif::vif;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GlmError {
    #[error("design has no rows")]
    EmptyDesign,
    #[error("column `{name}` has {got} rows, expected {expected}")]
    RowMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("response must be 0/1")]
    NonBinaryResponse,
    #[error("non-finite value in column `{0}`")]
    NonFinite(String),
    #[error("information matrix is singular even after ridge stabilisation")]
    SingularInformation,
    #[error("expected {expected} columns, got {got}")]
    ColumnMismatch { expected: usize, got: usize },
    #[error("no candidate variables")]
    NoCandidates,
    #[error("variance inflation needs at least two columns")]
    TooFewColumns,
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("significance levels must lie in (0, 1)")]
    InvalidAlpha,
}

/// Named columns sharing one row count; the intercept is implicit.
#[derive(Debug, Clone)]
pub struct Design<'a, T> {
    names: Vec<String>,
    columns: Vec<&'a [T]>,
    n_rows: usize,
}

impl<'a, T: crate::Scalar> Design<'a, T> {
    pub fn new(names: Vec<String>, columns: Vec<&'a [T]>, n_rows: usize) -> Result<Self, GlmError> {
        if names.len() != columns.len() {
            return Err(GlmError::ColumnMismatch {
                expected: names.len(),
                got: columns.len(),
            });
        }
        for (n, c) in names.iter().zip(&columns) {
            if c.len() != n_rows {
                return Err(GlmError::RowMismatch {
                    name: n.clone(),
                    expected: n_rows,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(GlmError::NonFinite(n.clone()));
            }
        }
        Ok(Self {
            names,
            columns,
            n_rows,
        })
    }

    /// Builds a design from owned columns borrowed for the design's lifetime.
    pub fn from_columns(names: &[String], columns: &'a [Vec<T>]) -> Result<Self, GlmError> {
        let n = columns.first().map_or(0, Vec::len);
        Self::new(names.to_vec(), columns.iter().map(Vec::as_slice).collect(), n)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[&'a [T]] {
        &self.columns
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            names: idx.iter().map(|&i| self.names[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i]).collect(),
            n_rows: self.n_rows,
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}
