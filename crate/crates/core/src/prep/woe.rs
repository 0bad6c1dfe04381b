use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PrepError;
use crate::ingest::{Column, Frame, FrameError};
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_SMOOTHING: f64 = 0.5;

/// Smoothed weight of evidence of one bin:
/// `ln(((e + s) / (E + B s)) / ((n + s) / (N + B s)))`.
pub fn woe_value<T: Scalar>(
    events: T,
    nonevents: T,
    total_events: T,
    total_nonevents: T,
    bins: T,
    smoothing: T,
) -> T {
    let ev_share = (events + smoothing) / (total_events + bins * smoothing);
    let non_share = (nonevents + smoothing) / (total_nonevents + bins * smoothing);
    (ev_share / non_share).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeBin {
    pub events: u64,
    pub nonevents: u64,
    pub woe: f64,
}

/// Binning table of one variable. Bin `k` covers `(edges[k-1], edges[k]]`;
/// the first bin is unbounded below and the last unbounded above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeBinning {
    pub name: String,
    pub edges: Vec<f64>,
    pub bins: Vec<WoeBin>,
    pub information_value: f64,
}

impl WoeBinning {
    #[inline]
    pub fn bin_of(&self, x: f64) -> usize {
        self.edges.partition_point(|&e| e < x)
    }

    #[inline]
    pub fn encode(&self, x: f64) -> f64 {
        self.bins[self.bin_of(x)].woe
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WoeEncoder {
    pub smoothing: f64,
    pub n_bins: usize,
    pub total_events: u64,
    pub total_nonevents: u64,
    pub variables: Vec<WoeBinning>,
    /// Constant variables left out of the encoder.
    pub dropped: Vec<String>,
}

impl WoeEncoder {
    pub fn variable(&self, name: &str) -> Option<&WoeBinning> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }
}

/// Equal-frequency edges at the `k / n_bins` empirical quantiles. Variables
/// with fewer than `n_bins` distinct values get one bin per value.
fn quantile_edges(sorted: &[f64], n_bins: usize) -> Vec<f64> {
    let mut distinct: Vec<f64> = sorted.to_vec();
    distinct.dedup();
    let max = *sorted.last().expect("non-empty");
    if distinct.len() < n_bins {
        distinct.pop();
        return distinct;
    }
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..n_bins)
        .map(|k| {
            let idx = (k * n).div_ceil(n_bins).max(1) - 1;
            sorted[idx]
        })
        .collect();
    edges.dedup();
    edges.retain(|&e| e < max);
    edges
}

fn fit_variable(
    name: &str,
    values: &[f64],
    labels: &[u8],
    n_bins: usize,
    smoothing: f64,
    totals: (u64, u64),
) -> Option<WoeBinning> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.first() == sorted.last() {
        return None;
    }
    let edges = quantile_edges(&sorted, n_bins);
    let mut counts = vec![(0u64, 0u64); edges.len() + 1];
    for (&x, &y) in values.iter().zip(labels) {
        let b = edges.partition_point(|&e| e < x);
        if y == 1 {
            counts[b].0 += 1;
        } else {
            counts[b].1 += 1;
        }
    }
    let (te, tn) = totals;
    let nb = counts.len() as f64;
    let bins: Vec<WoeBin> = counts
        .iter()
        .map(|&(e, n)| WoeBin {
            events: e,
            nonevents: n,
            woe: woe_value(e as f64, n as f64, te as f64, tn as f64, nb, smoothing),
        })
        .collect();
    let information_value = bins
        .iter()
        .map(|b| (b.events as f64 / te as f64 - b.nonevents as f64 / tn as f64) * b.woe)
        .sum();
    Some(WoeBinning {
        name: name.to_string(),
        edges,
        bins,
        information_value,
    })
}

pub fn fit_woe(train: &Frame, n_bins: usize) -> Result<WoeEncoder, PrepError> {
    fit_woe_with(train, &train.feature_names(), n_bins, DEFAULT_SMOOTHING)
}

/// Fits binning tables for `names` on an imputed, labelled frame.
pub fn fit_woe_with(
    train: &Frame,
    names: &[String],
    n_bins: usize,
    smoothing: f64,
) -> Result<WoeEncoder, PrepError> {
    if n_bins < 2 {
        return Err(PrepError::InvalidBinCount(n_bins));
    }
    let labels = train.labels().ok_or(PrepError::NoTarget)?;
    if labels.is_empty() {
        return Err(PrepError::EmptyFrame);
    }
    let te = labels.iter().filter(|&&y| y == 1).count() as u64;
    let tn = labels.len() as u64 - te;
    let mut columns = Vec::with_capacity(names.len());
    for name in names {
        let vals = train.values(name)?;
        let dense: Option<Vec<f64>> = vals.iter().copied().collect();
        columns.push(dense.ok_or_else(|| PrepError::MissingValues(name.clone()))?);
    }
    let fitted: Vec<Option<WoeBinning>> = names
        .par_iter()
        .zip(columns.par_iter())
        .map(|(name, col)| fit_variable(name, col, &labels, n_bins, smoothing, (te, tn)))
        .collect();
    let mut variables = Vec::new();
    let mut dropped = Vec::new();
    for (name, f) in names.iter().zip(fitted) {
        match f {
            Some(b) => variables.push(b),
            None => {
                log::warn!("variable `{name}` is constant on the training set; dropped from WOE");
                dropped.push(name.clone());
            }
        }
    }
    Ok(WoeEncoder {
        smoothing,
        n_bins,
        total_events: te,
        total_nonevents: tn,
        variables,
        dropped,
    })
}

/// Replaces each encoded variable by its bin WOE. The result holds the
/// encoded variables in encoder order followed by the target, if any.
pub fn apply_woe(enc: &WoeEncoder, frame: &Frame) -> Result<Frame, PrepError> {
    let mut columns = Vec::with_capacity(enc.variables.len() + 1);
    for b in &enc.variables {
        let src = frame
            .column(&b.name)
            .ok_or_else(|| FrameError::UnknownVariable(b.name.clone()))?;
        let values = src
            .values
            .iter()
            .map(|v| match v {
                Some(x) if !x.is_nan() => Ok(Some(b.encode(*x))),
                _ => Err(PrepError::MissingValues(b.name.clone())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        columns.push(Column::new(b.name.clone(), values));
    }
    if let Some(t) = frame.target_name() {
        columns.push(frame.column(t).expect("target present").clone());
    }
    Ok(Frame::new(columns, frame.target_name().map(str::to_string))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(x: &[f64], y: &[u8]) -> Frame {
        let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        Frame::new(vec![Column::dense("x", x), Column::dense("y", &yf)], Some("y".into())).unwrap()
    }

    #[test]
    fn woe_formula_cases() {
        assert_eq!(woe_value(10.0_f64, 20.0, 40.0, 80.0, 2.0, 0.0), 0.0);
        let hi = woe_value(30.0_f64, 10.0, 40.0, 40.0, 2.0, 0.0);
        let lo = woe_value(10.0_f64, 30.0, 40.0, 40.0, 2.0, 0.0);
        assert!((hi - 3.0_f64.ln()).abs() < 1e-15);
        assert!((hi - 1.098_612_288_668_11).abs() < 1e-12);
        assert!((lo + 1.098_612_288_668_11).abs() < 1e-12);
        assert!(woe_value(5.0_f64, 0.0, 40.0, 40.0, 3.0, 0.5).is_finite());
        assert!(woe_value(0.0_f32, 5.0, 40.0, 40.0, 3.0, 0.5).is_finite());
    }

    #[test]
    fn binary_variable_gets_two_bins() {
        let x = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = [1, 1, 1, 0, 1, 0, 0, 0];
        let enc = fit_woe_with(&labelled(&x, &y), &["x".into()], 10, 0.0).unwrap();
        let b = enc.variable("x").unwrap();
        assert_eq!(b.edges, vec![0.0]);
        assert!((b.bins[0].woe - 3.0_f64.ln()).abs() < 1e-12);
        assert!((b.bins[1].woe + 3.0_f64.ln()).abs() < 1e-12);
        assert!(b.information_value > 0.0);
    }

    #[test]
    fn edges_are_upper_inclusive_and_clamped() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let y: Vec<u8> = (0..100).map(|i| u8::from(i % 3 == 0)).collect();
        let enc = fit_woe_with(&labelled(&x, &y), &["x".into()], 10, 0.5).unwrap();
        let b = enc.variable("x").unwrap();
        assert_eq!(b.edges.len(), 9);
        assert!(b.edges.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.edges[0], 10.0);
        assert_eq!(b.bin_of(10.0), 0);
        assert_eq!(b.bin_of(10.5), 1);
        assert_eq!(b.bin_of(-1e9), 0);
        assert_eq!(b.bin_of(1e9), 9);
        assert!(b.bins.iter().all(|bin| bin.events + bin.nonevents == 10));
    }

    #[test]
    fn constant_column_dropped() {
        let enc = fit_woe_with(&labelled(&[2.0; 4], &[0, 1, 0, 1]), &["x".into()], 10, 0.5).unwrap();
        assert!(enc.variables.is_empty());
        assert_eq!(enc.dropped, vec!["x".to_string()]);
    }

    #[test]
    fn apply_maps_values_to_bin_woe() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [0, 1, 1, 0];
        let f = labelled(&x, &y);
        let enc = fit_woe(&f, 10).unwrap();
        let out = apply_woe(&enc, &f).unwrap();
        let b = enc.variable("x").unwrap();
        for (v, &raw) in out.values("x").unwrap().iter().zip(&x) {
            assert_eq!(v.unwrap(), b.encode(raw));
        }
        assert_eq!(out.labels(), f.labels());
    }

    #[test]
    fn missing_values_rejected() {
        let f = Frame::new(
            vec![
                Column::new("x", vec![Some(1.0), None]),
                Column::dense("y", &[0.0, 1.0]),
            ],
            Some("y".into()),
        )
        .unwrap();
        assert!(matches!(fit_woe(&f, 10), Err(PrepError::MissingValues(_))));
    }
}
