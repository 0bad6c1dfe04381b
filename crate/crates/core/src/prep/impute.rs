use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::PrepError;
use crate::ingest::{Column, Frame, FrameError};

/// Prefix for generated missing-indicator columns.
pub const INDICATOR_PREFIX: &str = "M_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputePlan {
    /// Training median per variable, in frame column order.
    pub medians: Vec<(String, f64)>,
    /// Variable → indicator column, for variables with gaps in train.
    pub indicators: Vec<(String, String)>,
    /// Variables with no observed training value; removed on apply.
    pub dropped: Vec<String>,
}

impl ImputePlan {
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.medians.iter().map(|(n, _)| n.as_str())
    }

    /// Output column names of [`apply_impute`], excluding the target.
    pub fn output_names(&self) -> Vec<String> {
        self.medians
            .iter()
            .map(|(n, _)| n.clone())
            .chain(self.indicators.iter().map(|(_, m)| m.clone()))
            .collect()
    }

    pub fn median_of(&self, name: &str) -> Option<f64> {
        self.medians.iter().find(|(n, _)| n == name).map(|&(_, m)| m)
    }
}

/// Median of the values; average of the two middle values for even counts.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

pub fn fit_impute(train: &Frame) -> Result<ImputePlan, PrepError> {
    if train.n_rows() == 0 {
        return Err(PrepError::EmptyFrame);
    }
    let names = train.feature_names();
    let taken: BTreeSet<&str> = train.names().collect();
    let mut plan = ImputePlan {
        medians: Vec::new(),
        indicators: Vec::new(),
        dropped: Vec::new(),
    };
    for name in &names {
        let col = train.column(name).expect("feature present");
        let mut observed: Vec<f64> = col.values.iter().flatten().copied().collect();
        let Some(m) = median(&mut observed) else {
            log::warn!("variable `{name}` has no observed training values; dropped");
            plan.dropped.push(name.clone());
            continue;
        };
        plan.medians.push((name.clone(), m));
        if col.missing_count() > 0 {
            let mut ind = format!("{INDICATOR_PREFIX}{name}");
            while taken.contains(ind.as_str()) {
                ind.insert(0, '_');
            }
            plan.indicators.push((name.clone(), ind));
        }
    }
    Ok(plan)
}

/// Fills planned variables with training medians and appends indicators.
/// The result holds the planned variables, then indicators, then the target.
pub fn apply_impute(plan: &ImputePlan, frame: &Frame) -> Result<Frame, PrepError> {
    let mut columns = Vec::with_capacity(plan.medians.len() + plan.indicators.len() + 1);
    for (name, m) in &plan.medians {
        let src = frame
            .column(name)
            .ok_or_else(|| FrameError::UnknownVariable(name.clone()))?;
        columns.push(Column::new(
            name.clone(),
            src.values.iter().map(|v| Some(v.unwrap_or(*m))).collect(),
        ));
    }
    for (name, ind) in &plan.indicators {
        let src = frame.column(name).expect("checked above");
        columns.push(Column::new(
            ind.clone(),
            src.values
                .iter()
                .map(|v| Some(if v.is_none() { 1.0 } else { 0.0 }))
                .collect(),
        ));
    }
    if let Some(t) = frame.target_name() {
        columns.push(frame.column(t).expect("target present").clone());
    }
    Ok(Frame::new(columns, frame.target_name().map(str::to_string))?)
}
