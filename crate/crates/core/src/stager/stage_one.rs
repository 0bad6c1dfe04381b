use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dense_columns, enumerate_pairs, labels_of, screen_interactions, select_top_n, PairScore, StageConfig, StagerError};
use crate::ingest::Frame;
use crate::linalg::variance;
use crate::tinynet::{feature_name, predict_column, train, TinyNet, TrainReport};
use crate::varclust::{cluster_variables, select_representatives, RepresentativeReport};

/// Per-network seed derived from the run seed and the network's rank.
pub fn derive_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed.wrapping_add((index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneNet {
    /// Rank of the pair among the selected top pairs.
    pub index: usize,
    pub feature: String,
    pub wald: f64,
    pub net: TinyNet<f64>,
    pub report: TrainReport<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOneResult {
    pub scored_pairs: Vec<PairScore>,
    pub top_pairs: Vec<PairScore>,
    /// Fewer converged pairs than requested.
    pub saturated: bool,
    /// Successfully trained networks, by rank.
    pub nets: Vec<StageOneNet>,
    /// Representative network outputs kept as new features.
    pub new_features: Vec<String>,
    pub cluster_report: RepresentativeReport<f64>,
}

impl StageOneResult {
    pub fn net_for(&self, feature: &str) -> Option<&StageOneNet> {
        self.nets.iter().find(|n| n.feature == feature)
    }

    /// Appends the new feature columns, computed by the frozen networks.
    pub fn append_features(&self, frame: &Frame) -> Result<Frame, StagerError> {
        let cols = self
            .new_features
            .iter()
            .map(|f| {
                let n = self.net_for(f).expect("new features come from trained nets");
                predict_column(&n.net, frame, n.index).map_err(StagerError::from)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(frame.with_columns(cols)?)
    }
}

/// Screens all pairs of the frame's features, trains one network per top
/// pair and keeps the cluster representatives of the network outputs.
/// Returns the result together with both frames extended by the new
/// features.
pub fn build_stage_one(train_frame: &Frame, valid: &Frame, cfg: &StageConfig) -> Result<(StageOneResult, Frame, Frame), StagerError> {
    let features = train_frame.feature_names();
    let pairs = enumerate_pairs(&features)?;
    let scored_pairs = screen_interactions(train_frame, &pairs, &cfg.fit)?;
    let (top, saturated) = select_top_n(&scored_pairs, cfg.top_n)?;
    if top.is_empty() {
        return Err(StagerError::NoConvergedPairs);
    }
    let top_pairs: Vec<PairScore> = top.iter().map(|&i| scored_pairs[i].clone()).collect();
    let y = labels_of(train_frame)?;

    let trained: Vec<Option<StageOneNet>> = top_pairs
        .par_iter()
        .enumerate()
        .map(|(index, ps)| {
            let cols = dense_columns(train_frame, &[ps.pair.0.clone(), ps.pair.1.clone()])?;
            match train(&cols[0], &cols[1], &y, ps.pair.clone(), derive_seed(cfg.seed, index), &cfg.net) {
                Ok((net, report)) => Ok(Some(StageOneNet {
                    index,
                    feature: feature_name(index),
                    wald: ps.wald,
                    net,
                    report,
                })),
                Err(e) => {
                    log::warn!("network for ({}, {}) discarded: {e}", ps.pair.0, ps.pair.1);
                    Ok(None)
                }
            }
        })
        .collect::<Result<_, StagerError>>()?;
    let nets: Vec<StageOneNet> = trained.into_iter().flatten().collect();

    let mut names = Vec::new();
    let mut outputs = Vec::new();
    for n in &nets {
        let col = predict_column(&n.net, train_frame, n.index)?;
        let values: Vec<f64> = col.values.iter().map(|v| v.expect("dense inputs")).collect();
        if variance(&values) > 0.0 {
            names.push(n.feature.clone());
            outputs.push(values);
        } else {
            log::warn!("{} is constant on train and is not clustered", n.feature);
        }
    }
    if names.is_empty() {
        return Err(StagerError::AllNetsDiverged);
    }
    let model = cluster_variables(&names, &outputs, cfg.min_explained)?;
    let cluster_report = select_representatives(&model, &names, &outputs)?;
    let mut new_features = cluster_report.representatives.clone();
    new_features.sort_by_key(|f| nets.iter().position(|n| &n.feature == f));

    let result = StageOneResult {
        scored_pairs,
        top_pairs,
        saturated,
        nets,
        new_features,
        cluster_report,
    };
    let train_out = result.append_features(train_frame)?;
    let valid_out = result.append_features(valid)?;
    Ok((result, train_out, valid_out))
}
