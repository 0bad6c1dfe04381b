use serde::{Deserialize, Serialize};

use super::{dense_columns, labels_of, StageConfig, StagerError};
use crate::glm::{fit_logistic, predict_proba, stepwise_select, vif, Design, FitOptions, LogisticModel};
use crate::ingest::Frame;
use crate::metrics::{evaluate, Evaluation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub n_features: usize,
    pub model: LogisticModel<f64>,
    pub train: Evaluation,
    pub valid: Evaluation,
    /// Variables removed since the previous step.
    pub removed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPath {
    /// All candidates, no selection.
    pub full: PathStep,
    pub stepwise_terms: Vec<String>,
    pub vif_removed: Vec<String>,
    pub sign_removed: Vec<String>,
    /// Base model first, then one fewer feature per step.
    pub steps: Vec<PathStep>,
}

impl ModelPath {
    pub fn base(&self) -> &PathStep {
        &self.steps[0]
    }

    pub fn with_features(&self, n: usize) -> Option<&PathStep> {
        self.steps.iter().find(|s| s.n_features == n)
    }
}

struct Workspace<'a> {
    names: &'a [String],
    train: Vec<Vec<f64>>,
    valid: Vec<Vec<f64>>,
    y_train: Vec<u8>,
    y_valid: Vec<u8>,
    threshold: f64,
}

impl Workspace<'_> {
    fn design(&self) -> Result<Design<'_, f64>, StagerError> {
        Ok(Design::from_columns(self.names, &self.train)?)
    }

    fn fit(&self, set: &[usize], opts: &FitOptions<f64>) -> Result<LogisticModel<f64>, StagerError> {
        if set.is_empty() {
            let design = Design::new(vec![], vec![], self.y_train.len())?;
            return Ok(fit_logistic(&design, &self.y_train, opts)?);
        }
        Ok(fit_logistic(&self.design()?.subset(set), &self.y_train, opts)?)
    }

    fn step(&self, set: &[usize], model: LogisticModel<f64>, removed: Vec<String>) -> Result<PathStep, StagerError> {
        let tr: Vec<&[f64]> = set.iter().map(|&j| self.train[j].as_slice()).collect();
        let va: Vec<&[f64]> = set.iter().map(|&j| self.valid[j].as_slice()).collect();
        let p_train = predict_proba(&model, &tr)?;
        let p_valid = predict_proba(&model, &va)?;
        Ok(PathStep {
            n_features: set.len(),
            train: evaluate(&p_train, &self.y_train, self.threshold)?,
            valid: evaluate(&p_valid, &self.y_valid, self.threshold)?,
            model,
            removed,
        })
    }

    /// Drops every negative coefficient and refits until none remain.
    fn sign_prune(
        &self,
        set: &mut Vec<usize>,
        opts: &FitOptions<f64>,
        removed: &mut Vec<String>,
    ) -> Result<Option<LogisticModel<f64>>, StagerError> {
        loop {
            if set.is_empty() {
                return Ok(None);
            }
            let m = self.fit(set, opts)?;
            let negative: Vec<usize> = set
                .iter()
                .enumerate()
                .filter(|&(pos, _)| m.coefficients[pos + 1] < 0.0)
                .map(|(_, &j)| j)
                .collect();
            if negative.is_empty() {
                return Ok(Some(m));
            }
            removed.extend(negative.iter().map(|&j| self.names[j].clone()));
            set.retain(|j| !negative.contains(j));
        }
    }
}

/// Full model, stepwise selection, VIF pruning, sign pruning and the
/// Wald-ordered reduction path over `candidates`.
pub fn run_stage_two(train: &Frame, valid: &Frame, candidates: &[String], cfg: &StageConfig) -> Result<ModelPath, StagerError> {
    if candidates.is_empty() {
        return Err(StagerError::NoCandidates);
    }
    let ws = Workspace {
        names: candidates,
        train: dense_columns(train, candidates)?,
        valid: dense_columns(valid, candidates)?,
        y_train: labels_of(train)?,
        y_valid: labels_of(valid)?,
        threshold: cfg.threshold,
    };
    let robust = FitOptions {
        ridge_inference: true,
        ..cfg.fit
    };

    let all: Vec<usize> = (0..candidates.len()).collect();
    let full_model = ws.fit(&all, &robust)?;
    if full_model.ridged {
        log::warn!("full model information is singular; standard errors are ridge-stabilised");
    }
    let full = ws.step(&all, full_model, Vec::new())?;

    let selected = stepwise_select(&ws.design()?, &ws.y_train, cfg.alpha_enter, cfg.alpha_stay, &cfg.fit)?;
    let mut set: Vec<usize> = selected
        .terms
        .iter()
        .map(|t| candidates.iter().position(|c| c == t).expect("selected from candidates"))
        .collect();
    let stepwise_terms = selected.terms.clone();

    let mut vif_removed = Vec::new();
    while set.len() >= 2 {
        let names: Vec<String> = set.iter().map(|&j| candidates[j].clone()).collect();
        let cols: Vec<&[f64]> = set.iter().map(|&j| ws.train[j].as_slice()).collect();
        let v = vif(&names, &cols)?;
        let (worst, &max) = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        if max <= cfg.vif_threshold {
            break;
        }
        vif_removed.push(candidates[set[worst]].clone());
        set.remove(worst);
    }

    let mut sign_removed = Vec::new();
    let base = ws
        .sign_prune(&mut set, &robust, &mut sign_removed)?
        .ok_or(StagerError::EmptyAfterPruning)?;
    let mut steps = vec![ws.step(&set, base, Vec::new())?];

    while set.len() > 1 {
        let model = &steps.last().expect("base step").model;
        let (pos, _) = model.wald_chisq[1..]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .expect("non-empty");
        let mut removed = vec![candidates[set[pos]].clone()];
        set.remove(pos);
        let Some(m) = ws.sign_prune(&mut set, &robust, &mut removed)? else {
            break;
        };
        steps.push(ws.step(&set, m, removed)?);
    }

    Ok(ModelPath {
        full,
        stepwise_terms,
        vif_removed,
        sign_removed,
        steps,
    })
}

/// Stage two over the frame's own features only.
pub fn run_one_stage(train: &Frame, valid: &Frame, cfg: &StageConfig) -> Result<ModelPath, StagerError> {
    run_stage_two(train, valid, &train.feature_names(), cfg)
}
