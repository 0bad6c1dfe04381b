//! End-to-end runs: configuration, preprocessing, both modelling paths,
//! the serialized model artifact, scoring and report files.

mod config;
mod reports;

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glm::predict_proba;
use crate::ingest::{load_csv_detailed, read_csv, Frame, IngestError, Loaded, OrdinalMaps};
use crate::linalg::variance;
use crate::prep::{apply_impute, apply_woe, fit_impute, fit_woe_with, stratified_split, ImputePlan, PrepError, WoeEncoder};
use crate::stager::{build_stage_one, run_one_stage, run_stage_two, ModelPath, PathStep, StageOneResult, StagerError};
use crate::synth::SynthError;
use crate::varclust::{cluster_variables, select_representatives, RepresentativeReport, VarclusError};

pub use config::{ConfigError, PipelineConfig, DEFAULT_FRACTION};
pub use reports::{render_reports, write_reports};

pub const ARTIFACT_VERSION: &str = "twostage-model/1";
pub const ARTIFACT_FILE: &str = "model.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Prep(#[from] PrepError),
    #[error("input is missing column `{0}` required by the model")]
    SchemaMismatch(String),
    #[error("model artifact: {0}")]
    Artifact(#[from] serde_json::Error),
    #[error("unsupported artifact version `{0}`")]
    ArtifactVersion(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error("no model `{0}` in the artifact")]
    UnknownModel(String),
    #[error(transparent)]
    Varclust(#[from] VarclusError),
    #[error(transparent)]
    Stager(#[from] StagerError),
}

impl PipelineError {
    /// Process exit status: 1 validation, 2 data, 3 modelling.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Synth(_) | Self::Pool(_) | Self::UnknownModel(_) => 1,
            Self::Ingest(_)
            | Self::Prep(_)
            | Self::SchemaMismatch(_)
            | Self::Artifact(_)
            | Self::ArtifactVersion(_)
            | Self::Io { .. } => 2,
            Self::Varclust(_) | Self::Stager(_) => 3,
        }
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub fraction: f64,
    pub train_rows: usize,
    pub valid_rows: usize,
    pub train_event_rate: f64,
    pub valid_event_rate: f64,
}

/// Everything needed to score new data and to re-render the reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: String,
    pub config: PipelineConfig,
    pub ordinal_maps: OrdinalMaps,
    pub split: SplitSummary,
    pub impute: ImputePlan,
    pub raw_clusters: RepresentativeReport<f64>,
    /// Imputed variables kept as cluster representatives.
    pub kept_variables: Vec<String>,
    pub woe: WoeEncoder,
    pub stage_one: StageOneResult,
    pub two_stage: ModelPath,
    pub one_stage: ModelPath,
}

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String, PipelineError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let a: Self = serde_json::from_str(text)?;
        if a.version != ARTIFACT_VERSION {
            return Err(PipelineError::ArtifactVersion(a.version));
        }
        Ok(a)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(io_err(path))
    }

    pub fn path(&self, kind: PathKind) -> &ModelPath {
        match kind {
            PathKind::TwoStage => &self.two_stage,
            PathKind::OneStage => &self.one_stage,
        }
    }

    pub fn select(&self, sel: &ModelSelector) -> Result<&PathStep, PipelineError> {
        let path = self.path(sel.path);
        match sel.index {
            None => Ok(&path.full),
            Some(k) if k >= 1 && k <= path.steps.len() => Ok(&path.steps[k - 1]),
            Some(_) => Err(PipelineError::UnknownModel(sel.to_string())),
        }
    }

    /// Imputation restricted to what the encoder needs.
    pub fn scoring_plan(&self) -> ImputePlan {
        let needed: BTreeSet<String> = self.woe.names().into_iter().collect();
        let indicators: Vec<(String, String)> = self
            .impute
            .indicators
            .iter()
            .filter(|(_, ind)| needed.contains(ind))
            .cloned()
            .collect();
        let medians = self
            .impute
            .medians
            .iter()
            .filter(|(v, _)| needed.contains(v) || indicators.iter().any(|(iv, _)| iv == v))
            .cloned()
            .collect();
        ImputePlan {
            medians,
            indicators,
            dropped: Vec::new(),
        }
    }

    /// Raw input columns a scoring file must provide.
    pub fn required_columns(&self) -> Vec<String> {
        self.scoring_plan().variables().map(str::to_string).collect()
    }

    /// Imputed, WOE-encoded frame extended by the stage-one features.
    pub fn transform(&self, raw: &Frame) -> Result<Frame, PipelineError> {
        let required = self.required_columns();
        if let Some(m) = required.iter().find(|c| !raw.has(c)) {
            return Err(PipelineError::SchemaMismatch(m.clone()));
        }
        let extra: Vec<String> = raw
            .feature_names()
            .into_iter()
            .filter(|c| !required.contains(c))
            .collect();
        if !extra.is_empty() {
            log::warn!("ignoring {} input columns not used by the model: {}", extra.len(), extra.join(", "));
        }
        let imputed = apply_impute(&self.scoring_plan(), raw)?;
        let encoded = apply_woe(&self.woe, &imputed)?;
        Ok(self.stage_one.append_features(&encoded)?)
    }

    /// Predicted event probability per row for the selected model.
    pub fn score(&self, raw: &Frame, sel: &ModelSelector) -> Result<Vec<f64>, PipelineError> {
        let step = self.select(sel)?;
        let frame = self.transform(raw)?;
        predict_step(step, &frame)
    }

    /// Reads a CSV with the training-time category codes and scores it.
    pub fn score_csv(&self, path: impl AsRef<Path>, sel: &ModelSelector) -> Result<Vec<f64>, PipelineError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(io_err(path))?;
        let mut ingest = self.config.ingest();
        ingest.ordinal_maps = self.ordinal_maps.clone();
        let required = self.required_columns();
        ingest.categorical.retain(|c| required.contains(c));
        let loaded = read_csv(std::io::BufReader::new(file), &ingest, false)?;
        self.score(&loaded.frame, sel)
    }
}

pub fn predict_step(step: &PathStep, frame: &Frame) -> Result<Vec<f64>, PipelineError> {
    let cols = step
        .model
        .terms
        .iter()
        .map(|t| {
            frame
                .values_f64(t)
                .map_err(|_| PipelineError::SchemaMismatch(t.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    predict_proba(&step.model, &refs).map_err(|e| StagerError::from(e).into())
}

pub fn write_scores<W: Write>(scores: &[f64], w: W) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["row", "p_hat"])?;
    for (i, p) in scores.iter().enumerate() {
        out.write_record([i.to_string(), p.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    TwoStage,
    OneStage,
}

/// A model on one of the paths: `index = None` is the full model,
/// `Some(k)` the k-th reduction step (1 is the base model).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSelector {
    pub path: PathKind,
    pub index: Option<usize>,
}

impl Default for ModelSelector {
    fn default() -> Self {
        Self {
            path: PathKind::TwoStage,
            index: Some(1),
        }
    }
}

impl std::fmt::Display for ModelSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = match self.path {
            PathKind::TwoStage => "two",
            PathKind::OneStage => "one",
        };
        match self.index {
            None => write!(f, "{p}:full"),
            Some(k) => write!(f, "{p}:{k}"),
        }
    }
}

impl std::str::FromStr for ModelSelector {
    type Err = String;

    /// Parses `two:full`, `one:3`, `two` (base model) and the like.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, idx) = s.split_once(':').unwrap_or((s, "1"));
        let path = match p {
            "two" | "two-stage" => PathKind::TwoStage,
            "one" | "one-stage" => PathKind::OneStage,
            _ => return Err(format!("unknown path `{p}` (expected `one` or `two`)")),
        };
        let index = match idx {
            "full" => None,
            k => Some(
                k.parse::<usize>()
                    .map_err(|_| format!("invalid model index `{k}`"))?,
            ),
        };
        Ok(Self { path, index })
    }
}

/// Preprocessed frames and the fitted transforms behind them.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ordinal_maps: OrdinalMaps,
    pub split: SplitSummary,
    pub impute: ImputePlan,
    pub raw_clusters: RepresentativeReport<f64>,
    pub kept_variables: Vec<String>,
    pub woe: WoeEncoder,
    /// WOE-encoded training frame.
    pub train: Frame,
    /// WOE-encoded validation frame.
    pub valid: Frame,
}

fn event_rate(f: &Frame) -> f64 {
    let y = f.labels().unwrap_or_default();
    y.iter().map(|&v| f64::from(v)).sum::<f64>() / y.len().max(1) as f64
}

/// Split, impute, cluster the imputed variables and WOE-encode the kept
/// representatives.
pub fn prepare(cfg: &PipelineConfig, loaded: Loaded) -> Result<Prepared, PipelineError> {
    let split = stratified_split(&loaded.frame, cfg.fraction, cfg.seed)?;
    let impute = fit_impute(&split.train)?;
    let train_imp = apply_impute(&impute, &split.train)?;
    let valid_imp = apply_impute(&impute, &split.valid)?;

    let mut names = Vec::new();
    let mut data = Vec::new();
    for name in train_imp.feature_names() {
        let v = train_imp.values_f64(&name).map_err(PrepError::from)?;
        if variance(&v) > 0.0 {
            names.push(name);
            data.push(v);
        } else {
            log::warn!("variable `{name}` is constant on train; left out");
        }
    }
    if names.is_empty() {
        return Err(StagerError::NoCandidates.into());
    }
    let model = cluster_variables(&names, &data, cfg.min_explained)?;
    let raw_clusters = select_representatives(&model, &names, &data)?;
    let kept: BTreeSet<&String> = raw_clusters.representatives.iter().collect();
    let kept_variables: Vec<String> = names.iter().filter(|n| kept.contains(n)).cloned().collect();
    log::info!("{} of {} variables kept after clustering", kept_variables.len(), names.len());

    let woe = fit_woe_with(&train_imp, &kept_variables, cfg.n_bins, cfg.smoothing)?;
    let train = apply_woe(&woe, &train_imp)?;
    let valid = apply_woe(&woe, &valid_imp)?;
    Ok(Prepared {
        ordinal_maps: loaded.ordinal_maps,
        split: SplitSummary {
            seed: split.seed,
            fraction: split.fraction,
            train_rows: split.train.n_rows(),
            valid_rows: split.valid.n_rows(),
            train_event_rate: event_rate(&split.train),
            valid_event_rate: event_rate(&split.valid),
        },
        impute,
        raw_clusters,
        kept_variables,
        woe,
        train,
        valid,
    })
}

/// Stage one, stage two and the one-stage baseline on prepared frames.
pub fn fit_models(cfg: &PipelineConfig, prepared: Prepared) -> Result<ModelArtifact, PipelineError> {
    let stage = cfg.stage();
    let one_stage = run_one_stage(&prepared.train, &prepared.valid, &stage)?;
    let (stage_one, train2, valid2) = build_stage_one(&prepared.train, &prepared.valid, &stage)?;
    log::info!(
        "stage one: {} pairs screened, {} nets, {} new features",
        stage_one.scored_pairs.len(),
        stage_one.nets.len(),
        stage_one.new_features.len()
    );
    let mut candidates = prepared.train.feature_names();
    candidates.extend(stage_one.new_features.iter().cloned());
    let two_stage = run_stage_two(&train2, &valid2, &candidates, &stage)?;

    let mut snapshot = cfg.clone();
    snapshot.workers = 0;
    Ok(ModelArtifact {
        version: ARTIFACT_VERSION.to_string(),
        config: snapshot,
        ordinal_maps: prepared.ordinal_maps,
        split: prepared.split,
        impute: prepared.impute,
        raw_clusters: prepared.raw_clusters,
        kept_variables: prepared.kept_variables,
        woe: prepared.woe,
        stage_one,
        two_stage,
        one_stage,
    })
}

/// Runs `f` on a worker pool of the configured size.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Fits everything on an already loaded dataset.
pub fn run_loaded(cfg: &PipelineConfig, loaded: Loaded) -> Result<ModelArtifact, PipelineError> {
    cfg.validate()?;
    with_workers(cfg.workers, || fit_models(cfg, prepare(cfg, loaded)?))?
}

/// Loads the configured input and fits everything.
pub fn run(cfg: &PipelineConfig) -> Result<ModelArtifact, PipelineError> {
    cfg.validate()?;
    let loaded = load_csv_detailed(&cfg.input, &cfg.ingest())?;
    run_loaded(cfg, loaded)
}

/// Writes the artifact and every report into `dir`; returns the paths.
pub fn write_outputs(artifact: &ModelArtifact, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = dir.as_ref();
    let mut written = write_reports(artifact, dir)?;
    let path = dir.join(ARTIFACT_FILE);
    artifact.save(&path)?;
    written.push(path);
    Ok(written)
}
