//! Two-stage credit scoring: small neural networks construct pairwise
//! features that feed a regulated stepwise logistic regression, with a
//! one-stage logistic baseline and holdout evaluation for comparison.
//!
//! The numerical modules ([`glm`], [`tinynet`], [`varclust`], [`metrics`],
//! [`linalg`]) are generic over [`Scalar`] (`f32` or `f64`); data frames
//! and the orchestration layers work in `f64`.

pub mod glm;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod prep;
pub mod scalar;
pub mod stager;
pub mod synth;
pub mod tinynet;
pub mod varclust;

pub use ingest::{load_csv, Column, Frame, IngestConfig};
pub use pipeline::{ModelArtifact, ModelSelector, PathKind, PipelineConfig, PipelineError as Error};
pub use scalar::Scalar;

pub type LogisticModel64 = glm::LogisticModel<f64>;
pub type LogisticModel32 = glm::LogisticModel<f32>;
pub type FitOptions64 = glm::FitOptions<f64>;
pub type TinyNet64 = tinynet::TinyNet<f64>;
pub type TinyNet32 = tinynet::TinyNet<f32>;
pub type TrainConfig64 = tinynet::TrainConfig<f64>;
pub type ClusterModel64 = varclust::ClusterModel<f64>;
pub type RepresentativeReport64 = varclust::RepresentativeReport<f64>;
