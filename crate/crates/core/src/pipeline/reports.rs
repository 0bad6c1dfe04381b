use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{io_err, ModelArtifact, PipelineError};
use crate::stager::{coefficient_table, path_table, FeatureLabels, ModelPath, TableFormat};

fn model_titles(path: &ModelPath) -> Vec<(String, String, &crate::glm::LogisticModel<f64>)> {
    let mut out = vec![("full".to_string(), "Full Model".to_string(), &path.full.model)];
    for (i, s) in path.steps.iter().enumerate() {
        out.push((
            format!("model_{}", i + 1),
            format!("Model {} ({} features)", i + 1, s.n_features),
            &s.model,
        ));
    }
    out
}

fn coefficient_markdown(path: &ModelPath, labels: &FeatureLabels) -> String {
    let mut md = String::new();
    for (_, title, model) in model_titles(path) {
        let _ = writeln!(md, "### {title}\n");
        md.push_str(&coefficient_table(model, labels, TableFormat::Markdown));
        md.push('\n');
    }
    md
}

fn pairs_csv(a: &ModelArtifact) -> String {
    let s = &a.stage_one;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["variable_a", "variable_b", "wald", "p_value", "converged", "rank"])
        .expect("in-memory write");
    for p in &s.scored_pairs {
        let rank = s
            .top_pairs
            .iter()
            .position(|t| t.pair == p.pair)
            .map_or(String::new(), |r| r.to_string());
        w.write_record([
            p.pair.0.clone(),
            p.pair.1.clone(),
            p.wald.to_string(),
            p.p.to_string(),
            p.converged.to_string(),
            rank,
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn nets_csv(a: &ModelArtifact) -> String {
    let s = &a.stage_one;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "feature",
        "variable_a",
        "variable_b",
        "unit",
        "w1",
        "w2",
        "b1",
        "v",
        "b2",
        "final_loss",
        "learning_rate",
        "iterations",
        "converged",
        "new_feature",
    ])
    .expect("in-memory write");
    for n in &s.nets {
        let kept = s.new_features.contains(&n.feature);
        for (u, h) in n.net.hidden.iter().enumerate() {
            w.write_record([
                n.feature.clone(),
                n.net.input_names.0.clone(),
                n.net.input_names.1.clone(),
                u.to_string(),
                h.w1.to_string(),
                h.w2.to_string(),
                h.b1.to_string(),
                h.v.to_string(),
                n.net.b2.to_string(),
                n.report.final_loss.to_string(),
                n.report.learning_rate.to_string(),
                n.report.iterations.to_string(),
                n.report.converged.to_string(),
                kept.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

fn report_csv(r: &crate::varclust::RepresentativeReport<f64>) -> String {
    let mut buf = Vec::new();
    r.write_csv(&mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

/// Every report file as (relative path, contents), in a fixed order.
pub fn render_reports(a: &ModelArtifact) -> Vec<(String, String)> {
    let labels = FeatureLabels::new(a.config.labels.clone(), Some(&a.stage_one));
    let mut files = Vec::new();
    for (prefix, path) in [("two_stage", &a.two_stage), ("one_stage", &a.one_stage)] {
        files.push((format!("{prefix}_path.csv"), path_table(path, TableFormat::Csv)));
        files.push((format!("{prefix}_path.md"), path_table(path, TableFormat::Markdown)));
        files.push((format!("{prefix}_coefficients.md"), coefficient_markdown(path, &labels)));
        for (key, _, model) in model_titles(path) {
            files.push((
                format!("coefficients/{prefix}_{key}.csv"),
                coefficient_table(model, &labels, TableFormat::Csv),
            ));
        }
    }
    files.push(("stage_one_pairs.csv".into(), pairs_csv(a)));
    files.push(("stage_one_nets.csv".into(), nets_csv(a)));
    files.push(("stage_one_clusters.csv".into(), report_csv(&a.stage_one.cluster_report)));
    files.push(("variable_clusters.csv".into(), report_csv(&a.raw_clusters)));
    files
}

pub fn write_reports(a: &ModelArtifact, dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut written = Vec::new();
    for (rel, text) in render_reports(a) {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok(written)
}
