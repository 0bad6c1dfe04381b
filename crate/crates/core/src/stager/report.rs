use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ModelPath, StageOneResult};
use crate::glm::LogisticModel;
use crate::prep::INDICATOR_PREFIX;

const PATH_HEADER: [&str; 8] = [
    "Model Index",
    "# of Features",
    "Acc. on Train",
    "Acc. on Valid",
    "AUC on Train",
    "AUC on Valid",
    "KS on Train",
    "KS on Valid",
];
const COEF_HEADER: [&str; 4] = ["Feature Code", "Estimate", "p Value", "Feature Label"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Human-readable names for model terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureLabels {
    pub labels: BTreeMap<String, String>,
    /// Input pair of each constructed feature.
    pub constructed: BTreeMap<String, (String, String)>,
}

impl FeatureLabels {
    pub fn new(labels: BTreeMap<String, String>, stage_one: Option<&StageOneResult>) -> Self {
        let constructed = stage_one
            .map(|s| s.nets.iter().map(|n| (n.feature.clone(), n.net.input_names.clone())).collect())
            .unwrap_or_default();
        Self { labels, constructed }
    }

    pub fn label(&self, term: &str) -> String {
        if let Some(l) = self.labels.get(term) {
            return l.clone();
        }
        if let Some((a, b)) = self.constructed.get(term) {
            return format!("Newly created feature using {a} and {b}");
        }
        if let Some(base) = term.strip_prefix(INDICATOR_PREFIX) {
            return format!("Missing indicator of {base}");
        }
        String::new()
    }
}

pub fn format_p_value(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn render(header: &[&str], rows: &[Vec<String>], fmt: TableFormat) -> String {
    match fmt {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header).expect("in-memory write");
            for r in rows {
                w.write_record(r).expect("in-memory write");
            }
            String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
        }
        TableFormat::Markdown => {
            let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
            for r in rows {
                for (w, c) in width.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: Vec<&str>| {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(&width)
                    .map(|(c, &w)| format!("{c:<w$}"))
                    .collect();
                format!("| {} |\n", padded.join(" | "))
            };
            let mut out = line(header.to_vec());
            let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
            out.push_str(&format!("| {} |\n", rule.join(" | ")));
            for r in rows {
                out.push_str(&line(r.iter().map(String::as_str).collect()));
            }
            out
        }
    }
}

fn metric(v: f64, fmt: TableFormat) -> String {
    match fmt {
        TableFormat::Csv => format!("{v}"),
        TableFormat::Markdown => format!("{v:.3}"),
    }
}

/// Reduction-path table: the full model first, then every path step.
pub fn path_table(path: &ModelPath, fmt: TableFormat) -> String {
    let row = |index: String, s: &super::PathStep| {
        vec![
            index,
            s.n_features.to_string(),
            metric(s.train.accuracy, fmt),
            metric(s.valid.accuracy, fmt),
            metric(s.train.auc, fmt),
            metric(s.valid.auc, fmt),
            metric(s.train.ks, fmt),
            metric(s.valid.ks, fmt),
        ]
    };
    let mut rows = vec![row("Full Model".to_string(), &path.full)];
    rows.extend(path.steps.iter().enumerate().map(|(i, s)| row((i + 1).to_string(), s)));
    render(&PATH_HEADER, &rows, fmt)
}

/// Coefficient table with the intercept first.
pub fn coefficient_table(model: &LogisticModel<f64>, labels: &FeatureLabels, fmt: TableFormat) -> String {
    let mut rows = Vec::with_capacity(model.terms.len() + 1);
    let names = std::iter::once("Intercept").chain(model.terms.iter().map(String::as_str));
    for (i, name) in names.enumerate() {
        let (estimate, p) = match fmt {
            TableFormat::Csv => (format!("{}", model.coefficients[i]), format!("{}", model.p_values[i])),
            TableFormat::Markdown => (format!("{:.3}", model.coefficients[i]), format_p_value(model.p_values[i])),
        };
        let label = if i == 0 { "Model intercept".to_string() } else { labels.label(name) };
        rows.push(vec![name.to_string(), estimate, p, label]);
    }
    render(&COEF_HEADER, &rows, fmt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> LogisticModel<f64> {
        LogisticModel {
            terms: vec!["DELINQ".into(), "yhat_0".into()],
            coefficients: vec![-5.682, 0.622, 4.545],
            std_errors: vec![1.0; 3],
            wald_chisq: vec![30.0; 3],
            p_values: vec![1e-8, 0.0004, 0.25],
            log_likelihood: -1.0,
            iterations: 5,
            converged: true,
            quasi_separation: false,
            ridged: false,
        }
    }

    #[test]
    fn coefficient_table_layout() {
        let mut labels = FeatureLabels::default();
        labels.labels.insert("DELINQ".into(), "Number of delinquent credit lines".into());
        labels.constructed.insert("yhat_0".into(), ("LOAN".into(), "MORTDUE".into()));
        let csv = coefficient_table(&model(), &labels, TableFormat::Csv);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("Feature Code,Estimate,p Value,Feature Label"));
        assert_eq!(lines.next(), Some("Intercept,-5.682,0.00000001,Model intercept"));
        let md = coefficient_table(&model(), &labels, TableFormat::Markdown);
        assert!(md.contains("| yhat_0 "));
        assert!(md.contains("Newly created feature using LOAN and MORTDUE"));
        assert!(md.contains("<0.001"));
        assert!(md.contains("0.250"));
    }

    #[test]
    fn labels_for_indicators() {
        let l = FeatureLabels::default();
        assert_eq!(l.label("M_DEBTINC"), "Missing indicator of DEBTINC");
        assert_eq!(l.label("LOAN"), "");
    }

    #[test]
    fn p_value_format() {
        assert_eq!(format_p_value(0.0009), "<0.001");
        assert_eq!(format_p_value(0.04321), "0.043");
    }
}
