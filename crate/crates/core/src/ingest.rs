//! CSV ingestion into a columnar [`Frame`].
//!
//! Every cell ends up either a finite `f64` or missing. Unparseable tokens and
//! configured sentinels become missing; the target column is mapped to
//! `{0, 1}` through the configured positive label and may not contain gaps.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("column `{name}` has {got} rows, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("target column `{0}` not present")]
    MissingTargetColumn(String),
    #[error("target column `{name}` must hold only 0/1 without gaps (row {row})")]
    InvalidTarget { name: String, row: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("input has no header or no data rows")]
    EmptyFile,
    #[error("target column `{0}` not found in header")]
    MissingTargetColumn(String),
    #[error("target column has a missing or invalid value at data row {row}")]
    MissingTargetValue { row: usize },
    #[error("target column has more than two distinct values (saw `{value}` at data row {row})")]
    NonBinaryTarget { row: usize, value: String },
    #[error("categorical column `{0}` not found in header")]
    UnknownCategorical(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// A named numeric column; `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            values,
        }
    }

    pub fn dense(name: impl Into<String>, values: &[f64]) -> Self {
        Self::new(name, values.iter().map(|&v| Some(v)).collect())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }
}

/// Immutable columnar dataset with an optional binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    n_rows: usize,
    target: Option<String>,
}

impl Frame {
    pub fn new(columns: Vec<Column>, target: Option<String>) -> Result<Self, FrameError> {
        let n_rows = columns.first().map_or(0, |c| c.values.len());
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.values.len() != n_rows {
                return Err(FrameError::LengthMismatch {
                    name: c.name.clone(),
                    expected: n_rows,
                    got: c.values.len(),
                });
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(FrameError::DuplicateColumn(c.name.clone()));
            }
        }
        if let Some(t) = &target {
            let col = index
                .get(t)
                .map(|&i| &columns[i])
                .ok_or_else(|| FrameError::MissingTargetColumn(t.clone()))?;
            if let Some(row) = col
                .values
                .iter()
                .position(|v| !matches!(v, Some(x) if *x == 0.0 || *x == 1.0))
            {
                return Err(FrameError::InvalidTarget {
                    name: t.clone(),
                    row,
                });
            }
        }
        Ok(Self {
            columns,
            index,
            n_rows,
            target,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target.as_deref()
    }

    /// All column names except the target, in column order.
    pub fn feature_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| Some(c.name.as_str()) != self.target.as_deref())
            .map(|c| c.name.clone())
            .collect()
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.index.get(name).map(|&i| &self.columns[i])
    }

    pub fn values(&self, name: &str) -> Result<&[Option<f64>], FrameError> {
        self.column(name)
            .map(|c| c.values.as_slice())
            .ok_or_else(|| FrameError::UnknownVariable(name.to_string()))
    }

    /// Column values with missing cells rendered as NaN.
    pub fn values_f64(&self, name: &str) -> Result<Vec<f64>, FrameError> {
        Ok(self
            .values(name)?
            .iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect())
    }

    /// Target as `u8` labels, if a target is designated.
    pub fn labels(&self) -> Option<Vec<u8>> {
        let t = self.target.as_deref()?;
        let col = self.column(t)?;
        Some(
            col.values
                .iter()
                .map(|v| u8::from(v.unwrap_or(0.0) == 1.0))
                .collect(),
        )
    }

    pub fn select_rows(&self, rows: &[usize]) -> Frame {
        let columns = self
            .columns
            .iter()
            .map(|c| Column::new(c.name.clone(), rows.iter().map(|&r| c.values[r]).collect()))
            .collect();
        Frame::new(columns, self.target.clone()).expect("row subset preserves frame invariants")
    }

    /// Keeps the named columns (plus the target) in the given order.
    pub fn select_columns(&self, names: &[String]) -> Result<Frame, FrameError> {
        let mut columns = Vec::with_capacity(names.len() + 1);
        for n in names {
            columns.push(
                self.column(n)
                    .cloned()
                    .ok_or_else(|| FrameError::UnknownVariable(n.clone()))?,
            );
        }
        if let Some(t) = &self.target {
            if !names.iter().any(|n| n == t) {
                columns.push(self.column(t).cloned().expect("target present"));
            }
        }
        Frame::new(columns, self.target.clone())
    }

    pub fn with_columns(&self, extra: Vec<Column>) -> Result<Frame, FrameError> {
        let mut columns = self.columns.clone();
        columns.extend(extra);
        Frame::new(columns, self.target.clone())
    }

    /// Replaces columns by name, keeping their position.
    pub fn replace_columns(&self, replacements: Vec<Column>) -> Result<Frame, FrameError> {
        let mut columns = self.columns.clone();
        for c in replacements {
            let i = *self
                .index
                .get(&c.name)
                .ok_or_else(|| FrameError::UnknownVariable(c.name.clone()))?;
            columns[i] = c;
        }
        Frame::new(columns, self.target.clone())
    }

    /// Writes the frame as CSV with empty cells for missing values.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), IngestError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        let mut record = Vec::with_capacity(self.columns.len());
        for r in 0..self.n_rows {
            record.clear();
            for c in &self.columns {
                record.push(match c.values[r] {
                    Some(v) => format!("{v}"),
                    None => String::new(),
                });
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<(), IngestError> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Ordered category lists per categorical column; position is the numeric code.
pub type OrdinalMaps = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub target_name: String,
    /// Raw tokens treated as missing (compared as text, and numerically when both parse).
    pub invalid_sentinels: Vec<String>,
    /// Raw target value mapped to 1; the other observed value maps to 0.
    pub positive_label: String,
    /// Columns holding category tokens rather than numbers.
    pub categorical: Vec<String>,
    /// Explicit category order per column; absent columns are ordered by event rate.
    pub ordinal_maps: OrdinalMaps,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            target_name: "target".into(),
            invalid_sentinels: Vec::new(),
            positive_label: "1".into(),
            categorical: Vec::new(),
            ordinal_maps: OrdinalMaps::new(),
        }
    }
}

impl IngestConfig {
    pub fn new(target_name: impl Into<String>) -> Self {
        Self {
            target_name: target_name.into(),
            ..Self::default()
        }
    }

    fn is_sentinel(&self, token: &str) -> bool {
        let num = token.parse::<f64>().ok();
        self.invalid_sentinels.iter().any(|s| {
            let s = s.trim();
            s == token || matches!((num, s.parse::<f64>()), (Some(a), Ok(b)) if a == b)
        })
    }
}

/// Result of reading a CSV: the frame plus the category codes actually used.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub frame: Frame,
    pub ordinal_maps: OrdinalMaps,
}

pub fn load_csv(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<Frame, IngestError> {
    Ok(load_csv_detailed(path, cfg)?.frame)
}

pub fn load_csv_detailed(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<Loaded, IngestError> {
    let f = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(f), cfg, true)
}

fn same_token(a: &str, b: &str) -> bool {
    a == b || matches!((a.parse::<f64>(), b.parse::<f64>()), (Ok(x), Ok(y)) if x == y)
}

/// Parses CSV text. With `require_target = false` the target column may be
/// absent (scoring input); when present it is still validated.
pub fn read_csv<R: Read>(reader: R, cfg: &IngestConfig, require_target: bool) -> Result<Loaded, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(IngestError::EmptyFile);
    }
    let mut raw: Vec<Vec<String>> = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (j, cell) in rec.iter().enumerate() {
            raw[j].push(cell.to_string());
        }
    }
    let n_rows = raw[0].len();
    if n_rows == 0 {
        return Err(IngestError::EmptyFile);
    }

    let target_idx = header.iter().position(|h| *h == cfg.target_name);
    if target_idx.is_none() && require_target {
        return Err(IngestError::MissingTargetColumn(cfg.target_name.clone()));
    }
    let categorical: HashSet<&str> = cfg.categorical.iter().map(String::as_str).collect();
    for c in &cfg.categorical {
        if !header.contains(c) {
            return Err(IngestError::UnknownCategorical(c.clone()));
        }
    }

    let labels = match target_idx {
        Some(t) => Some(map_target(&raw[t], cfg)?),
        None => None,
    };

    let mut ordinal_maps = OrdinalMaps::new();
    let mut columns = Vec::with_capacity(header.len());
    for (j, name) in header.iter().enumerate() {
        if Some(j) == target_idx {
            let l = labels.as_ref().expect("labels mapped");
            columns.push(Column::new(name.clone(), l.iter().map(|&v| Some(f64::from(v))).collect()));
            continue;
        }
        if categorical.contains(name.as_str()) {
            let order = match cfg.ordinal_maps.get(name) {
                Some(o) => o.clone(),
                None => event_rate_order(&raw[j], labels.as_deref(), cfg),
            };
            let codes: HashMap<&str, f64> = order
                .iter()
                .enumerate()
                .map(|(k, s)| (s.as_str(), k as f64))
                .collect();
            let values = raw[j]
                .iter()
                .map(|tok| {
                    if tok.is_empty() || cfg.is_sentinel(tok) {
                        None
                    } else {
                        let code = codes.get(tok.as_str()).copied();
                        if code.is_none() {
                            log::warn!("column `{name}`: unseen category `{tok}` treated as missing");
                        }
                        code
                    }
                })
                .collect();
            ordinal_maps.insert(name.clone(), order);
            columns.push(Column::new(name.clone(), values));
            continue;
        }
        let values = raw[j]
            .iter()
            .map(|tok| {
                if tok.is_empty() || cfg.is_sentinel(tok) {
                    return None;
                }
                tok.parse::<f64>().ok().filter(|v| v.is_finite())
            })
            .collect();
        columns.push(Column::new(name.clone(), values));
    }

    let target = target_idx.map(|_| cfg.target_name.clone());
    Ok(Loaded {
        frame: Frame::new(columns, target)?,
        ordinal_maps,
    })
}

fn map_target(raw: &[String], cfg: &IngestConfig) -> Result<Vec<u8>, IngestError> {
    let mut negative: Option<&str> = None;
    raw.iter()
        .enumerate()
        .map(|(row, tok)| {
            if tok.is_empty() || cfg.is_sentinel(tok) {
                return Err(IngestError::MissingTargetValue { row });
            }
            if same_token(tok, cfg.positive_label.trim()) {
                return Ok(1);
            }
            match negative {
                None => {
                    negative = Some(tok.as_str());
                    Ok(0)
                }
                Some(n) if same_token(n, tok) => Ok(0),
                Some(_) => Err(IngestError::NonBinaryTarget {
                    row,
                    value: tok.clone(),
                }),
            }
        })
        .collect()
}

/// Categories sorted by ascending event rate (ties and unlabeled input: by name).
fn event_rate_order(raw: &[String], labels: Option<&[u8]>, cfg: &IngestConfig) -> Vec<String> {
    let mut stats: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (r, tok) in raw.iter().enumerate() {
        if tok.is_empty() || cfg.is_sentinel(tok) {
            continue;
        }
        let e = stats.entry(tok.as_str()).or_default();
        e.1 += 1;
        if labels.is_some_and(|l| l[r] == 1) {
            e.0 += 1;
        }
    }
    let mut cats: Vec<(&str, f64)> = stats
        .into_iter()
        .map(|(k, (ev, n))| (k, ev as f64 / n as f64))
        .collect();
    cats.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    cats.into_iter().map(|(k, _)| k.to_string()).collect()
}
