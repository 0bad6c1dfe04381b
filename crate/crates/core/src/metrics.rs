//! Classification accuracy, ROC/AUC and the KS statistic.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Default probability cut for accuracy.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("scores ({scores}) and labels ({labels}) differ in length")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("both classes must be present")]
    SingleClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    pub fn tpr(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_).max(1) as f64
    }

    pub fn fpr(&self) -> f64 {
        self.fp as f64 / (self.tn + self.fp).max(1) as f64
    }
}

fn check_len<T>(scores: &[T], labels: &[u8]) -> Result<(), MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    Ok(())
}

/// Predicts 1 when `score >= threshold`.
pub fn confusion<T: Scalar>(scores: &[T], labels: &[u8], threshold: T) -> Result<ConfusionCounts, MetricsError> {
    check_len(scores, labels)?;
    let mut c = ConfusionCounts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn accuracy<T: Scalar>(scores: &[T], labels: &[u8], threshold: T) -> Result<f64, MetricsError> {
    Ok(confusion(scores, labels, threshold)?.accuracy())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Rows with score >= threshold are predicted positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Points by ascending threshold, from (1, 1) down to (0, 0).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "threshold,fpr,tpr")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", p.threshold, p.fpr, p.tpr)?;
        }
        Ok(())
    }
}

/// Tie blocks of scores in descending order: (score, positives, negatives).
fn tie_blocks<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<(Vec<(f64, usize, usize)>, usize, usize), MetricsError> {
    check_len(scores, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].as_f64().total_cmp(&scores[a].as_f64()));
    let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
    for i in idx {
        let s = scores[i].as_f64();
        let is_pos = labels[i] == 1;
        match blocks.last_mut() {
            Some(b) if b.0 == s => {
                if is_pos { b.1 += 1 } else { b.2 += 1 }
            }
            _ => blocks.push((s, usize::from(is_pos), usize::from(!is_pos))),
        }
    }
    Ok((blocks, pos, neg))
}

/// ROC with one point per distinct score and trapezoidal area.
pub fn roc_curve<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<RocCurve, MetricsError> {
    let (blocks, pos, neg) = tie_blocks(scores, labels)?;
    let (pf, nf) = (pos as f64, neg as f64);
    let mut points = Vec::with_capacity(blocks.len() + 1);
    points.push(RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    });
    let (mut tp, mut fp) = (0usize, 0usize);
    // twice the area in units of (pos * neg), exact in integers
    let mut area2: u128 = 0;
    for &(s, bp, bn) in &blocks {
        area2 += (bn as u128) * (2 * tp as u128 + bp as u128);
        tp += bp;
        fp += bn;
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / nf,
            tpr: tp as f64 / pf,
        });
    }
    points.reverse();
    let auc = area2 as f64 / (2.0 * pf * nf);
    Ok(RocCurve { points, auc })
}

/// Area under the ROC curve; equals P(s⁺ > s⁻) + ½ P(s⁺ = s⁻).
pub fn auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, MetricsError> {
    Ok(roc_curve(scores, labels)?.auc)
}

/// Two-sample KS distance between the score distributions of negatives
/// and positives, taken over every distinct score.
pub fn ks<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, MetricsError> {
    let (blocks, pos, neg) = tie_blocks(scores, labels)?;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut d = 0.0_f64;
    for &(_, bp, bn) in &blocks {
        tp += bp;
        fp += bn;
        // cdf gap at this score equals the tpr − fpr gap one block lower
        d = d.max((tp as f64 / pos as f64 - fp as f64 / neg as f64).abs());
    }
    Ok(d)
}

/// Accuracy, AUC and KS of one score vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub auc: f64,
    pub ks: f64,
}

pub fn evaluate<T: Scalar>(scores: &[T], labels: &[u8], threshold: T) -> Result<Evaluation, MetricsError> {
    Ok(Evaluation {
        accuracy: accuracy(scores, labels, threshold)?,
        auc: auc(scores, labels)?,
        ks: ks(scores, labels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_cases() {
        let c = confusion(&[0.9_f64, 0.1], &[1, 0], 0.5).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 1, fp: 0, tn: 1, fn_: 0 });
        assert_eq!(c.accuracy(), 1.0);
        let c = confusion(&[0.5_f64; 5], &[1, 1, 0, 1, 0], 0.5).unwrap();
        assert_eq!(c.tp + c.fp, 5);
        assert_eq!(c.accuracy(), 0.6);
        assert!(confusion(&[0.1_f64], &[1, 0], 0.5).is_err());
    }

    #[test]
    fn separating_and_identical_scores() {
        let s = [0.1_f64, 0.2, 0.8, 0.9];
        let y = [0, 0, 1, 1];
        assert_eq!(auc(&s, &y).unwrap(), 1.0);
        assert_eq!(ks(&s, &y).unwrap(), 1.0);
        let s = [0.3_f64, 0.7, 0.3, 0.7];
        let y = [0, 0, 1, 1];
        assert_eq!(ks(&s, &y).unwrap(), 0.0);
        assert_eq!(auc(&s, &y).unwrap(), 0.5);
        assert_eq!(auc(&[0.1_f64, 0.2], &[1, 1]), Err(MetricsError::SingleClass));
        assert_eq!(ks(&[0.1_f64, 0.2], &[0, 0]), Err(MetricsError::SingleClass));
    }

    #[test]
    fn roc_endpoints_and_monotone() {
        let s = [0.2_f64, 0.4, 0.4, 0.6, 0.9, 0.1];
        let y = [0, 1, 0, 1, 1, 0];
        let roc = roc_curve(&s, &y).unwrap();
        let first = roc.points.first().unwrap();
        let last = roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (1.0, 1.0));
        assert_eq!((last.fpr, last.tpr), (0.0, 0.0));
        assert!(roc.points.windows(2).all(|w| w[0].tpr >= w[1].tpr && w[0].fpr >= w[1].fpr));
        let mut buf = Vec::new();
        roc.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("threshold,fpr,tpr\n"));
    }
}
