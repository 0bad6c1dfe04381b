use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::PrepError;
use crate::ingest::Frame;

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Frame,
    pub valid: Frame,
    pub seed: u64,
    pub fraction: f64,
    /// Source row indices (ascending) that went to each side.
    pub train_rows: Vec<usize>,
    pub valid_rows: Vec<usize>,
}

/// Training rows drawn from a stratum: the fractional part is rounded up,
/// so 1,189 × 0.6 gives 714.
pub(crate) fn stratum_take(size: usize, fraction: f64) -> usize {
    ((fraction * size as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Stratified random split on the target. Each class is shuffled with one
/// seeded ChaCha stream (class 0 first) and its leading share goes to train.
pub fn stratified_split(frame: &Frame, fraction: f64, seed: u64) -> Result<SplitResult, PrepError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(PrepError::InvalidFraction(fraction));
    }
    let labels = frame.labels().ok_or(PrepError::NoTarget)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut valid_rows = Vec::new();
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        if rows.is_empty() {
            return Err(PrepError::DegenerateStratum(class));
        }
        rows.shuffle(&mut rng);
        let k = stratum_take(rows.len(), fraction).min(rows.len());
        train_rows.extend_from_slice(&rows[..k]);
        valid_rows.extend_from_slice(&rows[k..]);
    }
    train_rows.sort_unstable();
    valid_rows.sort_unstable();
    Ok(SplitResult {
        train: frame.select_rows(&train_rows),
        valid: frame.select_rows(&valid_rows),
        seed,
        fraction,
        train_rows,
        valid_rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Column;

    fn frame_with(pos: usize, neg: usize) -> Frame {
        let n = pos + neg;
        let y: Vec<f64> = (0..n).map(|i| if i < pos { 1.0 } else { 0.0 }).collect();
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        Frame::new(vec![Column::dense("x", &x), Column::dense("y", &y)], Some("y".into())).unwrap()
    }

    #[test]
    fn published_partition_sizes() {
        // 80.01% of 12,498 responders; HMEQ has 1,189 defaults of 5,960
        let s = stratified_split(&frame_with(10_000, 2_498), 0.6, 1).unwrap();
        assert_eq!((s.train.n_rows(), s.valid.n_rows()), (7_499, 4_999));
        let s = stratified_split(&frame_with(4_771, 1_189), 0.6, 1).unwrap();
        assert_eq!((s.train.n_rows(), s.valid.n_rows()), (3_577, 2_383));
    }

    #[test]
    fn exact_stratum_arithmetic() {
        let s = stratified_split(&frame_with(8, 2), 0.5, 3).unwrap();
        let l = s.train.labels().unwrap();
        assert_eq!(l.iter().filter(|&&v| v == 1).count(), 4);
        assert_eq!(l.iter().filter(|&&v| v == 0).count(), 1);
    }

    #[test]
    fn partition_and_determinism() {
        let f = frame_with(37, 63);
        let a = stratified_split(&f, 0.6, 42).unwrap();
        let b = stratified_split(&f, 0.6, 42).unwrap();
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train_rows.iter().chain(&a.valid_rows).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        let c = stratified_split(&f, 0.6, 43).unwrap();
        assert_ne!(a.train_rows, c.train_rows);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            stratified_split(&frame_with(3, 3), 1.0, 0),
            Err(PrepError::InvalidFraction(_))
        ));
        assert!(matches!(
            stratified_split(&frame_with(3, 0), 0.5, 0),
            Err(PrepError::DegenerateStratum(0))
        ));
    }
}
