use std::collections::HashSet;

use super::{fit_logistic, Design, FitOptions, GlmError, LogisticModel};
use crate::scalar::Scalar;

/// Default entry and stay significance level.
pub const DEFAULT_ALPHA: f64 = 0.15;

fn key(included: &[usize]) -> Vec<usize> {
    let mut k = included.to_vec();
    k.sort_unstable();
    k
}

/// Stepwise selection with Wald p-values for both entry and removal.
///
/// Each round enters the excluded variable with the smallest p-value in its
/// augmented fit (if below `alpha_enter`), then removes the worst included
/// variable while any p-value exceeds `alpha_stay`. Stops when nothing
/// changes or a variable set repeats. Ties go to the earlier name.
pub fn stepwise_select<T: Scalar>(
    design: &Design<'_, T>,
    y: &[u8],
    alpha_enter: T,
    alpha_stay: T,
    opts: &FitOptions<T>,
) -> Result<LogisticModel<T>, GlmError> {
    let (zero, one) = (T::zero(), T::one());
    if !(alpha_enter > zero && alpha_enter < one && alpha_stay > zero && alpha_stay < one) {
        return Err(GlmError::InvalidAlpha);
    }
    if design.n_cols() == 0 {
        return Err(GlmError::NoCandidates);
    }
    let mut by_name: Vec<usize> = (0..design.n_cols()).collect();
    by_name.sort_by(|&a, &b| design.names()[a].cmp(&design.names()[b]));

    let mut included: Vec<usize> = Vec::new();
    let mut visited: HashSet<Vec<usize>> = HashSet::new();
    visited.insert(Vec::new());

    loop {
        let mut changed = false;

        let mut best: Option<(usize, T)> = None;
        for &j in by_name.iter().filter(|j| !included.contains(j)) {
            let mut trial = included.clone();
            trial.push(j);
            let Ok(m) = fit_logistic(&design.subset(&trial), y, opts) else {
                continue;
            };
            if !m.is_reliable() {
                continue;
            }
            let p = *m.p_values.last().expect("entered term");
            if best.is_none_or(|(_, bp)| p < bp) {
                best = Some((j, p));
            }
        }
        if let Some((j, p)) = best {
            if p < alpha_enter {
                included.push(j);
                changed = true;
            }
        }

        while !included.is_empty() {
            let m = fit_logistic(&design.subset(&included), y, opts)?;
            let worst = included
                .iter()
                .enumerate()
                .map(|(pos, &j)| (pos, j, m.p_values[pos + 1]))
                .filter(|&(_, _, p)| p > alpha_stay || p.is_nan())
                .max_by(|a, b| {
                    a.2.partial_cmp(&b.2)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then_with(|| design.names()[b.1].cmp(&design.names()[a.1]))
                });
            match worst {
                Some((pos, _, _)) => {
                    included.remove(pos);
                    changed = true;
                }
                None => break,
            }
        }

        if !changed || !visited.insert(key(&included)) {
            break;
        }
    }

    fit_logistic(&design.subset(&included), y, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::sigmoid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normal_cols(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Vec<Vec<f64>> {
        (0..k)
            .map(|_| (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect()
    }

    #[test]
    fn dominant_signal_enters_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 500;
        let mut cols = normal_cols(&mut rng, 4, n);
        let score: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0).collect();
        let y: Vec<u8> = score.iter().map(|&s| u8::from(rng.random::<f64>() < sigmoid(s))).collect();
        cols.push(score);
        let names: Vec<String> = ["a", "b", "c", "d", "signal"].iter().map(|s| s.to_string()).collect();
        let d = Design::from_columns(&names, &cols).unwrap();
        let opts = FitOptions::default();
        let strict = stepwise_select(&d, &y, 1e-6, 1e-6, &opts).unwrap();
        assert_eq!(strict.terms, vec!["signal".to_string()]);
        let m = stepwise_select(&d, &y, 0.15, 0.15, &opts).unwrap();
        assert_eq!(m.terms[0], "signal");
    }

    #[test]
    fn rejects_bad_alpha_and_empty() {
        let cols = vec![vec![0.0, 1.0, 2.0]];
        let d = Design::from_columns(&["x".to_string()], &cols).unwrap();
        let y = [0, 1, 1];
        assert_eq!(
            stepwise_select(&d, &y, 0.0, 0.15, &FitOptions::default()).unwrap_err(),
            GlmError::InvalidAlpha
        );
        let empty = Design::<f64>::new(vec![], vec![], 3).unwrap();
        assert_eq!(
            stepwise_select(&empty, &y, 0.15, 0.15, &FitOptions::default()).unwrap_err(),
            GlmError::NoCandidates
        );
    }
}
