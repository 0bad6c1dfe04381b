//! Reference implementations shared by the integration suites. They are
//! written independently of the library code paths they check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Logistic MLE by cyclic coordinate ascent with one-dimensional Newton
/// steps; `x[j]` is a column, the intercept is implicit.
pub fn coordinate_ascent_mle(x: &[Vec<f64>], y: &[u8]) -> Vec<f64> {
    let n = y.len();
    let p = x.len();
    let mut beta = vec![0.0; p + 1];
    let feature = |j: usize, i: usize| if j == 0 { 1.0 } else { x[j - 1][i] };
    for _sweep in 0..100_000 {
        let mut largest = 0.0_f64;
        for j in 0..=p {
            let mut g = 0.0;
            let mut h = 0.0;
            for i in 0..n {
                let eta: f64 = (0..=p).map(|k| beta[k] * feature(k, i)).sum();
                let mu = logistic(eta);
                let xj = feature(j, i);
                g += (f64::from(y[i]) - mu) * xj;
                h += mu * (1.0 - mu) * xj * xj;
            }
            let step = g / h;
            beta[j] += step;
            largest = largest.max(step.abs());
        }
        if largest < 1e-13 {
            break;
        }
    }
    beta
}

/// Probability that a random positive outscores a random negative, ties
/// counting half, by enumerating all pairs.
pub fn concordance_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut twice: u128 = 0;
    let (mut pos, mut neg) = (0u128, 0u128);
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            neg += 1;
            continue;
        }
        pos += 1;
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] == 1 {
                continue;
            }
            if si > sj {
                twice += 2;
            } else if si == sj {
                twice += 1;
            }
        }
    }
    twice as f64 / (2.0 * pos as f64 * neg as f64)
}

/// Largest |TPR − FPR| over the rule "score ≥ t", t ranging over every
/// observed score.
pub fn sweep_ks(scores: &[f64], labels: &[u8]) -> f64 {
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    let mut best = 0.0_f64;
    for &t in scores {
        let tp = scores.iter().zip(labels).filter(|(&s, &y)| s >= t && y == 1).count();
        let fp = scores.iter().zip(labels).filter(|(&s, &y)| s >= t && y != 1).count();
        best = best.max((tp as f64 / pos as f64 - fp as f64 / neg as f64).abs());
    }
    best
}

/// Ordinary least squares R² of `y` on `xs` plus an intercept, through the
/// normal equations solved by Gaussian elimination with partial pivoting.
pub fn ols_r2(y: &[f64], xs: &[&[f64]]) -> f64 {
    let n = y.len();
    let k = xs.len() + 1;
    let col = |j: usize, i: usize| if j == 0 { 1.0 } else { xs[j - 1][i] };
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = (0..n).map(|i| col(r, i) * col(c, i)).sum();
        }
        a[r][k] = (0..n).map(|i| col(r, i) * y[i]).sum();
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&p, &q| a[p][c].abs().total_cmp(&a[q][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for cc in c..=k {
                    a[r][cc] -= f * a[c][cc];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..k).map(|r| a[r][k] / a[r][r]).collect();
    let mean = y.iter().sum::<f64>() / n as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let fit: f64 = (0..k).map(|j| beta[j] * col(j, i)).sum();
        ss_res += (y[i] - fit).powi(2);
        ss_tot += (y[i] - mean).powi(2);
    }
    1.0 - ss_res / ss_tot
}

/// Mean cross-entropy of a one-hidden-layer net with parameters laid out
/// as `[w1, w2, b1, v]` per hidden unit followed by `b2`.
pub fn net_loss(params: &[f64], x1: &[f64], x2: &[f64], y: &[u8]) -> f64 {
    let units = (params.len() - 1) / 4;
    let b2 = params[params.len() - 1];
    let mut total = 0.0;
    for i in 0..y.len() {
        let mut z = b2;
        for u in 0..units {
            let w = &params[4 * u..4 * u + 4];
            z += w[3] * logistic(w[2] + w[0] * x1[i] + w[1] * x2[i]);
        }
        let p = logistic(z);
        total -= if y[i] == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    total / y.len() as f64
}

/// Binary labels drawn from `P(y = 1) = logistic(eta)`.
pub fn draw_labels(eta: &[f64], rng: &mut impl Rng) -> Vec<u8> {
    eta.iter().map(|&e| u8::from(rng.random::<f64>() < logistic(e))).collect()
}

pub fn normals(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(rand_distr::StandardNormal)).collect()
}
