//! Two-input sigmoid network with a single hidden layer, used to turn a
//! variable pair into one supervised feature.
//!
//! With the default single hidden node the network is
//!
//! ```text
//! z1 = b1 + w1·x1 + w2·x2      a1 = sigmoid(z1)
//! z2 = v·a1 + b2               ŷ  = sigmoid(z2)
//! ```
//!
//! and it is trained by full-batch gradient descent on mean binary
//! cross-entropy, once per learning rate in a grid, keeping the run with
//! the lowest final training loss.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{Column, Frame, FrameError};
use crate::scalar::{sigmoid, softplus, Scalar};

pub const MIN_LEARNING_RATE: f64 = 1e-5;
pub const MAX_LEARNING_RATE: f64 = 1e-1;
pub const MAX_ITERS: usize = 10_000;
pub const DEFAULT_LEARNING_RATES: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TinyNetError {
    #[error("learning rate {0} outside [1e-5, 1e-1]")]
    InvalidLearningRate(f64),
    #[error("learning-rate grid is empty")]
    EmptyGrid,
    #[error("max_iters {0} exceeds 10000")]
    TooManyIterations(usize),
    #[error("hidden layer needs at least one node")]
    NoHiddenNodes,
    #[error("inputs have mismatched lengths")]
    LengthMismatch,
    #[error("training data is empty")]
    EmptyData,
    #[error("target must be 0/1")]
    NonBinaryTarget,
    #[error("inputs contain non-finite values")]
    NonFiniteInput,
    #[error("training diverged at every learning rate")]
    NonFiniteLoss,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HiddenUnit<T> {
    pub w1: T,
    pub w2: T,
    pub b1: T,
    /// Weight from this unit to the output node.
    pub v: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyNet<T> {
    pub input_names: (String, String),
    pub hidden: Vec<HiddenUnit<T>>,
    pub b2: T,
}

/// Intermediate values of a single-hidden-node forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardTrace<T> {
    pub z1: T,
    pub a1: T,
    pub z2: T,
    pub y_hat: T,
}

const PARAMS_PER_UNIT: usize = 4;

impl<T: Scalar> TinyNet<T> {
    /// Single hidden node network from its five parameters.
    pub fn new(w1: T, w2: T, b1: T, v: T, b2: T, input_names: (String, String)) -> Self {
        Self {
            input_names,
            hidden: vec![HiddenUnit { w1, w2, b1, v }],
            b2,
        }
    }

    /// Uniform(−0.5, 0.5) initialisation drawn in parameter order.
    pub fn random(hidden_nodes: usize, input_names: (String, String), seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || T::lit(rng.random_range(-0.5..0.5));
        let hidden = (0..hidden_nodes)
            .map(|_| HiddenUnit {
                w1: draw(),
                w2: draw(),
                b1: draw(),
                v: draw(),
            })
            .collect();
        Self {
            input_names,
            hidden,
            b2: draw(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.hidden.len() * PARAMS_PER_UNIT + 1
    }

    /// Flattened parameters: `[w1, w2, b1, v]` per hidden unit, then `b2`.
    pub fn params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.n_params());
        for h in &self.hidden {
            p.extend_from_slice(&[h.w1, h.w2, h.b1, h.v]);
        }
        p.push(self.b2);
        p
    }

    pub fn set_params(&mut self, p: &[T]) {
        assert_eq!(p.len(), self.n_params());
        for (h, c) in self.hidden.iter_mut().zip(p.chunks_exact(PARAMS_PER_UNIT)) {
            *h = HiddenUnit {
                w1: c[0],
                w2: c[1],
                b1: c[2],
                v: c[3],
            };
        }
        self.b2 = p[p.len() - 1];
    }

    #[inline]
    fn output_logit(&self, x1: T, x2: T) -> T {
        self.hidden.iter().fold(self.b2, |acc, h| {
            acc + h.v * sigmoid(h.b1 + h.w1 * x1 + h.w2 * x2)
        })
    }

    #[inline]
    pub fn forward(&self, x1: T, x2: T) -> T {
        sigmoid(self.output_logit(x1, x2))
    }

    /// Intermediate values through the first hidden unit.
    pub fn trace(&self, x1: T, x2: T) -> ForwardTrace<T> {
        let h = &self.hidden[0];
        let z1 = h.b1 + h.w1 * x1 + h.w2 * x2;
        let a1 = sigmoid(z1);
        let z2 = self.output_logit(x1, x2);
        ForwardTrace {
            z1,
            a1,
            z2,
            y_hat: sigmoid(z2),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.is_finite())
    }
}

/// `(sigmoid(z), softplus(z))` from a single exponential.
#[inline]
fn sigmoid_softplus<T: Scalar>(z: T) -> (T, T) {
    let e = (-z.abs()).exp();
    let inv = T::one() / (T::one() + e);
    let p = if z >= T::zero() { inv } else { e * inv };
    (p, z.max(T::zero()) + e.ln_1p())
}

/// Training rows with per-point event and non-event weights. Rows that
/// share both inputs can be merged into one point without changing the
/// loss or its gradient.
struct Batch<T> {
    x1: Vec<T>,
    x2: Vec<T>,
    events: Vec<T>,
    nonevents: Vec<T>,
    n: T,
}

impl<T: Scalar> Batch<T> {
    fn rows(x1: &[T], x2: &[T], y: &[u8]) -> Self {
        let (one, zero) = (T::one(), T::zero());
        Self {
            x1: x1.to_vec(),
            x2: x2.to_vec(),
            events: y.iter().map(|&v| if v == 1 { one } else { zero }).collect(),
            nonevents: y.iter().map(|&v| if v == 1 { zero } else { one }).collect(),
            n: T::count(y.len().max(1)),
        }
    }

    fn grouped(x1: &[T], x2: &[T], y: &[u8]) -> Self {
        let mut order: Vec<usize> = (0..y.len()).collect();
        order.sort_by(|&a, &b| {
            x1[a].as_f64()
                .total_cmp(&x1[b].as_f64())
                .then(x2[a].as_f64().total_cmp(&x2[b].as_f64()))
        });
        let mut out = Self {
            x1: Vec::new(),
            x2: Vec::new(),
            events: Vec::new(),
            nonevents: Vec::new(),
            n: T::count(y.len().max(1)),
        };
        for i in order {
            let same = out.x1.last() == Some(&x1[i]) && out.x2.last() == Some(&x2[i]);
            if !same {
                out.x1.push(x1[i]);
                out.x2.push(x2[i]);
                out.events.push(T::zero());
                out.nonevents.push(T::zero());
            }
            let k = out.x1.len() - 1;
            if y[i] == 1 {
                out.events[k] += T::one();
            } else {
                out.nonevents[k] += T::one();
            }
        }
        out
    }

    fn points(&self) -> impl Iterator<Item = (T, T, T, T)> + '_ {
        self.x1
            .iter()
            .zip(&self.x2)
            .zip(self.events.iter().zip(&self.nonevents))
            .map(|((&u1, &u2), (&e, &ne))| (u1, u2, e, ne))
    }
}

fn batch_gradient_single<T: Scalar>(net: &TinyNet<T>, batch: &Batch<T>) -> (T, Vec<T>) {
    let HiddenUnit { w1, w2, b1, v } = net.hidden[0];
    let b2 = net.b2;
    let one = T::one();
    let (mut loss, mut g_w1, mut g_w2, mut g_b1, mut g_v, mut g_b2) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for (u1, u2, e, ne) in batch.points() {
        let a = sigmoid(b1 + w1 * u1 + w2 * u2);
        let z2 = v * a + b2;
        let (p, sp) = sigmoid_softplus(z2);
        let total = e + ne;
        loss += total * sp - e * z2;
        let g = total * p - e;
        let dz1 = g * v * a * (one - a);
        g_w1 += dz1 * u1;
        g_w2 += dz1 * u2;
        g_b1 += dz1;
        g_v += g * a;
        g_b2 += g;
    }
    let n = batch.n;
    (loss / n, vec![g_w1 / n, g_w2 / n, g_b1 / n, g_v / n, g_b2 / n])
}

fn batch_gradient<T: Scalar>(net: &TinyNet<T>, batch: &Batch<T>) -> (T, Vec<T>) {
    if net.hidden.len() == 1 {
        return batch_gradient_single(net, batch);
    }
    let h = net.hidden.len();
    let mut grad = vec![T::zero(); net.n_params()];
    let mut loss = T::zero();
    let mut a = vec![T::zero(); h];
    for (u1, u2, e, ne) in batch.points() {
        let mut z2 = net.b2;
        for (k, unit) in net.hidden.iter().enumerate() {
            a[k] = sigmoid(unit.b1 + unit.w1 * u1 + unit.w2 * u2);
            z2 += unit.v * a[k];
        }
        let (p, sp) = sigmoid_softplus(z2);
        let total = e + ne;
        loss += total * sp - e * z2;
        let g = total * p - e;
        for (k, unit) in net.hidden.iter().enumerate() {
            let base = k * PARAMS_PER_UNIT;
            let dz1 = g * unit.v * a[k] * (T::one() - a[k]);
            grad[base] += dz1 * u1;
            grad[base + 1] += dz1 * u2;
            grad[base + 2] += dz1;
            grad[base + 3] += g * a[k];
        }
        grad[h * PARAMS_PER_UNIT] += g;
    }
    grad.iter_mut().for_each(|g| *g /= batch.n);
    (loss / batch.n, grad)
}

fn batch_loss<T: Scalar>(net: &TinyNet<T>, batch: &Batch<T>) -> T {
    let total: T = batch
        .points()
        .map(|(u1, u2, e, ne)| {
            let z2 = net.output_logit(u1, u2);
            (e + ne) * softplus(z2) - e * z2
        })
        .sum();
    total / batch.n
}

/// Mean binary cross-entropy and its gradient (in [`TinyNet::params`] order).
pub fn loss_and_gradient<T: Scalar>(net: &TinyNet<T>, x1: &[T], x2: &[T], y: &[u8]) -> (T, Vec<T>) {
    batch_gradient(net, &Batch::rows(x1, x2, y))
}

pub fn loss<T: Scalar>(net: &TinyNet<T>, x1: &[T], x2: &[T], y: &[u8]) -> T {
    batch_loss(net, &Batch::rows(x1, x2, y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub learning_rates: Vec<T>,
    pub max_iters: usize,
    pub hidden_nodes: usize,
    /// Relative loss change counted as a stall.
    pub rel_tol: T,
    /// Consecutive stalled iterations that end a run.
    pub patience: usize,
}

impl<T: Scalar> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            learning_rates: DEFAULT_LEARNING_RATES.iter().map(|&v| T::lit(v)).collect(),
            max_iters: MAX_ITERS,
            hidden_nodes: 1,
            rel_tol: T::lit(1e-7),
            patience: 10,
        }
    }
}

impl<T: Scalar> TrainConfig<T> {
    pub fn validate(&self) -> Result<(), TinyNetError> {
        if self.learning_rates.is_empty() {
            return Err(TinyNetError::EmptyGrid);
        }
        let (lo, hi) = (T::lit(MIN_LEARNING_RATE), T::lit(MAX_LEARNING_RATE));
        // tolerate representation error of the grid ends in f32
        let slack = T::one() + T::lit(1e-6);
        for &lr in &self.learning_rates {
            if !(lr * slack >= lo && lr <= hi * slack) {
                return Err(TinyNetError::InvalidLearningRate(lr.as_f64()));
            }
        }
        if self.max_iters > MAX_ITERS {
            return Err(TinyNetError::TooManyIterations(self.max_iters));
        }
        if self.hidden_nodes == 0 {
            return Err(TinyNetError::NoHiddenNodes);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport<T> {
    pub final_loss: T,
    pub iterations: usize,
    pub learning_rate: T,
    pub converged: bool,
    pub seed: u64,
}

struct Run<T> {
    net: TinyNet<T>,
    loss: T,
    iterations: usize,
    converged: bool,
}

fn descend<T: Scalar>(
    start: &TinyNet<T>,
    batch: &Batch<T>,
    lr: T,
    cfg: &TrainConfig<T>,
) -> Option<Run<T>> {
    let mut net = start.clone();
    let mut params = net.params();
    let mut prev: Option<T> = None;
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..cfg.max_iters {
        let (l, g) = batch_gradient(&net, batch);
        if !l.is_finite() {
            return None;
        }
        if let Some(p) = prev {
            if (p - l).abs() <= cfg.rel_tol * p.abs() {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        if stalled >= cfg.patience {
            converged = true;
            break;
        }
        prev = Some(l);
        for (p, gi) in params.iter_mut().zip(&g) {
            *p -= lr * *gi;
        }
        net.set_params(&params);
        iterations = it + 1;
    }
    let final_loss = batch_loss(&net, batch);
    if !final_loss.is_finite() || !net.all_finite() {
        return None;
    }
    Some(Run {
        net,
        loss: final_loss,
        iterations,
        converged,
    })
}

/// Trains one network on a variable pair. Every learning rate starts from
/// the same seeded initialisation; the lowest final loss wins, earlier grid
/// entries winning ties. Diverged runs are discarded.
pub fn train<T: Scalar>(
    x1: &[T],
    x2: &[T],
    y: &[u8],
    input_names: (String, String),
    seed: u64,
    cfg: &TrainConfig<T>,
) -> Result<(TinyNet<T>, TrainReport<T>), TinyNetError> {
    cfg.validate()?;
    if x1.len() != x2.len() || x1.len() != y.len() {
        return Err(TinyNetError::LengthMismatch);
    }
    if y.is_empty() {
        return Err(TinyNetError::EmptyData);
    }
    if y.iter().any(|&v| v > 1) {
        return Err(TinyNetError::NonBinaryTarget);
    }
    if x1.iter().chain(x2).any(|v| !v.is_finite()) {
        return Err(TinyNetError::NonFiniteInput);
    }
    let start = TinyNet::random(cfg.hidden_nodes, input_names, seed);
    let batch = Batch::grouped(x1, x2, y);
    let mut best: Option<(Run<T>, T)> = None;
    for &lr in &cfg.learning_rates {
        let Some(run) = descend(&start, &batch, lr, cfg) else {
            log::debug!("tiny net diverged at learning rate {lr}");
            continue;
        };
        if best.as_ref().is_none_or(|(b, _)| run.loss < b.loss) {
            best = Some((run, lr));
        }
    }
    let (run, lr) = best.ok_or(TinyNetError::NonFiniteLoss)?;
    let report = TrainReport {
        final_loss: run.loss,
        iterations: run.iterations,
        learning_rate: lr,
        converged: run.converged,
        seed,
    };
    Ok((run.net, report))
}

/// Column name of the `index`-th constructed feature.
pub fn feature_name(index: usize) -> String {
    format!("yhat_{index}")
}

/// Row-wise network output over the frame's two input columns.
pub fn predict_column(net: &TinyNet<f64>, frame: &Frame, index: usize) -> Result<Column, TinyNetError> {
    let a = frame.values(&net.input_names.0)?;
    let b = frame.values(&net.input_names.1)?;
    let values = a
        .iter()
        .zip(b)
        .map(|(u, v)| match (u, v) {
            (Some(u), Some(v)) => Some(net.forward(*u, *v)),
            _ => None,
        })
        .collect();
    Ok(Column::new(feature_name(index), values))
}
