//! The shift classifier: `[A(w) ‖ B(w)]` → ReLU hidden layer → sigmoid.
//!
//! Loss is mean binary cross-entropy with the probability clamped to
//! `[1e-7, 1 - 1e-7]`; gradients are the exact derivatives of that clamped
//! loss, so a saturated sample contributes nothing.

use std::path::Path;

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::sampling::PerturbationBatch;

pub const DEFAULT_HIDDEN: usize = 100;
pub const PROB_CLAMP: f64 = 1e-7;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Parameters of the 2d → H → 1 network. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    /// `2d × H`
    pub w1: DMatrix<f64>,
    pub b1: RowDVector<f64>,
    /// `H × 1`
    pub w2: DVector<f64>,
    pub b2: f64,
}

impl MlpWeights {
    pub fn zeros(d: usize, hidden: usize) -> Self {
        MlpWeights {
            w1: DMatrix::zeros(2 * d, hidden),
            b1: RowDVector::zeros(hidden),
            w2: DVector::zeros(hidden),
            b2: 0.0,
        }
    }

    /// Embedding dimension `d` (the input has `2d` entries).
    pub fn dim(&self) -> usize {
        self.w1.nrows() / 2
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter()).all(|x| x.is_finite())
            && self.b2.is_finite()
    }

    /// Euclidean norm over all parameters.
    pub fn norm(&self) -> f64 {
        (self.w1.norm_squared() + self.b1.norm_squared() + self.w2.norm_squared() + self.b2 * self.b2).sqrt()
    }

    fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flat view of every parameter: w1 (column-major), b1, w2, b2.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend(self.w1.iter());
        v.extend(self.b1.iter());
        v.extend(self.w2.iter());
        v.push(self.b2);
        v
    }

    /// Inverse of [`flatten`](Self::flatten) for weights shaped like `self`.
    pub fn unflatten_like(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.param_count());
        let (n1, h) = self.w1.shape();
        let mut it = flat.iter().copied();
        let w1 = DMatrix::from_iterator(n1, h, it.by_ref().take(n1 * h));
        let b1 = RowDVector::from_iterator(h, it.by_ref().take(h));
        let w2 = DVector::from_iterator(h, it.by_ref().take(h));
        let b2 = it.next().unwrap();
        MlpWeights { w1, b1, w2, b2 }
    }

    pub fn to_json(&self) -> Result<String> {
        let (n1, h) = self.w1.shape();
        let doc = WeightsJson {
            d: n1 / 2,
            h,
            w1: (0..n1).flat_map(|i| self.w1.row(i).iter().copied().collect::<Vec<_>>()).collect(),
            b1: self.b1.iter().copied().collect(),
            w2: self.w2.iter().copied().collect(),
            b2: self.b2,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: WeightsJson = serde_json::from_str(s)?;
        let (n1, h) = (2 * doc.d, doc.h);
        if doc.d == 0 || h == 0 || doc.w1.len() != n1 * h || doc.b1.len() != h || doc.w2.len() != h {
            return Err(Error::InvalidArgument("weight arrays do not match d and H".into()));
        }
        let w = MlpWeights {
            w1: DMatrix::from_row_slice(n1, h, &doc.w1),
            b1: RowDVector::from_row_slice(&doc.b1),
            w2: DVector::from_column_slice(&doc.w2),
            b2: doc.b2,
        };
        if !w.is_finite() {
            return Err(Error::NonFinite("classifier weights".into()));
        }
        Ok(w)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsJson {
    d: usize,
    #[serde(rename = "H")]
    h: usize,
    #[serde(rename = "W1")]
    w1: Vec<f64>,
    b1: Vec<f64>,
    #[serde(rename = "W2")]
    w2: Vec<f64>,
    b2: f64,
}

/// Glorot-uniform weights, zero biases.
pub fn init_weights<R: Rng + ?Sized>(d: usize, hidden: usize, rng: &mut R) -> Result<MlpWeights> {
    if d == 0 || hidden == 0 {
        return Err(Error::InvalidArgument("d and H must be at least 1".into()));
    }
    let bound1 = (6.0 / (2 * d + hidden) as f64).sqrt();
    let bound2 = (6.0 / (hidden + 1) as f64).sqrt();
    let mut w = MlpWeights::zeros(d, hidden);
    // row-major fill so the draw order does not depend on the storage layout
    for i in 0..2 * d {
        for j in 0..hidden {
            w.w1[(i, j)] = rng.random_range(-bound1..=bound1);
        }
    }
    for j in 0..hidden {
        w.w2[j] = rng.random_range(-bound2..=bound2);
    }
    Ok(w)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Activations {
    pre_hidden: DMatrix<f64>,
    hidden: DMatrix<f64>,
    prob: DVector<f64>,
}

fn check_input(w: &MlpWeights, x: &DMatrix<f64>) -> Result<()> {
    if x.ncols() != w.w1.nrows() {
        return Err(Error::DimensionMismatch {
            expected: w.w1.nrows(),
            found: x.ncols(),
        });
    }
    Ok(())
}

fn activations(w: &MlpWeights, x: &DMatrix<f64>) -> Activations {
    let mut pre_hidden = x * &w.w1;
    for mut row in pre_hidden.row_iter_mut() {
        row += &w.b1;
    }
    let hidden = pre_hidden.map(|z| z.max(0.0));
    let prob = (&hidden * &w.w2).map(|z| sigmoid(z + w.b2));
    Activations {
        pre_hidden,
        hidden,
        prob,
    }
}

/// Probabilities for every row of `x` (`n × 2d`).
pub fn forward_batch(w: &MlpWeights, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_input(w, x)?;
    Ok(activations(w, x).prob)
}

/// `σ(ReLU(x·W1 + b1)·W2 + b2)` for a single `2d` input.
pub fn forward(w: &MlpWeights, x: &[f64]) -> Result<f64> {
    let m = DMatrix::from_row_slice(1, x.len(), x);
    Ok(forward_batch(w, &m)?[0])
}

/// Mean clamped binary cross-entropy.
pub fn bce_loss(prob: &DVector<f64>, labels: &[f64]) -> f64 {
    let n = labels.len() as f64;
    prob.iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// Mean loss over a feature matrix and its gradient with respect to every parameter.
pub fn loss_and_gradient(w: &MlpWeights, x: &DMatrix<f64>, labels: &[f64]) -> Result<(f64, MlpWeights)> {
    check_input(w, x)?;
    if x.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::InvalidArgument("feature rows and labels must match and be nonempty".into()));
    }
    let act = activations(w, x);
    let loss = bce_loss(&act.prob, labels);
    let n = labels.len() as f64;
    // dL/dz for the output logit; zero where the clamp is active
    let d_logit = DVector::from_iterator(
        labels.len(),
        act.prob.iter().zip(labels).map(|(&p, &y)| {
            if p < PROB_CLAMP || p > 1.0 - PROB_CLAMP {
                0.0
            } else {
                (p - y) / n
            }
        }),
    );
    let grad_w2 = act.hidden.tr_mul(&d_logit);
    let grad_b2 = d_logit.sum();
    let mut d_hidden = &d_logit * w.w2.transpose();
    d_hidden.zip_apply(&act.pre_hidden, |g, z| {
        if z <= 0.0 {
            *g = 0.0
        }
    });
    let grad_w1 = x.tr_mul(&d_hidden);
    let grad_b1 = d_hidden.row_sum();
    let grad = MlpWeights {
        w1: grad_w1,
        b1: grad_b1,
        w2: grad_w2,
        b2: grad_b2,
    };
    if !loss.is_finite() || !grad.is_finite() {
        return Err(Error::Divergence("non-finite loss or gradient".into()));
    }
    Ok((loss, grad))
}

/// One full-batch gradient-descent step. Returns the updated weights and the
/// loss before the step.
pub fn train_step(w: &MlpWeights, batch: &PerturbationBatch, lr: f64) -> Result<(MlpWeights, f64)> {
    if !(lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be positive, got {lr}")));
    }
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let (loss, g) = loss_and_gradient(w, &batch.features, &batch.labels)?;
    let next = MlpWeights {
        w1: &w.w1 - &g.w1 * lr,
        b1: &w.b1 - &g.b1 * lr,
        w2: &w.w2 - &g.w2 * lr,
        b2: w.b2 - g.b2 * lr,
    };
    if !next.is_finite() {
        return Err(Error::Divergence("weights became non-finite".into()));
    }
    Ok((next, loss))
}

/// Label 1 iff the probability for `[a_row ‖ b_row]` is strictly above `threshold`.
pub fn predict(w: &MlpWeights, a_row: &[f64], b_row: &[f64], threshold: f64) -> Result<(u8, f64)> {
    if a_row.len() != w.dim() || b_row.len() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: a_row.len().max(b_row.len()),
        });
    }
    let x: Vec<f64> = a_row.iter().chain(b_row).copied().collect();
    let p = forward(w, &x)?;
    Ok((u8::from(p > threshold), p))
}

/// Optimiser used by [`Trainer`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Plain gradient descent.
    Sgd,
    /// Adam with β1 = 0.9, β2 = 0.999, ε = 1e-7.
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" | "gd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(Error::InvalidArgument(format!("unknown optimizer `{s}` (expected sgd or adam)"))),
        }
    }
}

/// How a batch is consumed in one training update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Passes over each batch.
    pub epochs: usize,
    /// Mini-batch size; 0 means the whole batch in one step.
    pub batch_size: usize,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            epochs: 3,
            batch_size: 32,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.epochs == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument("epochs and hidden width must be at least 1".into()));
        }
        Ok(())
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-7;

/// Holds the weights and optimiser state across training updates.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub config: TrainConfig,
    pub weights: MlpWeights,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
}

impl Trainer {
    pub fn new(config: TrainConfig, weights: MlpWeights) -> Result<Self> {
        config.validate()?;
        let n = weights.param_count();
        Ok(Trainer {
            config,
            weights,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            steps: 0,
        })
    }

    /// Number of optimiser steps taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Trains on `batch` for the configured epochs, in row order. Returns the
    /// mean loss over the first pass, measured before each step.
    pub fn update(&mut self, batch: &PerturbationBatch) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let n = batch.len();
        let size = if self.config.batch_size == 0 { n } else { self.config.batch_size.min(n) };
        let mut first_pass_loss = 0.0;
        for epoch in 0..self.config.epochs {
            for start in (0..n).step_by(size) {
                let len = size.min(n - start);
                let x = batch.features.rows(start, len).into_owned();
                let y = &batch.labels[start..start + len];
                let (loss, grad) = loss_and_gradient(&self.weights, &x, y)?;
                if epoch == 0 {
                    first_pass_loss += loss * len as f64;
                }
                self.apply(&grad)?;
            }
        }
        Ok(first_pass_loss / n as f64)
    }

    fn apply(&mut self, grad: &MlpWeights) -> Result<()> {
        self.steps += 1;
        let lr = self.config.lr;
        match self.config.optimizer {
            OptimizerKind::Sgd => {
                self.weights.w1 -= &grad.w1 * lr;
                self.weights.b1 -= &grad.b1 * lr;
                self.weights.w2 -= &grad.w2 * lr;
                self.weights.b2 -= grad.b2 * lr;
            }
            OptimizerKind::Adam => {
                let g = grad.flatten();
                let mut p = self.weights.flatten();
                let t = self.steps as i32;
                let c1 = 1.0 - ADAM_BETA1.powi(t);
                let c2 = 1.0 - ADAM_BETA2.powi(t);
                for i in 0..p.len() {
                    let m = &mut self.first_moment[i];
                    let v = &mut self.second_moment[i];
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g[i];
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    p[i] -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
                }
                self.weights = self.weights.unflatten_like(&p);
            }
        }
        if !self.weights.is_finite() {
            return Err(Error::Divergence("weights became non-finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn batch_from(features: DMatrix<f64>, labels: Vec<f64>) -> PerturbationBatch {
        let n = labels.len();
        PerturbationBatch {
            features,
            labels,
            positive_words: vec![],
            targets: vec![],
            negative_words: vec![],
            row_words: vec![0; n],
            row_targets: vec![None; n],
        }
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let w = init_weights(2, 100, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let again = init_weights(2, 100, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(w, again);
        assert_eq!(w.w1.shape(), (4, 100));
        let bound = (6.0f64 / 104.0).sqrt();
        assert!(w.w1.iter().all(|x| x.abs() <= bound));
        assert!(w.b1.iter().all(|&x| x == 0.0) && w.b2 == 0.0);
        assert!(init_weights(0, 3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn forward_edge_cases() {
        let w = MlpWeights::zeros(3, 5);
        assert_eq!(forward(&w, &[1.0, -2.0, 3.0, 0.5, 0.0, 9.0]).unwrap(), 0.5);
        let mut sat = MlpWeights::zeros(3, 5);
        sat.b2 = 10.0;
        let p = forward(&sat, &[4.0, -2.0, 1.0, 0.0, 7.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p, 0.9999546021312976, epsilon = 1e-15);
        assert!(forward(&sat, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn forward_by_hand() {
        // d = 1, H = 2, x = (0.5, -1.0)
        let w = MlpWeights {
            w1: DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 0.5, 0.25]),
            b1: RowDVector::from_row_slice(&[0.1, 0.2]),
            w2: DVector::from_column_slice(&[1.5, -0.7]),
            b2: -0.3,
        };
        // hidden pre-activations: 0.5 - 0.5 + 0.1 = 0.1 ; -1.0 - 0.25 + 0.2 = -1.05
        // ReLU -> (0.1, 0); logit = 0.15 - 0.3 = -0.15
        let expected = 1.0 / (1.0 + 0.15f64.exp());
        let p = forward(&w, &[0.5, -1.0]).unwrap();
        assert!((p - expected).abs() < 1e-12);
    }

    fn numeric_gradient(w: &MlpWeights, x: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
        let eps = 1e-5;
        let base = w.flatten();
        (0..base.len())
            .map(|i| {
                let mut plus = base.clone();
                plus[i] += eps;
                let mut minus = base.clone();
                minus[i] -= eps;
                let lp = bce_loss(&forward_batch(&w.unflatten_like(&plus), x).unwrap(), y);
                let lm = bce_loss(&forward_batch(&w.unflatten_like(&minus), x).unwrap(), y);
                (lp - lm) / (2.0 * eps)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let d = rng.random_range(1..=3);
            let h = rng.random_range(1..=6);
            let n = rng.random_range(2..=8);
            let mut w = init_weights(d, h, &mut rng).unwrap();
            w.b1 = RowDVector::from_fn(h, |_, _| rng.random_range(-0.5..0.5));
            w.b2 = rng.random_range(-0.5..0.5);
            let x = DMatrix::from_fn(n, 2 * d, |_, _| rng.random_range(-1.0..1.0));
            let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
            let (_, g) = loss_and_gradient(&w, &x, &y).unwrap();
            for (a, b) in g.flatten().iter().zip(numeric_gradient(&w, &x, &y)) {
                let scale = a.abs().max(b.abs()).max(1e-6);
                assert!((a - b).abs() / scale < 1e-4, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn separable_toy_batch_converges() {
        // positives have a large first coordinate, negatives a small one
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let labels: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let features = DMatrix::from_fn(n, 4, |i, j| {
            let noise = rng.random_range(-0.2..0.2);
            if j == 0 {
                if i % 2 == 1 { 2.0 + noise } else { -2.0 + noise }
            } else {
                noise
            }
        });
        let batch = batch_from(features, labels);
        let mut w = init_weights(2, 8, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let mut loss = f64::INFINITY;
        for _ in 0..2000 {
            let (next, l) = train_step(&w, &batch, 0.1).unwrap();
            w = next;
            loss = l;
            if loss < 0.01 {
                break;
            }
        }
        assert!(loss < 0.01, "final loss {loss}");
    }

    #[test]
    fn saturated_correct_predictions_do_not_move() {
        let mut w = MlpWeights::zeros(1, 2);
        w.b2 = 30.0;
        let batch = batch_from(DMatrix::from_row_slice(3, 2, &[0.1, 0.2, -0.3, 0.4, 1.0, 1.0]), vec![1.0; 3]);
        let (next, _) = train_step(&w, &batch, 0.5).unwrap();
        let diff = MlpWeights {
            w1: &next.w1 - &w.w1,
            b1: &next.b1 - &w.b1,
            w2: &next.w2 - &w.w2,
            b2: next.b2 - w.b2,
        };
        assert!(diff.norm() < 1e-6);
    }

    #[test]
    fn loss_decreases_at_small_lr() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 60;
        let labels: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let features = DMatrix::from_fn(n, 6, |i, _| rng.random_range(-1.0..1.0) + (i % 2) as f64 * 0.3);
        let batch = batch_from(features, labels);
        let mut w = init_weights(3, 10, &mut rng).unwrap();
        let mut losses = vec![];
        for _ in 0..50 {
            let (next, l) = train_step(&w, &batch, 1e-3).unwrap();
            w = next;
            losses.push(l);
        }
        let increases = losses.windows(2).filter(|p| p[1] > p[0]).count();
        assert!(increases <= 2, "{increases} increases");
    }

    #[test]
    fn predict_threshold_is_strict() {
        let w = MlpWeights::zeros(2, 3);
        assert_eq!(predict(&w, &[1.0, 2.0], &[3.0, 4.0], 0.5).unwrap(), (0, 0.5));
        let mut sat = MlpWeights::zeros(2, 3);
        sat.b2 = 20.0;
        assert_eq!(predict(&sat, &[1.0, 2.0], &[3.0, 4.0], 0.5).unwrap().0, 1);
        assert!(predict(&sat, &[1.0], &[3.0, 4.0], 0.5).is_err());
    }

    #[test]
    fn weights_json_round_trip() {
        let w = init_weights(2, 3, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let json = w.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["d"], 2);
        assert_eq!(v["H"], 3);
        assert_eq!(v["W1"][1].as_f64().unwrap(), w.w1[(0, 1)]);
        assert_eq!(MlpWeights::from_json(&json).unwrap(), w);
        assert!(MlpWeights::from_json(r#"{"d":1,"H":2,"W1":[1],"b1":[0,0],"W2":[0,0],"b2":0}"#).is_err());
    }

    #[test]
    fn trainer_minibatches_reduce_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 200;
        let labels: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
        let features = DMatrix::from_fn(n, 4, |i, j| {
            rng.random_range(-0.5..0.5) + if j == 1 && i % 2 == 1 { 1.0 } else { 0.0 }
        });
        let batch = batch_from(features, labels);
        for kind in [OptimizerKind::Adam, OptimizerKind::Sgd] {
            let config = TrainConfig { optimizer: kind, lr: 0.01, epochs: 1, batch_size: 20, hidden: 8 };
            let w = init_weights(2, 8, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
            let mut t = Trainer::new(config, w).unwrap();
            let first = t.update(&batch).unwrap();
            let mut last = first;
            for _ in 0..30 {
                last = t.update(&batch).unwrap();
            }
            assert_eq!(t.steps(), 31 * 10);
            assert!(last < first, "{kind:?}: {first} -> {last}");
        }
    }
}
