//! One-hidden-layer perceptron: tanh hidden units, softmax output, mean
//! cross-entropy loss, mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gbt::softmax;
use super::scale::Standardizer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for NnParams {
    fn default() -> Self {
        NnParams { hidden: 32, learning_rate: 0.01, epochs: 200, batch_size: 32 }
    }
}

/// Weights packed as `[W1 (h×p), b1 (h), W2 (k×h), b2 (k)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub n_in: usize,
    pub n_hidden: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
}

impl Mlp {
    pub fn n_params(n_in: usize, n_hidden: usize, n_out: usize) -> usize {
        n_hidden * n_in + n_hidden + n_out * n_hidden + n_out
    }

    /// Xavier-uniform weights, zero biases.
    pub fn init<R: Rng>(n_in: usize, n_hidden: usize, n_out: usize, rng: &mut R) -> Self {
        let mut weights = vec![0.0; Self::n_params(n_in, n_hidden, n_out)];
        let a1 = (6.0 / (n_in + n_hidden) as f64).sqrt();
        for w in &mut weights[..n_hidden * n_in] {
            *w = rng.random_range(-a1..a1);
        }
        let a2 = (6.0 / (n_hidden + n_out) as f64).sqrt();
        let off = n_hidden * n_in + n_hidden;
        for w in &mut weights[off..off + n_out * n_hidden] {
            *w = rng.random_range(-a2..a2);
        }
        Mlp { n_in, n_hidden, n_out, weights }
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.n_hidden * self.n_in;
        let w2 = b1 + self.n_hidden;
        let b2 = w2 + self.n_out * self.n_hidden;
        (b1, w2, b2)
    }

    fn hidden(&self, x: &[f64]) -> Vec<f64> {
        let (b1, _, _) = self.offsets();
        (0..self.n_hidden)
            .map(|u| {
                let w = &self.weights[u * self.n_in..(u + 1) * self.n_in];
                (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.weights[b1 + u]).tanh()
            })
            .collect()
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        let (_, w2, b2) = self.offsets();
        (0..self.n_out)
            .map(|o| {
                let w = &self.weights[w2 + o * self.n_hidden..w2 + (o + 1) * self.n_hidden];
                w.iter().zip(h).map(|(a, b)| a * b).sum::<f64>() + self.weights[b2 + o]
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(&self.hidden(x)))
    }

    /// Mean cross-entropy over `rows` and its gradient w.r.t. `weights`.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ys: &[usize]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let mut grad = vec![0.0; self.weights.len()];
        let mut loss = 0.0;
        let m = xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let h = self.hidden(x);
            let p = softmax(&self.logits(&h));
            loss -= p[y].max(1e-300).ln();
            let mut dh = vec![0.0; self.n_hidden];
            for o in 0..self.n_out {
                let d = p[o] - f64::from(u8::from(o == y));
                grad[b2 + o] += d;
                let row = w2 + o * self.n_hidden;
                for u in 0..self.n_hidden {
                    grad[row + u] += d * h[u];
                    dh[u] += d * self.weights[row + u];
                }
            }
            for u in 0..self.n_hidden {
                let dz = dh[u] * (1.0 - h[u] * h[u]);
                grad[b1 + u] += dz;
                let row = u * self.n_in;
                for (i, xi) in x.iter().enumerate() {
                    grad[row + i] += dz * xi;
                }
            }
        }
        grad.iter_mut().for_each(|g| *g /= m);
        (loss / m, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub scaler: Standardizer,
    pub net: Mlp,
}

impl NnModel {
    pub fn predict_scores_row(&self, row: &[f64]) -> Vec<f64> {
        self.net.forward(&self.scaler.transform(row))
    }
}

pub fn fit_nn(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, params: &NnParams, seed: u64) -> NnModel {
    let scaler = Standardizer::fit(rows);
    let z: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
    let p = z.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::init(p, params.hidden, n_classes, &mut rng);
    let mut order: Vec<usize> = (0..z.len()).collect();
    let batch = params.batch_size.max(1);
    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| z[i].as_slice()).collect();
            let ys: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let (_, g) = net.loss_and_gradient(&xs, &ys);
            for (w, gi) in net.weights.iter_mut().zip(&g) {
                *w -= params.learning_rate * gi;
            }
        }
    }
    NnModel { scaler, net }
}
