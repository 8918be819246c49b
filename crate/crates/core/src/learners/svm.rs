//! Soft-margin kernel SVM trained with SMO (second-order working-set
//! selection), one-vs-one for more than two classes.
//!
//! Class scores combine hard pairwise votes with sigmoid-squashed decision
//! values: `score_c = (votes_c + Σ soft_c) / (2 · n_pairs)`. Both halves sum
//! to `n_pairs`, so scores sum to 1, and the score of a class is monotone in
//! each of its pairwise decision values.

use serde::{Deserialize, Serialize};

use super::scale::Standardizer;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// RBF width; defaults to 1/p.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, gamma: None, tol: 1e-3, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: usize,
    pub negative: usize,
    /// (support vector index, α·y)
    pub coef: Vec<(u32, f64)>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub n_classes: usize,
    pub gamma: f64,
    pub scaler: Standardizer,
    /// Standardized support vectors, row-major.
    pub support: Vec<Vec<f64>>,
    pub pairs: Vec<PairModel>,
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d).exp()
}

pub fn fit_svm(rows: &[Vec<f64>], labels: &[usize], n_classes: usize, params: &SvmParams) -> SvmModel {
    let scaler = Standardizer::fit(rows);
    let z: Vec<Vec<f64>> = rows.iter().map(|r| scaler.transform(r)).collect();
    let p = z.first().map_or(1, Vec::len).max(1);
    let gamma = params.gamma.unwrap_or(1.0 / p as f64);
    let n = z.len();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf(gamma, &z[i], &z[j]);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let mut used = vec![u32::MAX; n];
    let mut support = Vec::new();
    let mut pairs = Vec::new();
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == a || labels[i] == b).collect();
            let y: Vec<f64> = idx.iter().map(|&i| if labels[i] == a { 1.0 } else { -1.0 }).collect();
            let (alpha, rho) = if y.iter().all(|&v| v > 0.0) || y.iter().all(|&v| v < 0.0) {
                // One side absent: constant decision toward the present class.
                (vec![0.0; idx.len()], if y.first().is_some_and(|&v| v > 0.0) { -1.0 } else { 1.0 })
            } else {
                smo(&kernel, n, &idx, &y, params)
            };
            let mut coef = Vec::new();
            for (t, &i) in idx.iter().enumerate() {
                if alpha[t] > 0.0 {
                    if used[i] == u32::MAX {
                        used[i] = support.len() as u32;
                        support.push(z[i].clone());
                    }
                    coef.push((used[i], alpha[t] * y[t]));
                }
            }
            pairs.push(PairModel { positive: a, negative: b, coef, rho });
        }
    }
    SvmModel { n_classes, gamma, scaler, support, pairs }
}

/// Solves the dual on the rows `idx`, returning (α, ρ).
fn smo(kernel: &[f64], n: usize, idx: &[usize], y: &[f64], params: &SvmParams) -> (Vec<f64>, f64) {
    let m = idx.len();
    let c = params.c;
    let k = |s: usize, t: usize| kernel[idx[s] * n + idx[t]];
    let mut alpha = vec![0.0; m];
    let mut g = vec![-1.0; m];
    let mut iter = 0;
    while iter < params.max_iter {
        iter += 1;
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            let v = if y[t] > 0.0 {
                if alpha[t] < c { -g[t] } else { continue }
            } else if alpha[t] > 0.0 {
                g[t]
            } else {
                continue;
            };
            if v >= gmax {
                gmax = v;
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..m {
            let (in_low, yg) = if y[t] > 0.0 { (alpha[t] > 0.0, g[t]) } else { (alpha[t] < c, -g[t]) };
            if !in_low {
                continue;
            }
            if yg >= gmax2 {
                gmax2 = yg;
            }
            let diff = gmax + yg;
            if diff > 0.0 {
                let quad = (k(i, i) + k(t, t) - 2.0 * k(i, t)).max(TAU);
                let obj = -(diff * diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < params.tol || j == usize::MAX {
            break;
        }
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(TAU);
        if y[i] != y[j] {
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..m {
            g[t] += y[t] * (y[i] * k(t, i) * di + y[j] * k(t, j) * dj);
        }
    }
    if iter >= params.max_iter {
        log::warn!("SMO stopped at the iteration cap ({})", params.max_iter);
    }
    let r = rho(&alpha, &g, y, c);
    (alpha, r)
}

fn rho(alpha: &[f64], g: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 { sum / free as f64 } else { (ub + lb) / 2.0 }
}

impl SvmModel {
    pub fn decision_values(&self, row: &[f64]) -> Vec<f64> {
        let z = self.scaler.transform(row);
        let kv: Vec<f64> = self.support.iter().map(|s| rbf(self.gamma, s, &z)).collect();
        self.pairs
            .iter()
            .map(|p| p.coef.iter().map(|&(s, a)| a * kv[s as usize]).sum::<f64>() - p.rho)
            .collect()
    }

    pub fn predict_scores_row(&self, row: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_classes];
        let dv = self.decision_values(row);
        for (p, &f) in self.pairs.iter().zip(&dv) {
            if f > 0.0 {
                scores[p.positive] += 1.0;
            } else {
                scores[p.negative] += 1.0;
            }
            let s = 1.0 / (1.0 + (-f).exp());
            scores[p.positive] += s;
            scores[p.negative] += 1.0 - s;
        }
        let total = 2.0 * self.pairs.len() as f64;
        scores.iter_mut().for_each(|v| *v /= total);
        scores
    }
}
