//! Gradient-boosted trees on the softmax cross-entropy objective using first
//! and second derivatives (exact greedy, level-wise growth).

use serde::{Deserialize, Serialize};

use super::tree::midpoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum loss reduction to split.
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams { rounds: 200, max_depth: 4, learning_rate: 0.1, lambda: 1.0, gamma: 0.0, min_child_weight: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegNode {
    /// `u32::MAX` marks a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<RegNode>,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut n = &self.nodes[0];
        while n.feature != u32::MAX {
            n = if row[n.feature as usize] <= n.threshold {
                &self.nodes[n.left as usize]
            } else {
                &self.nodes[n.right as usize]
            };
        }
        n.weight
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_classes: usize,
    /// Log class priors of the training labels.
    pub base_score: Vec<f64>,
    /// `rounds[r][k]` is the tree for class `k` in round `r`.
    pub rounds: Vec<Vec<RegressionTree>>,
}

impl GbtModel {
    pub fn margins_row(&self, row: &[f64]) -> Vec<f64> {
        let mut m = self.base_score.clone();
        for round in &self.rounds {
            for (k, t) in round.iter().enumerate() {
                m[k] += t.predict_row(row);
            }
        }
        m
    }

    pub fn predict_scores_row(&self, row: &[f64]) -> Vec<f64> {
        softmax(&self.margins_row(row))
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn fit_gbt(cols: &[Vec<f64>], labels: &[usize], n_classes: usize, params: &GbtParams) -> GbtModel {
    let n = labels.len();
    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let base_score: Vec<f64> = counts.iter().map(|&c| (c as f64 / n as f64).max(1e-12).ln()).collect();
    let sorted: Vec<Vec<u32>> = cols
        .iter()
        .map(|c| {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| c[a as usize].total_cmp(&c[b as usize]));
            idx
        })
        .collect();
    let mut margins: Vec<Vec<f64>> = (0..n).map(|_| base_score.clone()).collect();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut model = GbtModel { n_classes, base_score, rounds: Vec::with_capacity(params.rounds) };
    let mut grower = Grower::new(n);
    for _ in 0..params.rounds {
        let probs: Vec<Vec<f64>> = margins.iter().map(|m| softmax(m)).collect();
        let mut round = Vec::with_capacity(n_classes);
        for k in 0..n_classes {
            for i in 0..n {
                let p = probs[i][k];
                grad[i] = p - f64::from(u8::from(labels[i] == k));
                hess[i] = (p * (1.0 - p)).max(1e-16);
            }
            let tree = grower.grow(cols, &sorted, &grad, &hess, params);
            for (i, m) in margins.iter_mut().enumerate() {
                m[k] += grower.leaf_weight_of_row(&tree, i);
            }
            round.push(tree);
        }
        model.rounds.push(round);
    }
    model
}

struct Grower {
    /// Node each row currently sits in; `u32::MAX` once settled in a leaf.
    node_of: Vec<u32>,
    /// Final node of each row after growth.
    leaf_of: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower {
    fn new(n: usize) -> Self {
        Grower { node_of: vec![0; n], leaf_of: vec![0; n] }
    }

    fn leaf_weight_of_row(&self, tree: &RegressionTree, row: usize) -> f64 {
        tree.nodes[self.leaf_of[row] as usize].weight
    }

    fn grow(
        &mut self,
        cols: &[Vec<f64>],
        sorted: &[Vec<u32>],
        grad: &[f64],
        hess: &[f64],
        params: &GbtParams,
    ) -> RegressionTree {
        let n = grad.len();
        let lambda = params.lambda;
        let score = |g: f64, h: f64| g * g / (h + lambda);
        self.node_of.iter_mut().for_each(|v| *v = 0);
        let mut nodes = vec![RegNode { feature: u32::MAX, threshold: 0.0, left: 0, right: 0, weight: 0.0 }];
        let mut sums = vec![(grad.iter().sum::<f64>(), hess.iter().sum::<f64>())];
        // Nodes of the current level, as a contiguous index range.
        let mut level = 0..1usize;
        for _depth in 0..params.max_depth {
            let width = level.len();
            let base = level.start;
            let mut best: Vec<Option<Candidate>> = vec![None; width];
            let mut gl = vec![0.0; width];
            let mut hl = vec![0.0; width];
            let mut last = vec![f64::NAN; width];
            for (f, order) in sorted.iter().enumerate() {
                gl.iter_mut().for_each(|v| *v = 0.0);
                hl.iter_mut().for_each(|v| *v = 0.0);
                last.iter_mut().for_each(|v| *v = f64::NAN);
                let col = &cols[f];
                for &r in order {
                    let nd = self.node_of[r as usize];
                    if nd == u32::MAX {
                        continue;
                    }
                    let slot = nd as usize - base;
                    let v = col[r as usize];
                    if !last[slot].is_nan() && v > last[slot] {
                        let (gt, ht) = sums[nd as usize];
                        let (g_l, h_l) = (gl[slot], hl[slot]);
                        let (g_r, h_r) = (gt - g_l, ht - h_l);
                        if h_l >= params.min_child_weight && h_r >= params.min_child_weight {
                            let gain = 0.5 * (score(g_l, h_l) + score(g_r, h_r) - score(gt, ht)) - params.gamma;
                            if gain > 0.0 && best[slot].is_none_or(|b| gain > b.gain) {
                                best[slot] = Some(Candidate { gain, feature: f, threshold: midpoint(last[slot], v) });
                            }
                        }
                    }
                    gl[slot] += grad[r as usize];
                    hl[slot] += hess[r as usize];
                    last[slot] = v;
                }
            }
            let next_start = nodes.len();
            let mut child_of = vec![u32::MAX; width];
            for (slot, cand) in best.iter().enumerate() {
                if let Some(c) = cand {
                    let id = base + slot;
                    let left = nodes.len() as u32;
                    nodes[id].feature = c.feature as u32;
                    nodes[id].threshold = c.threshold;
                    nodes[id].left = left;
                    nodes[id].right = left + 1;
                    child_of[slot] = left;
                    for _ in 0..2 {
                        nodes.push(RegNode { feature: u32::MAX, threshold: 0.0, left: 0, right: 0, weight: 0.0 });
                        sums.push((0.0, 0.0));
                    }
                }
            }
            if nodes.len() == next_start {
                break;
            }
            for r in 0..n {
                let nd = self.node_of[r];
                if nd == u32::MAX {
                    continue;
                }
                let slot = nd as usize - base;
                if child_of[slot] == u32::MAX {
                    self.leaf_of[r] = nd;
                    self.node_of[r] = u32::MAX;
                    continue;
                }
                let split = &nodes[nd as usize];
                let child = if cols[split.feature as usize][r] <= split.threshold { split.left } else { split.right };
                self.node_of[r] = child;
                sums[child as usize].0 += grad[r];
                sums[child as usize].1 += hess[r];
            }
            level = next_start..nodes.len();
        }
        for r in 0..n {
            if self.node_of[r] != u32::MAX {
                self.leaf_of[r] = self.node_of[r];
            }
        }
        for (node, &(g, h)) in nodes.iter_mut().zip(&sums) {
            if node.feature == u32::MAX {
                node.weight = -params.learning_rate * g / (h + lambda);
            }
        }
        RegressionTree { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_learning_rate_predicts_prior() {
        let cols = vec![(0..30).map(f64::from).collect::<Vec<_>>()];
        let labels: Vec<usize> = (0..30).map(|i| if i < 5 { 0 } else if i < 20 { 2 } else { 1 }).collect();
        let p = GbtParams { rounds: 5, learning_rate: 0.0, ..Default::default() };
        let m = fit_gbt(&cols, &labels, 3, &p);
        for x in [0.0, 10.0, 29.0] {
            let s = m.predict_scores_row(&[x]);
            assert!((s[2] - 0.5).abs() < 1e-12 && (s[0] - 5.0 / 30.0).abs() < 1e-12);
        }
    }

    #[test]
    fn learns_a_step() {
        let cols = vec![(0..40).map(f64::from).collect::<Vec<_>>()];
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 17)).collect();
        let m = fit_gbt(&cols, &labels, 2, &GbtParams { rounds: 20, ..Default::default() });
        assert_eq!(m.rounds[0][0].nodes[0].threshold, 16.5);
        for (i, &y) in labels.iter().enumerate() {
            let s = m.predict_scores_row(&[i as f64]);
            assert_eq!(usize::from(s[1] > s[0]), y);
        }
    }

    #[test]
    fn gamma_blocks_weak_splits() {
        let cols = vec![(0..20).map(f64::from).collect::<Vec<_>>()];
        let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let m = fit_gbt(&cols, &labels, 2, &GbtParams { rounds: 1, gamma: 1e6, ..Default::default() });
        assert_eq!(m.rounds[0][0].nodes.len(), 1);
    }

    #[test]
    fn split_gain_matches_hand_value() {
        // one round, depth 1, two classes 50/50 → p = 0.5, h = 0.25
        let cols = vec![vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]];
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let p = GbtParams { rounds: 1, max_depth: 1, lambda: 1.0, learning_rate: 1.0, min_child_weight: 0.5, ..Default::default() };
        let m = fit_gbt(&cols, &labels, 2, &p);
        let t = &m.rounds[0][1];
        assert_eq!(t.nodes[0].threshold, 3.5);
        // right leaf: g = 4·(0.5−1) = −2, h = 1 → w = 2/(1+1) = 1
        assert!((t.nodes[t.nodes[0].right as usize].weight - 1.0).abs() < 1e-12);
        assert!((t.nodes[t.nodes[0].left as usize].weight + 1.0).abs() < 1e-12);
    }
}
