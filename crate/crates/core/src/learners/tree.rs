//! CART classification tree (gini) used by the random forest and by Boruta.

use rand::Rng;
use serde::{Deserialize, Serialize};

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    /// `u32::MAX` marks a leaf.
    pub feature: u32,
    pub threshold: f64,
    pub left: u32,
    pub right: u32,
    /// Majority class at leaves (lowest index on ties).
    pub class: u32,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.feature == LEAF
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTree {
    pub nodes: Vec<TreeNode>,
}

impl ClassificationTree {
    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut n = &self.nodes[0];
        while !n.is_leaf() {
            n = if row[n.feature as usize] <= n.threshold {
                &self.nodes[n.left as usize]
            } else {
                &self.nodes[n.right as usize]
            };
        }
        n.class as usize
    }

    pub fn depth(&self) -> usize {
        fn go(t: &ClassificationTree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + go(t, n.left as usize).max(go(t, n.right as usize))
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    /// Features drawn per split.
    pub mtry: usize,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

/// Column-major training view.
pub struct Columns<'a> {
    pub cols: &'a [Vec<f64>],
    pub labels: &'a [usize],
    pub n_classes: usize,
}

/// Per-column dense ranks and the sorted distinct values they index.
pub struct Ranked {
    pub ranks: Vec<Vec<u32>>,
    pub values: Vec<Vec<f64>>,
}

impl Ranked {
    pub fn new(cols: &[Vec<f64>]) -> Ranked {
        let mut ranks = Vec::with_capacity(cols.len());
        let mut values = Vec::with_capacity(cols.len());
        for col in cols {
            let mut uniq = col.clone();
            uniq.sort_unstable_by(f64::total_cmp);
            uniq.dedup();
            ranks.push(col.iter().map(|v| uniq.partition_point(|u| u < v) as u32).collect());
            values.push(uniq);
        }
        Ranked { ranks, values }
    }
}

/// Columns with at most this many distinct values are scanned by histogram.
const HISTOGRAM_MAX: usize = 32;

/// Grows a tree on `rows` (may contain repeats, as in a bootstrap sample).
/// Returns the tree and the unnormalized gini decrease per feature.
pub fn grow_tree<R: Rng>(
    data: &Columns<'_>,
    rows: &mut [u32],
    params: &TreeParams,
    rng: &mut R,
) -> (ClassificationTree, Vec<f64>) {
    let mut weight = vec![0u32; data.labels.len()];
    for &r in rows.iter() {
        weight[r as usize] += 1;
    }
    let mut unique: Vec<u32> = (0..weight.len() as u32).filter(|&r| weight[r as usize] > 0).collect();
    grow_ranked(data, &Ranked::new(data.cols), &mut unique, &weight, params, rng)
}

/// `rows` holds distinct row ids; `weight[r]` is how many times row `r` was
/// drawn. Equivalent to growing on the rows repeated by their weights.
pub(crate) fn grow_ranked<R: Rng>(
    data: &Columns<'_>,
    ranked: &Ranked,
    rows: &mut [u32],
    weight: &[u32],
    params: &TreeParams,
    rng: &mut R,
) -> (ClassificationTree, Vec<f64>) {
    let p = data.cols.len();
    let k = data.n_classes;
    assert!(k <= 256, "at most 256 classes");
    let mut importance = vec![0.0; p];
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut feat_pool: Vec<usize> = (0..p).collect();
    // rank << 32 | label << 24 | weight
    let mut keys: Vec<u64> = Vec::with_capacity(rows.len());
    let mut hist: Vec<usize> = Vec::with_capacity(HISTOGRAM_MAX * k);
    let mut counts = vec![0usize; k];
    let mut left_counts = vec![0usize; k];
    let mut right_counts = vec![0usize; k];
    let mtry = params.mtry.clamp(1, p.max(1));

    // (start, end, depth, node index)
    nodes.push(blank());
    let mut stack = vec![(0usize, rows.len(), 0usize, 0usize)];
    while let Some((start, end, depth, id)) = stack.pop() {
        let slice = &rows[start..end];
        counts.iter_mut().for_each(|c| *c = 0);
        for &r in slice {
            counts[data.labels[r as usize]] += weight[r as usize] as usize;
        }
        let n: usize = counts.iter().sum();
        let majority = argmax(&counts);
        let pure = counts[majority] == n;
        let depth_capped = params.max_depth.is_some_and(|d| depth >= d);
        if pure || n < 2 * params.min_leaf || depth_capped {
            nodes[id] = leaf(majority);
            continue;
        }
        let parent_score = sum_sq(&counts) as f64 / n as f64;

        // (score, feature, threshold)
        let mut best: Option<(f64, usize, f64)> = None;
        let mut consider = |score: f64, f: usize, lo: f64, hi: f64| {
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, f, midpoint(lo, hi)));
            }
        };
        for t in 0..mtry {
            let j = rng.random_range(t..p);
            feat_pool.swap(t, j);
            let f = feat_pool[t];
            let rank = &ranked.ranks[f];
            let uniq = &ranked.values[f];
            let first = rank[slice[0] as usize];
            if slice.iter().all(|&r| rank[r as usize] == first) {
                continue;
            }
            left_counts.iter_mut().for_each(|c| *c = 0);
            right_counts.copy_from_slice(&counts);
            let mut sq_l = 0usize;
            let mut sq_r = sum_sq(&counts);
            let mut n_l = 0usize;

            if uniq.len() <= HISTOGRAM_MAX {
                let d = uniq.len();
                hist.clear();
                hist.resize(d * k, 0);
                for &r in slice {
                    hist[rank[r as usize] as usize * k + data.labels[r as usize]] += weight[r as usize] as usize;
                }
                let mut prev: Option<usize> = None;
                for v in 0..d {
                    let h = &hist[v * k..(v + 1) * k];
                    if h.iter().all(|&c| c == 0) {
                        continue;
                    }
                    if let Some(u) = prev {
                        if n_l >= params.min_leaf && n - n_l >= params.min_leaf {
                            let score = sq_l as f64 / n_l as f64 + sq_r as f64 / (n - n_l) as f64;
                            consider(score, f, uniq[u], uniq[v]);
                        }
                    }
                    for (c, &m) in h.iter().enumerate() {
                        if m > 0 {
                            sq_l += 2 * left_counts[c] * m + m * m;
                            sq_r -= 2 * right_counts[c] * m - m * m;
                            left_counts[c] += m;
                            right_counts[c] -= m;
                            n_l += m;
                        }
                    }
                    prev = Some(v);
                }
            } else {
                keys.clear();
                keys.extend(slice.iter().map(|&r| {
                    let r = r as usize;
                    (u64::from(rank[r]) << 32) | ((data.labels[r] as u64) << 24) | u64::from(weight[r])
                }));
                keys.sort_unstable();
                for i in 0..keys.len() - 1 {
                    let c = ((keys[i] >> 24) & 0xFF) as usize;
                    let m = (keys[i] & 0xFF_FFFF) as usize;
                    sq_l += 2 * left_counts[c] * m + m * m;
                    sq_r -= 2 * right_counts[c] * m - m * m;
                    left_counts[c] += m;
                    right_counts[c] -= m;
                    n_l += m;
                    let (a, b) = ((keys[i] >> 32) as usize, (keys[i + 1] >> 32) as usize);
                    if a == b || n_l < params.min_leaf || n - n_l < params.min_leaf {
                        continue;
                    }
                    let score = sq_l as f64 / n_l as f64 + sq_r as f64 / (n - n_l) as f64;
                    consider(score, f, uniq[a], uniq[b]);
                }
            }
        }

        let Some((score, f, thr)) = best else {
            nodes[id] = leaf(majority);
            continue;
        };
        importance[f] += score - parent_score;
        let col = &data.cols[f];
        let seg = &mut rows[start..end];
        let mut mid = 0;
        for i in 0..seg.len() {
            if col[seg[i] as usize] <= thr {
                seg.swap(i, mid);
                mid += 1;
            }
        }
        let left = nodes.len();
        nodes.push(blank());
        nodes.push(blank());
        nodes[id] = TreeNode { feature: f as u32, threshold: thr, left: left as u32, right: left as u32 + 1, class: 0 };
        stack.push((start + mid, end, depth + 1, left + 1));
        stack.push((start, start + mid, depth + 1, left));
    }
    (ClassificationTree { nodes }, importance)
}

fn blank() -> TreeNode {
    leaf(0)
}

fn leaf(class: usize) -> TreeNode {
    TreeNode { feature: LEAF, threshold: 0.0, left: 0, right: 0, class: class as u32 }
}

fn sum_sq(c: &[usize]) -> usize {
    c.iter().map(|&x| x * x).sum()
}

fn argmax(c: &[usize]) -> usize {
    let mut best = 0;
    for (i, &v) in c.iter().enumerate() {
        if v > c[best] {
            best = i;
        }
    }
    best
}

/// Split point strictly below `hi` so that `lo <= t < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi { lo } else { m }
}
