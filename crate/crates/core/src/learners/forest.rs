//! Random forest: bootstrap-resampled gini trees with a random feature subset
//! per split, hard-vote class shares.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_ranked, ClassificationTree, Columns, Ranked, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Defaults to ⌊√p⌋.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 500, mtry: None, min_leaf: 1, max_depth: None }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| ((p as f64).sqrt().floor() as usize).max(1)).min(p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<ClassificationTree>,
    pub n_classes: usize,
    /// Out-of-bag row indices per tree.
    pub oob: Vec<Vec<u32>>,
}

/// A fitted forest plus diagnostics not needed for prediction.
#[derive(Debug, Clone)]
pub struct ForestFit {
    pub model: ForestModel,
    /// Gini decrease per tree per feature, normalized by the tree's sample size.
    pub importances: Vec<Vec<f64>>,
    /// Distinct in-bag rows per tree.
    pub unique_in_bag: Vec<usize>,
}

/// Tree `t` draws from its own stream of the seeded generator, so results do
/// not depend on scheduling.
pub fn fit_forest(data: &Columns<'_>, params: &ForestParams, seed: u64) -> ForestFit {
    let n = data.labels.len();
    let tp = TreeParams { mtry: params.mtry_for(data.cols.len()), min_leaf: params.min_leaf, max_depth: params.max_depth };
    let ranked = Ranked::new(data.cols);
    let grown: Vec<_> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64 + 1);
            let mut weight = vec![0u32; n];
            for _ in 0..n {
                weight[rng.random_range(0..n)] += 1;
            }
            let mut rows: Vec<u32> = (0..n as u32).filter(|&r| weight[r as usize] > 0).collect();
            let (tree, mut imp) = grow_ranked(data, &ranked, &mut rows, &weight, &tp, &mut rng);
            imp.iter_mut().for_each(|v| *v /= n as f64);
            let oob: Vec<u32> = (0..n as u32).filter(|&r| weight[r as usize] == 0).collect();
            (tree, imp, oob)
        })
        .collect();
    let mut model = ForestModel { trees: Vec::new(), n_classes: data.n_classes, oob: Vec::new() };
    let mut importances = Vec::new();
    let mut unique_in_bag = Vec::new();
    for (tree, imp, oob) in grown {
        unique_in_bag.push(n - oob.len());
        model.trees.push(tree);
        importances.push(imp);
        model.oob.push(oob);
    }
    ForestFit { model, importances, unique_in_bag }
}

impl ForestModel {
    pub fn predict_scores_row(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1.0;
        }
        let total = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= total);
        votes
    }

    /// Out-of-bag accuracy over rows that are out of bag for at least one tree.
    pub fn oob_accuracy(&self, cols: &[Vec<f64>], labels: &[usize]) -> Option<f64> {
        let n = labels.len();
        let mut votes = vec![vec![0usize; self.n_classes]; n];
        for (tree, oob) in self.trees.iter().zip(&self.oob) {
            for &r in oob {
                let row: Vec<f64> = cols.iter().map(|c| c[r as usize]).collect();
                votes[r as usize][tree.predict_row(&row)] += 1;
            }
        }
        let mut seen = 0;
        let mut correct = 0;
        for (v, &y) in votes.iter().zip(labels) {
            if v.iter().sum::<usize>() == 0 {
                continue;
            }
            seen += 1;
            let best = (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b });
            if best == y {
                correct += 1;
            }
        }
        (seen > 0).then(|| correct as f64 / seen as f64)
    }
}
