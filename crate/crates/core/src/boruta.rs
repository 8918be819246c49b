//! All-relevant feature selection with shadow features.
//!
//! Each run appends a freshly permuted copy of every undecided feature, fits a
//! random forest and scores each feature by `Z = mean / sd` of its per-tree
//! gini importance. A feature scores a hit when its Z beats the best shadow Z.
//! After every run a two-sided binomial test (p = 0.5) on hits/runs confirms or
//! rejects features; rejected features leave the forest for good. Whatever is
//! undecided after `max_runs` is tentative.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::FeatureMatrix;
use crate::learners::tree::Columns;
use crate::learners::{fit_forest, ForestParams};

/// Fewer shadows than this make the max-shadow threshold too noisy, so the
/// shadow set is padded by cycling through the undecided features.
pub const MIN_SHADOWS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum BorutaError {
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("need at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("report columns do not match the matrix")]
    ColumnMismatch,
    #[error("selection retained no columns")]
    EmptySelection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorutaConfig {
    pub alpha: f64,
    /// Divide `alpha` by the number of features before each test.
    #[serde(default)]
    pub bonferroni: bool,
    pub max_runs: usize,
    pub forest: ForestParams,
    pub seed: u64,
}

impl Default for BorutaConfig {
    fn default() -> Self {
        BorutaConfig {
            alpha: 0.01,
            bonferroni: false,
            max_runs: 100,
            forest: ForestParams { n_trees: 100, ..ForestParams::default() },
            seed: 0,
        }
    }
}

impl BorutaConfig {
    /// Per-test significance level for `p` features.
    pub fn level(&self, p: usize) -> f64 {
        if self.bonferroni { self.alpha / p.max(1) as f64 } else { self.alpha }
    }

    pub fn validate(&self) -> Result<(), BorutaError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(BorutaError::InvalidConfig(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if self.max_runs == 0 {
            return Err(BorutaError::InvalidConfig("max_runs must be >= 1".into()));
        }
        if self.forest.n_trees < 2 {
            return Err(BorutaError::InvalidConfig("forest needs at least 2 trees for a Z-score".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Confirmed,
    Tentative,
    Rejected,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Confirmed => "confirmed",
            Decision::Tentative => "tentative",
            Decision::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDecision {
    pub name: String,
    pub decision: Decision,
    pub hit_count: usize,
    pub runs_participated: usize,
    /// Run after which the decision was made; `None` for tentative.
    pub decided_at: Option<usize>,
    pub last_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub run: usize,
    pub max_shadow_z: f64,
    /// Original feature indices present in this run's forest.
    pub active: Vec<usize>,
    pub n_shadows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaReport {
    pub features: Vec<FeatureDecision>,
    pub trace: Vec<RunTrace>,
    pub config: BorutaConfig,
}

impl BorutaReport {
    pub fn names_with(&self, d: Decision) -> Vec<&str> {
        self.features.iter().filter(|f| f.decision == d).map(|f| f.name.as_str()).collect()
    }

    pub fn count(&self, d: Decision) -> usize {
        self.features.iter().filter(|f| f.decision == d).count()
    }
}

/// P(X ≤ k) for X ~ Binomial(n, 1/2).
fn binom_half_cdf(k: usize, n: usize) -> f64 {
    // log C(n, i) built incrementally to stay finite for large n
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_c = 0.0;
    let mut total = 0.0;
    for i in 0..=k.min(n) {
        if i > 0 {
            ln_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (ln_c - ln2n).exp();
    }
    total.min(1.0)
}

/// Two-sided exact binomial test of `hits` successes in `n` trials, p = 1/2.
pub fn binomial_two_sided(hits: usize, n: usize) -> f64 {
    let lower = binom_half_cdf(hits, n);
    let upper = if hits == 0 { 1.0 } else { 1.0 - binom_half_cdf(hits - 1, n) };
    (2.0 * lower.min(upper)).min(1.0)
}

/// Smallest run count at which `n` hits out of `n` runs is significant.
pub fn earliest_decisive_run(alpha: f64) -> usize {
    (1..).find(|&n| binomial_two_sided(n, n) < alpha).expect("alpha > 0")
}

fn z_scores(per_tree: &[Vec<f64>], n_cols: usize) -> Vec<f64> {
    let t = per_tree.len() as f64;
    (0..n_cols)
        .map(|j| {
            let mean = per_tree.iter().map(|r| r[j]).sum::<f64>() / t;
            let var = per_tree.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let sd = var.sqrt();
            if sd > 0.0 { mean / sd } else { 0.0 }
        })
        .collect()
}

pub fn boruta_select(matrix: &FeatureMatrix, cfg: &BorutaConfig) -> Result<BorutaReport, BorutaError> {
    cfg.validate()?;
    let p = matrix.n_cols();
    if p < 2 {
        return Err(BorutaError::TooFewFeatures(p));
    }
    let present = matrix.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(BorutaError::InvalidLabels("label vector is constant".into()));
    }
    let cols: Vec<Vec<f64>> = (0..p).map(|j| matrix.column(j)).collect();
    let mut state: Vec<Option<Decision>> = vec![None; p];
    let mut hits = vec![0usize; p];
    let mut runs = vec![0usize; p];
    let mut decided_at = vec![None; p];
    let mut last_z = vec![0.0; p];
    let mut trace = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let level = cfg.level(p);

    for run in 1..=cfg.max_runs {
        let undecided: Vec<usize> = (0..p).filter(|&j| state[j].is_none()).collect();
        if undecided.is_empty() {
            break;
        }
        let active: Vec<usize> = (0..p).filter(|&j| state[j] != Some(Decision::Rejected)).collect();
        let n_shadows = undecided.len().max(MIN_SHADOWS);
        let mut run_cols: Vec<Vec<f64>> = active.iter().map(|&j| cols[j].clone()).collect();
        for s in 0..n_shadows {
            let mut shadow = cols[undecided[s % undecided.len()]].clone();
            shadow.shuffle(&mut rng);
            run_cols.push(shadow);
        }
        let data = Columns { cols: &run_cols, labels: matrix.labels(), n_classes: matrix.n_classes() };
        let fit = fit_forest(&data, &cfg.forest, rng.next_u64());
        let z = z_scores(&fit.importances, run_cols.len());
        let max_shadow = z[active.len()..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (pos, &j) in active.iter().enumerate() {
            last_z[j] = z[pos];
            if state[j].is_some() {
                continue;
            }
            runs[j] += 1;
            if z[pos] > max_shadow {
                hits[j] += 1;
            }
            let pval = binomial_two_sided(hits[j], runs[j]);
            if pval < level {
                let twice = 2 * hits[j];
                if twice > runs[j] {
                    state[j] = Some(Decision::Confirmed);
                    decided_at[j] = Some(run);
                } else if twice < runs[j] {
                    state[j] = Some(Decision::Rejected);
                    decided_at[j] = Some(run);
                }
            }
        }
        trace.push(RunTrace { run, max_shadow_z: max_shadow, active, n_shadows });
    }

    let features = (0..p)
        .map(|j| FeatureDecision {
            name: matrix.column_names()[j].clone(),
            decision: state[j].unwrap_or(Decision::Tentative),
            hit_count: hits[j],
            runs_participated: runs[j],
            decided_at: decided_at[j],
            last_z: last_z[j],
        })
        .collect();
    Ok(BorutaReport { features, trace, config: *cfg })
}

/// Keeps confirmed columns (and tentative ones if asked) in their original order.
pub fn apply_selection(
    matrix: &FeatureMatrix,
    report: &BorutaReport,
    keep_tentative: bool,
) -> Result<FeatureMatrix, BorutaError> {
    let same = report.features.len() == matrix.n_cols()
        && report.features.iter().zip(matrix.column_names()).all(|(f, n)| &f.name == n);
    if !same {
        return Err(BorutaError::ColumnMismatch);
    }
    let keep: Vec<usize> = report
        .features
        .iter()
        .enumerate()
        .filter(|(_, f)| f.decision == Decision::Confirmed || (keep_tentative && f.decision == Decision::Tentative))
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(BorutaError::EmptySelection);
    }
    Ok(matrix.select_columns(&keep))
}
