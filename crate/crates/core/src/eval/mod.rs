//! Stratified splits and folds, confusion-matrix metrics, AUC and
//! cross-validation.

mod metrics;

pub use metrics::{
    auc_binary, auc_ovr, class_metrics, compute_metrics, ClassMetrics, ConfusionMatrix, MetricSet,
};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boruta::{boruta_select, BorutaConfig, BorutaError, BorutaReport, Decision};
use crate::datamodel::FeatureMatrix;
use crate::learners::{self, LearnerError, LearnerKind, LearnerSpec};
use crate::stats::aggregate_mean_sd;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("stratification: {0}")]
    Stratification(String),
    #[error("fold plan: {0}")]
    Fold(String),
    #[error("confusion matrix is empty")]
    EmptyConfusion,
    #[error("no class has both positive and negative rows")]
    NoRankableClass,
    #[error("fold {fold}: {source}")]
    Learner { fold: usize, source: LearnerError },
    #[error("fold {fold}: feature selection failed: {source}")]
    Selection { fold: usize, source: BorutaError },
}

fn rows_by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut by = vec![Vec::new(); n_classes];
    for (i, &y) in labels.iter().enumerate() {
        by[y].push(i);
    }
    by
}

/// Per-class shuffled split; each class sends `round(ratio · count)` rows to
/// train, kept within `[1, count − 1]`. Returns sorted (train, test) indices.
pub fn stratified_split_indices(
    labels: &[usize],
    n_classes: usize,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::Stratification(format!("ratio must be in (0, 1), got {ratio}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut rows) in rows_by_class(labels, n_classes).into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(EvalError::Stratification(format!("class {c} has a single row")));
        }
        rows.shuffle(&mut rng);
        let n_train = ((ratio * rows.len() as f64).round() as usize).clamp(1, rows.len() - 1);
        train.extend_from_slice(&rows[..n_train]);
        test.extend_from_slice(&rows[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(matrix: &FeatureMatrix, ratio: f64, seed: u64) -> Result<(FeatureMatrix, FeatureMatrix), EvalError> {
    let (tr, te) = stratified_split_indices(matrix.labels(), matrix.n_classes(), ratio, seed)?;
    Ok((matrix.select_rows(&tr), matrix.select_rows(&te)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Sorted held-out row indices per fold.
    pub folds: Vec<Vec<usize>>,
    pub stratified: bool,
    pub seed: u64,
}

impl FoldPlan {
    pub fn n_rows(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test_indices(&self, fold: usize) -> &[usize] {
        &self.folds[fold]
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        let mut out: Vec<usize> = (0..self.folds.len()).filter(|&f| f != fold).flat_map(|f| self.folds[f].iter().copied()).collect();
        out.sort_unstable();
        out
    }

    /// Checks that the folds partition `0..n`.
    pub fn validate(&self, n: usize) -> Result<(), EvalError> {
        let mut seen = vec![false; n];
        for f in &self.folds {
            for &i in f {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(EvalError::Fold(format!("row {i} out of range or repeated")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(EvalError::Fold("folds do not cover every row".into()));
        }
        Ok(())
    }
}

/// Stratified k-fold: rows of each class are shuffled and dealt to folds
/// round-robin with one counter running across classes, so both per-class
/// and total fold sizes differ by at most one.
pub fn kfold_plan_labels(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::Fold(format!("k must be >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(EvalError::Fold(format!("k = {k} exceeds {} rows", labels.len())));
    }
    let by = rows_by_class(labels, n_classes);
    if let Some((c, rows)) = by.iter().enumerate().find(|(_, r)| !r.is_empty() && r.len() < k) {
        return Err(EvalError::Fold(format!("class {c} has {} rows, fewer than k = {k}", rows.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut counter = 0;
    for mut rows in by {
        rows.shuffle(&mut rng);
        for r in rows {
            folds[counter % k].push(r);
            counter += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldPlan { k, folds, stratified: true, seed })
}

pub fn kfold_plan(matrix: &FeatureMatrix, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    kfold_plan_labels(matrix.labels(), matrix.n_classes(), k, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Columns the learner saw in this fold.
    pub columns: Vec<String>,
    pub metrics: MetricSet,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub learner: LearnerKind,
    pub spec: LearnerSpec,
    pub n_rows: usize,
    pub n_classes: usize,
    pub folds: Vec<FoldResult>,
    pub mean: MetricSet,
    /// Sample SD over folds.
    pub sd: MetricSet,
    /// Sum of the per-fold confusion matrices.
    pub confusion: ConfusionMatrix,
}

/// Columns retained in one fold by in-fold feature selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSelection {
    pub fold: usize,
    pub columns: Vec<usize>,
    pub report: BorutaReport,
    pub fallback: SelectionFallback,
}

/// How a fold's columns were chosen when Boruta confirmed nothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionFallback {
    /// Confirmed columns (plus tentative ones when requested).
    None,
    /// Nothing confirmed; the tentative columns were used.
    Tentative,
    /// Everything rejected; the columns with the highest hit rate were kept.
    BestHitRate,
}

/// Runs Boruta on the training rows of every fold.
pub fn boruta_fold_selections(
    matrix: &FeatureMatrix,
    plan: &FoldPlan,
    cfg: &BorutaConfig,
    keep_tentative: bool,
) -> Result<Vec<FoldSelection>, EvalError> {
    (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train = matrix.select_rows(&plan.train_indices(fold));
            let fcfg = BorutaConfig { seed: derive_seed(cfg.seed, fold), ..*cfg };
            let report = boruta_select(&train, &fcfg).map_err(|source| EvalError::Selection { fold, source })?;
            select_columns(fold, report, keep_tentative)
        })
        .collect()
}

pub(crate) fn select_columns(fold: usize, report: BorutaReport, keep_tentative: bool) -> Result<FoldSelection, EvalError> {
    let pick = |tentative: bool| -> Vec<usize> {
        report
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.decision == Decision::Confirmed || (tentative && f.decision == Decision::Tentative))
            .map(|(j, _)| j)
            .collect()
    };
    let mut columns = pick(keep_tentative);
    let mut fallback = SelectionFallback::None;
    if columns.is_empty() && !keep_tentative {
        columns = pick(true);
        if !columns.is_empty() {
            fallback = SelectionFallback::Tentative;
            log::warn!("fold {fold}: no confirmed features; using tentative ones");
        }
    }
    if columns.is_empty() {
        let rate = |f: &crate::boruta::FeatureDecision| f.hit_count as f64 / f.runs_participated.max(1) as f64;
        let best = report.features.iter().map(rate).fold(f64::NEG_INFINITY, f64::max);
        columns = (0..report.features.len()).filter(|&j| rate(&report.features[j]) == best).collect();
        fallback = SelectionFallback::BestHitRate;
        log::warn!("fold {fold}: every feature rejected; keeping the {} with the best hit rate", columns.len());
    }
    if columns.is_empty() {
        return Err(EvalError::Selection { fold, source: BorutaError::EmptySelection });
    }
    Ok(FoldSelection { fold, columns, report, fallback })
}

pub(crate) fn derive_seed(seed: u64, salt: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (salt as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits on k − 1 folds and evaluates on the held-out fold, for every fold.
/// `selections`, when given, restricts each fold to its selected columns.
pub fn cross_validate(
    spec: &LearnerSpec,
    matrix: &FeatureMatrix,
    plan: &FoldPlan,
    selections: Option<&[FoldSelection]>,
) -> Result<RunResult, EvalError> {
    plan.validate(matrix.n_rows())?;
    if let Some(s) = selections {
        if s.len() != plan.k {
            return Err(EvalError::Fold(format!("{} selections for {} folds", s.len(), plan.k)));
        }
    }
    let k = matrix.n_classes();
    let folds: Vec<FoldResult> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            debug_assert!(test_idx.iter().all(|i| train_idx.binary_search(i).is_err()));
            let (train, test) = match selections {
                Some(s) => {
                    let cols = &s[fold].columns;
                    (matrix.select_rows(&train_idx).select_columns(cols), matrix.select_rows(test_idx).select_columns(cols))
                }
                None => (matrix.select_rows(&train_idx), matrix.select_rows(test_idx)),
            };
            let fold_spec = spec.with_seed(derive_seed(spec.seed, fold));
            let model = learners::fit(&fold_spec, &train).map_err(|source| EvalError::Learner { fold, source })?;
            let scores = model.predict_scores(&test).map_err(|source| EvalError::Learner { fold, source })?;
            let predicted: Vec<usize> = scores.iter().map(|s| learners::argmax(s)).collect();
            let confusion = ConfusionMatrix::from_predictions(test.labels(), &predicted, k);
            let mut metrics = compute_metrics(&confusion)?;
            metrics.auc = auc_ovr(&scores, test.labels()).ok();
            Ok(FoldResult {
                fold,
                n_train: train.n_rows(),
                n_test: test.n_rows(),
                columns: train.column_names().to_vec(),
                metrics,
                confusion,
            })
        })
        .collect::<Result<_, EvalError>>()?;

    let mut confusion = ConfusionMatrix::zeros(k);
    folds.iter().for_each(|f| confusion.add(&f.confusion));
    let (mean, sd) = summarize_folds(&folds);
    Ok(RunResult { learner: spec.kind(), spec: *spec, n_rows: matrix.n_rows(), n_classes: k, folds, mean, sd, confusion })
}

fn summarize_folds(folds: &[FoldResult]) -> (MetricSet, MetricSet) {
    let agg = |get: &dyn Fn(&MetricSet) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        let v: Vec<f64> = folds.iter().filter_map(|f| get(&f.metrics)).collect();
        match aggregate_mean_sd(&v) {
            Ok(m) => (Some(m.mean), Some(m.sd.unwrap_or(0.0))),
            Err(_) => (None, None),
        }
    };
    let acc = agg(&|m| Some(m.accuracy));
    let pre = agg(&|m| Some(m.precision));
    let rec = agg(&|m| Some(m.recall_sensitivity));
    let spe = agg(&|m| Some(m.specificity));
    let f1 = agg(&|m| Some(m.f1));
    let auc = agg(&|m| m.auc);
    let build = |pick: fn((Option<f64>, Option<f64>)) -> Option<f64>| MetricSet {
        accuracy: pick(acc).unwrap_or(0.0),
        precision: pick(pre).unwrap_or(0.0),
        recall_sensitivity: pick(rec).unwrap_or(0.0),
        specificity: pick(spe).unwrap_or(0.0),
        f1: pick(f1).unwrap_or(0.0),
        auc: pick(auc),
    };
    (build(|p| p.0), build(|p| p.1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{ForestParams, Hyperparams};

    fn labels_7(n: usize) -> Vec<usize> {
        (0..n).map(|i| (i * 5 + i / 7) % 7).collect()
    }

    #[test]
    fn split_exact_divisibility() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let (tr, te) = stratified_split_indices(&labels, 2, 0.8, 1).unwrap();
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 0).count(), 40);
        assert_eq!(te.iter().filter(|&&i| labels[i] == 1).count(), 10);
        let (tr2, _) = stratified_split_indices(&labels, 2, 0.8, 2).unwrap();
        assert_ne!(tr, tr2);
        assert_eq!(tr2.len(), 80);
    }

    #[test]
    fn split_rejects_singleton_class() {
        assert!(matches!(stratified_split_indices(&[0, 0, 1], 2, 0.8, 0), Err(EvalError::Stratification(_))));
    }

    #[test]
    fn balanced_binary_folds() {
        let labels: Vec<usize> = (0..100).map(|i| i % 2).collect();
        let plan = kfold_plan_labels(&labels, 2, 10, 3).unwrap();
        plan.validate(100).unwrap();
        for f in &plan.folds {
            assert_eq!(f.iter().filter(|&&i| labels[i] == 0).count(), 5);
            assert_eq!(f.len(), 10);
        }
    }

    #[test]
    fn seven_class_fold_proportions() {
        let labels = labels_7(292);
        let plan = kfold_plan_labels(&labels, 7, 10, 9).unwrap();
        plan.validate(292).unwrap();
        let global: Vec<usize> = (0..7).map(|c| labels.iter().filter(|&&y| y == c).count()).collect();
        for f in &plan.folds {
            for c in 0..7 {
                let got = f.iter().filter(|&&i| labels[i] == c).count() as f64;
                assert!((got - global[c] as f64 / 10.0).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn too_many_folds() {
        let labels = vec![0, 0, 0, 1, 1, 1, 1, 1, 1, 1];
        assert!(matches!(kfold_plan_labels(&labels, 2, 4, 0), Err(EvalError::Fold(_))));
    }

    #[test]
    fn leaked_label_feature_gives_perfect_cv() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = labels.iter().map(|&y| vec![y as f64, 2.0 * y as f64]).collect();
        let m = FeatureMatrix::from_rows(vec!["leak".into(), "leak_copy".into()], &rows, labels, 3).unwrap();
        let plan = kfold_plan(&m, 10, 4).unwrap();
        let spec = LearnerSpec { params: Hyperparams::Rf(ForestParams { n_trees: 15, ..Default::default() }), seed: 1 };
        let r = cross_validate(&spec, &m, &plan, None).unwrap();
        assert_eq!(r.mean.accuracy, 1.0);
        assert_eq!(r.confusion.total(), 60);
        let accs: Vec<f64> = r.folds.iter().map(|f| f.metrics.accuracy).collect();
        let agg = aggregate_mean_sd(&accs).unwrap();
        assert_eq!(agg.mean.to_bits(), r.mean.accuracy.to_bits());
        assert_eq!(agg.sd.unwrap().to_bits(), r.sd.accuracy.to_bits());
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    fn report_with(decisions: &[(Decision, usize)]) -> BorutaReport {
        use crate::boruta::FeatureDecision;
        BorutaReport {
            features: decisions
                .iter()
                .enumerate()
                .map(|(j, &(decision, hits))| FeatureDecision {
                    name: format!("f{j}"),
                    decision,
                    hit_count: hits,
                    runs_participated: 10,
                    decided_at: None,
                    last_z: 0.0,
                })
                .collect(),
            trace: Vec::new(),
            config: BorutaConfig::default(),
        }
    }

    #[test]
    fn selection_fallbacks() {
        let r = report_with(&[(Decision::Confirmed, 9), (Decision::Tentative, 5), (Decision::Rejected, 0)]);
        let s = select_columns(0, r, false).unwrap();
        assert_eq!((s.columns, s.fallback), (vec![0], SelectionFallback::None));

        let r = report_with(&[(Decision::Rejected, 1), (Decision::Tentative, 5), (Decision::Rejected, 0)]);
        let s = select_columns(0, r, false).unwrap();
        assert_eq!((s.columns, s.fallback), (vec![1], SelectionFallback::Tentative));

        let r = report_with(&[(Decision::Rejected, 3), (Decision::Rejected, 1), (Decision::Rejected, 3)]);
        let s = select_columns(0, r, false).unwrap();
        assert_eq!((s.columns, s.fallback), (vec![0, 2], SelectionFallback::BestHitRate));
    }
}
