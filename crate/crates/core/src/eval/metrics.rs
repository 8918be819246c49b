use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix { counts: vec![vec![0; k]; k] }
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], k: usize) -> Self {
        let mut cm = ConfusionMatrix::zeros(k);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.counts[t][p] += 1;
        }
        cm
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for (row, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in row.iter_mut().zip(o) {
                *a += b;
            }
        }
    }

    /// One-vs-rest counts for class `c`: (tp, fp, fn, tn).
    pub fn one_vs_rest(&self, c: usize) -> (u64, u64, u64, u64) {
        let tp = self.counts[c][c];
        let fp: u64 = (0..self.n_classes()).map(|t| self.counts[t][c]).sum::<u64>() - tp;
        let fn_: u64 = self.counts[c].iter().sum::<u64>() - tp;
        (tp, fp, fn_, self.total() - tp - fp - fn_)
    }

    /// CSV with a `true\predicted` corner and class names on both axes.
    pub fn write_csv<W: Write>(&self, mut w: W, class_names: &[&str]) -> std::io::Result<()> {
        let name = |i: usize| class_names.get(i).map_or_else(|| i.to_string(), |s| s.to_string());
        let header: Vec<String> = (0..self.n_classes()).map(name).collect();
        writeln!(w, "true\\predicted,{}", header.join(","))?;
        for (i, row) in self.counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{},{}", name(i), cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall_sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    /// Supplied separately from scores; absent when no class is rankable.
    pub auc: Option<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 { 0.0 } else { num as f64 / den as f64 }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
}

/// Binary metrics of class `c` against the rest. A zero denominator gives 0.
pub fn class_metrics(cm: &ConfusionMatrix, c: usize) -> ClassMetrics {
    let (tp, fp, fn_, tn) = cm.one_vs_rest(c);
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    ClassMetrics { precision, recall, specificity: ratio(tn, tn + fp), f1: harmonic(precision, recall) }
}

/// Accuracy plus macro-averaged one-vs-rest precision, recall and
/// specificity; F1 is the harmonic mean of the macro precision and recall.
pub fn compute_metrics(cm: &ConfusionMatrix) -> Result<MetricSet, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let k = cm.n_classes() as f64;
    let per: Vec<ClassMetrics> = (0..cm.n_classes()).map(|c| class_metrics(cm, c)).collect();
    let precision = per.iter().map(|m| m.precision).sum::<f64>() / k;
    let recall = per.iter().map(|m| m.recall).sum::<f64>() / k;
    let specificity = per.iter().map(|m| m.specificity).sum::<f64>() / k;
    Ok(MetricSet {
        accuracy: cm.trace() as f64 / total as f64,
        precision,
        recall_sensitivity: recall,
        specificity,
        f1: harmonic(precision, recall),
        auc: None,
    })
}

/// Mann-Whitney AUC: share of (positive, negative) pairs ranked correctly,
/// ties counted 0.5. Computed from mid-ranks.
pub fn auc_binary(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&r| positive[r]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Macro one-vs-rest AUC over the classes that have both positives and
/// negatives among `labels`; other classes are skipped with a warning.
pub fn auc_ovr(scores: &[Vec<f64>], labels: &[usize]) -> Result<f64, EvalError> {
    let k = scores.first().map_or(0, Vec::len);
    let mut total = 0.0;
    let mut used = 0;
    for c in 0..k {
        let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
        let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
        match auc_binary(&s, &pos) {
            Some(a) => {
                total += a;
                used += 1;
            }
            None => log::warn!("class {c} has no positives or no negatives; excluded from AUC"),
        }
    }
    if used == 0 {
        return Err(EvalError::NoRankableClass);
    }
    Ok(total / used as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_positive_view() {
        // class 1 positive: TP=70 FN=30 TN=59 FP=41
        let cm = ConfusionMatrix { counts: vec![vec![59, 41], vec![30, 70]] };
        let m = class_metrics(&cm, 1);
        assert!((m.recall - 0.70).abs() < 1e-12);
        assert!((m.specificity - 0.59).abs() < 1e-12);
        assert!((m.precision - 70.0 / 111.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_perfect() {
        let cm = ConfusionMatrix { counts: vec![vec![5, 0, 0], vec![0, 3, 0], vec![0, 0, 9]] };
        let m = compute_metrics(&cm).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall_sensitivity, m.specificity, m.f1), (1.0, 1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_one_class_predictions() {
        let cm = ConfusionMatrix { counts: vec![vec![50, 0], vec![50, 0]] };
        let m = compute_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(m.specificity, 0.5);
        // class 1 is never predicted: precision 0 by convention
        assert_eq!(class_metrics(&cm, 1).precision, 0.0);
    }

    #[test]
    fn empty_matrix_is_an_error() {
        assert!(matches!(compute_metrics(&ConfusionMatrix::zeros(2)), Err(EvalError::EmptyConfusion)));
    }

    #[test]
    fn hand_ranked_cases() {
        let s = [0.9, 0.8, 0.4, 0.3];
        assert_eq!(auc_binary(&s, &[true, true, false, false]), Some(1.0));
        assert_eq!(auc_binary(&s, &[true, false, true, false]), Some(0.75));
        assert_eq!(auc_binary(&[0.5; 4], &[true, false, true, false]), Some(0.5));
        assert_eq!(auc_binary(&s, &[true; 4]), None);
    }

    #[test]
    fn ovr_skips_absent_class() {
        let scores = vec![vec![0.8, 0.1, 0.1], vec![0.2, 0.7, 0.1], vec![0.6, 0.3, 0.1]];
        let labels = [0, 1, 0];
        assert_eq!(auc_ovr(&scores, &labels).unwrap(), 1.0);
    }

    #[test]
    fn csv_layout() {
        let cm = ConfusionMatrix { counts: vec![vec![1, 2], vec![3, 4]] };
        let mut out = Vec::new();
        cm.write_csv(&mut out, &["response", "action"]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "true\\predicted,response,action\nresponse,1,2\naction,3,4\n");
    }
}
