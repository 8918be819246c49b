//! Classifiers behind one fit/predict contract.
//!
//! | kind | model                                        |
//! |------|----------------------------------------------|
//! | XGB  | softmax gradient-boosted trees               |
//! | SVM  | RBF-kernel SVM, one-vs-one                   |
//! | RF   | random forest, gini trees, vote shares       |
//! | NN   | one hidden tanh layer, softmax output        |
//!
//! SVM and NN standardize features internally; trees use raw values.

pub mod forest;
pub mod gbt;
pub mod nn;
mod scale;
pub mod svm;
pub mod tree;

pub use forest::{fit_forest, ForestFit, ForestModel, ForestParams};
pub use gbt::{GbtModel, GbtParams};
pub use nn::{Mlp, NnModel, NnParams};
pub use scale::Standardizer;
pub use svm::{SvmModel, SvmParams};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::FeatureMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("invalid labels: {0}")]
    InvalidLabels(String),
    #[error("non-finite value at row {row}, column {col}")]
    NumericError { row: usize, col: usize },
    #[error("column signature mismatch: model has {expected:?}, input has {found:?}")]
    SchemaError { expected: Vec<String>, found: Vec<String> },
    #[error("invalid hyperparameter: {0}")]
    InvalidParam(String),
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LearnerKind {
    #[serde(rename = "XGB")]
    Xgb,
    #[serde(rename = "SVM")]
    Svm,
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "NN")]
    Nn,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::Xgb, LearnerKind::Svm, LearnerKind::Rf, LearnerKind::Nn];

    /// Factor coding used in the pooled ANOVA: XGB 1, SVM 2, RF 3, NN 4.
    pub fn code(self) -> usize {
        match self {
            LearnerKind::Xgb => 1,
            LearnerKind::Svm => 2,
            LearnerKind::Rf => 3,
            LearnerKind::Nn => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Xgb => "XGB",
            LearnerKind::Svm => "SVM",
            LearnerKind::Rf => "RF",
            LearnerKind::Nn => "NN",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = LearnerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "xgb" | "gbt" => Ok(LearnerKind::Xgb),
            "svm" => Ok(LearnerKind::Svm),
            "rf" => Ok(LearnerKind::Rf),
            "nn" | "mlp" => Ok(LearnerKind::Nn),
            other => Err(LearnerError::InvalidParam(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Hyperparams {
    Xgb(GbtParams),
    Svm(SvmParams),
    Rf(ForestParams),
    Nn(NnParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub params: Hyperparams,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn default_for(kind: LearnerKind, seed: u64) -> Self {
        let params = match kind {
            LearnerKind::Xgb => Hyperparams::Xgb(GbtParams::default()),
            LearnerKind::Svm => Hyperparams::Svm(SvmParams::default()),
            LearnerKind::Rf => Hyperparams::Rf(ForestParams::default()),
            LearnerKind::Nn => Hyperparams::Nn(NnParams::default()),
        };
        LearnerSpec { params, seed }
    }

    pub fn kind(&self) -> LearnerKind {
        match self.params {
            Hyperparams::Xgb(_) => LearnerKind::Xgb,
            Hyperparams::Svm(_) => LearnerKind::Svm,
            Hyperparams::Rf(_) => LearnerKind::Rf,
            Hyperparams::Nn(_) => LearnerKind::Nn,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |m: &str| Err(LearnerError::InvalidParam(m.to_string()));
        match &self.params {
            Hyperparams::Rf(p) => {
                if p.n_trees == 0 {
                    return bad("tree count must be >= 1");
                }
                if p.min_leaf == 0 {
                    return bad("min leaf must be >= 1");
                }
                if p.mtry == Some(0) {
                    return bad("mtry must be >= 1");
                }
            }
            Hyperparams::Xgb(p) => {
                if p.rounds == 0 || p.max_depth == 0 {
                    return bad("rounds and depth must be >= 1");
                }
                // 0 is allowed and reduces the model to the class prior.
                if !(p.learning_rate >= 0.0) || !p.learning_rate.is_finite() {
                    return bad("learning rate must be finite and >= 0");
                }
                if !(p.lambda >= 0.0) || !(p.gamma >= 0.0) || !(p.min_child_weight >= 0.0) {
                    return bad("lambda, gamma and min child weight must be >= 0");
                }
            }
            Hyperparams::Svm(p) => {
                if !(p.c > 0.0) {
                    return bad("C must be > 0");
                }
                if p.gamma.is_some_and(|g| !(g > 0.0)) {
                    return bad("gamma must be > 0");
                }
                if !(p.tol > 0.0) {
                    return bad("tolerance must be > 0");
                }
            }
            Hyperparams::Nn(p) => {
                if p.hidden == 0 {
                    return bad("hidden units must be >= 1");
                }
                if !(p.learning_rate > 0.0) {
                    return bad("learning rate must be > 0");
                }
                if p.batch_size == 0 {
                    return bad("batch size must be >= 1");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum ModelParams {
    Xgb(GbtModel),
    Svm(SvmModel),
    Rf(ForestModel),
    Nn(NnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: LearnerSpec,
    pub n_classes: usize,
    pub columns: Vec<String>,
    pub params: ModelParams,
}

fn check_input(m: &FeatureMatrix) -> Result<(), LearnerError> {
    let p = m.n_cols();
    if let Some(pos) = m.values().iter().position(|v| !v.is_finite()) {
        return Err(LearnerError::NumericError { row: pos / p.max(1), col: pos % p.max(1) });
    }
    Ok(())
}

fn rows_of(m: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..m.n_rows()).map(|i| m.row(i).to_vec()).collect()
}

fn cols_of(m: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..m.n_cols()).map(|j| m.column(j)).collect()
}

pub fn fit(spec: &LearnerSpec, train: &FeatureMatrix) -> Result<TrainedModel, LearnerError> {
    spec.validate()?;
    let present = train.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(LearnerError::InvalidLabels(format!("{present} distinct class(es) in training labels")));
    }
    if train.n_cols() == 0 {
        return Err(LearnerError::InvalidParam("no feature columns".into()));
    }
    check_input(train)?;
    let k = train.n_classes();
    let labels = train.labels();
    let params = match &spec.params {
        Hyperparams::Rf(p) => {
            let cols = cols_of(train);
            let data = tree::Columns { cols: &cols, labels, n_classes: k };
            ModelParams::Rf(fit_forest(&data, p, spec.seed).model)
        }
        Hyperparams::Xgb(p) => ModelParams::Xgb(gbt::fit_gbt(&cols_of(train), labels, k, p)),
        Hyperparams::Svm(p) => ModelParams::Svm(svm::fit_svm(&rows_of(train), labels, k, p)),
        Hyperparams::Nn(p) => ModelParams::Nn(nn::fit_nn(&rows_of(train), labels, k, p, spec.seed)),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: *spec,
        n_classes: k,
        columns: train.column_names().to_vec(),
        params,
    })
}

impl TrainedModel {
    pub fn kind(&self) -> LearnerKind {
        self.spec.kind()
    }

    pub fn predict_scores_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.params {
            ModelParams::Rf(m) => m.predict_scores_row(row),
            ModelParams::Xgb(m) => m.predict_scores_row(row),
            ModelParams::Svm(m) => m.predict_scores_row(row),
            ModelParams::Nn(m) => m.predict_scores_row(row),
        }
    }

    /// Class-score rows; each sums to 1.
    pub fn predict_scores(&self, rows: &FeatureMatrix) -> Result<Vec<Vec<f64>>, LearnerError> {
        if rows.column_names() != self.columns.as_slice() {
            return Err(LearnerError::SchemaError {
                expected: self.columns.clone(),
                found: rows.column_names().to_vec(),
            });
        }
        check_input(rows)?;
        Ok((0..rows.n_rows()).map(|i| self.predict_scores_row(rows.row(i))).collect())
    }

    pub fn predict_labels(&self, rows: &FeatureMatrix) -> Result<Vec<usize>, LearnerError> {
        Ok(self.predict_scores(rows)?.iter().map(|s| argmax(s)).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), LearnerError> {
        std::fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LearnerError> {
        let bytes = std::fs::read(path)?;
        let value: serde_json::Value = serde_json::from_slice(&bytes)?;
        let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(LearnerError::Version(version));
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}
