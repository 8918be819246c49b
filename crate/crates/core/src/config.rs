//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored; values may be wrapped in double
//! quotes. Later keys override earlier ones when the pairs are applied in order.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::matrix::MatrixConfig;
use crate::synth::SynthConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Parses `key = value` lines, preserving order.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(format!("line {}: empty key", lineno + 1));
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}


/// Everything `reproduce` needs, with defaults for every key.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub knn_k: usize,
    pub matrix: MatrixConfig,
    pub stats_alpha: f64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    pub label_mapping: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            synth: SynthConfig::default(),
            knn_k: crate::impute::DEFAULT_K,
            matrix: MatrixConfig::default(),
            stats_alpha: 0.05,
            threads: 0,
            label_mapping: None,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    if value.is_empty() || value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (k, v) in parse_flat(text).map_err(ConfigError::Syntax)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::from_text(&text)
    }

    /// Applies a `key=value` override such as a `--set` flag.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let s = &mut self.synth;
        let m = &mut self.matrix;
        let l = &mut m.learners;
        match key {
            "seed" => {
                let seed = num(key, value)?;
                s.seed = seed;
                m.seed = seed;
            }
            "n_records" => s.n_records = num(key, value)?,
            "n_children" => s.n_children = num(key, value)?,
            "n_sessions" => s.n_sessions = num(key, value)?,
            "n_unmatched" => s.n_unmatched = num(key, value)?,
            "env_signal" => s.env_signal = num(key, value)?,
            "behavior_signal" => s.behavior_signal = num(key, value)?,
            "class7_distribution" => {
                let parts: Vec<f64> = value.split(',').map(|p| num(key, p.trim())).collect::<Result<_, _>>()?;
                s.class7_distribution = parts.try_into().map_err(|p: Vec<f64>| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                    reason: format!("expected 7 comma-separated shares, got {}", p.len()),
                })?;
            }
            "knn_k" => self.knn_k = num(key, value)?,
            "folds" => m.folds = num(key, value)?,
            "boruta_alpha" => m.boruta.alpha = num(key, value)?,
            "boruta_bonferroni" => m.boruta.bonferroni = num(key, value)?,
            "boruta_max_runs" => m.boruta.max_runs = num(key, value)?,
            "boruta_trees" => m.boruta.forest.n_trees = num(key, value)?,
            "keep_tentative" => m.keep_tentative = num(key, value)?,
            "select_on_full" => m.select_on_full = num(key, value)?,
            "one_hot" => m.encoding.one_hot = num(key, value)?,
            "integer_codes" => m.encoding.integer_codes = num(key, value)?,
            "rf_trees" => l.rf.n_trees = num(key, value)?,
            "rf_mtry" => l.rf.mtry = opt(key, value)?,
            "rf_min_leaf" => l.rf.min_leaf = num(key, value)?,
            "xgb_rounds" => l.xgb.rounds = num(key, value)?,
            "xgb_max_depth" => l.xgb.max_depth = num(key, value)?,
            "xgb_learning_rate" => l.xgb.learning_rate = num(key, value)?,
            "xgb_lambda" => l.xgb.lambda = num(key, value)?,
            "xgb_gamma" => l.xgb.gamma = num(key, value)?,
            "xgb_min_child_weight" => l.xgb.min_child_weight = num(key, value)?,
            "svm_c" => l.svm.c = num(key, value)?,
            "svm_gamma" => l.svm.gamma = opt(key, value)?,
            "svm_tol" => l.svm.tol = num(key, value)?,
            "nn_hidden" => l.nn.hidden = num(key, value)?,
            "nn_learning_rate" => l.nn.learning_rate = num(key, value)?,
            "nn_epochs" => l.nn.epochs = num(key, value)?,
            "nn_batch_size" => l.nn.batch_size = num(key, value)?,
            "stats_alpha" => self.stats_alpha = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "label_mapping" => self.label_mapping = (!value.is_empty()).then(|| PathBuf::from(value)),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Every key with its current value, in file order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let s = &self.synth;
        let m = &self.matrix;
        let l = &m.learners;
        let dist: Vec<String> = s.class7_distribution.iter().map(f64::to_string).collect();
        vec![
            ("seed", s.seed.to_string()),
            ("n_records", s.n_records.to_string()),
            ("n_children", s.n_children.to_string()),
            ("n_sessions", s.n_sessions.to_string()),
            ("n_unmatched", s.n_unmatched.to_string()),
            ("env_signal", s.env_signal.to_string()),
            ("behavior_signal", s.behavior_signal.to_string()),
            ("class7_distribution", dist.join(",")),
            ("knn_k", self.knn_k.to_string()),
            ("folds", m.folds.to_string()),
            ("boruta_alpha", m.boruta.alpha.to_string()),
            ("boruta_bonferroni", m.boruta.bonferroni.to_string()),
            ("boruta_max_runs", m.boruta.max_runs.to_string()),
            ("boruta_trees", m.boruta.forest.n_trees.to_string()),
            ("keep_tentative", m.keep_tentative.to_string()),
            ("select_on_full", m.select_on_full.to_string()),
            ("one_hot", m.encoding.one_hot.to_string()),
            ("integer_codes", m.encoding.integer_codes.to_string()),
            ("rf_trees", l.rf.n_trees.to_string()),
            ("rf_mtry", show_opt(&l.rf.mtry)),
            ("rf_min_leaf", l.rf.min_leaf.to_string()),
            ("xgb_rounds", l.xgb.rounds.to_string()),
            ("xgb_max_depth", l.xgb.max_depth.to_string()),
            ("xgb_learning_rate", l.xgb.learning_rate.to_string()),
            ("xgb_lambda", l.xgb.lambda.to_string()),
            ("xgb_gamma", l.xgb.gamma.to_string()),
            ("xgb_min_child_weight", l.xgb.min_child_weight.to_string()),
            ("svm_c", l.svm.c.to_string()),
            ("svm_gamma", show_opt(&l.svm.gamma)),
            ("svm_tol", l.svm.tol.to_string()),
            ("nn_hidden", l.nn.hidden.to_string()),
            ("nn_learning_rate", l.nn.learning_rate.to_string()),
            ("nn_epochs", l.nn.epochs.to_string()),
            ("nn_batch_size", l.nn.batch_size.to_string()),
            ("stats_alpha", self.stats_alpha.to_string()),
            ("threads", self.threads.to_string()),
            (
                "label_mapping",
                self.label_mapping.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = \"{v}\"\n")).collect()
    }

    /// Checks every component before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.synth.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.matrix.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.knn_k == 0 {
            return Err(ConfigError::Invalid("knn_k must be at least 1".into()));
        }
        if !(self.stats_alpha > 0.0 && self.stats_alpha < 1.0) {
            return Err(ConfigError::Invalid(format!("stats_alpha must lie in (0, 1), got {}", self.stats_alpha)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_quotes_and_order() {
        let pairs = parse_flat("# header\na = 1\n\n b=\"two words\" # trailing\na = 3\n").unwrap();
        assert_eq!(
            pairs,
            vec![
                ("a".to_string(), "1".to_string()),
                ("b".to_string(), "two words".to_string()),
                ("a".to_string(), "3".to_string()),
            ]
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse_flat("just words").is_err());
        assert!(parse_flat(" = 3").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("seed", "42").unwrap();
        cfg.set("env_signal", "0.3").unwrap();
        cfg.set("svm_gamma", "0.125").unwrap();
        cfg.set("label_mapping", "maps/custom.conf").unwrap();
        let back = RunConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.matrix.seed, 42);
        assert_eq!(RunConfig::from_text(&RunConfig::default().to_text()).unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides_and_errors() {
        let mut cfg = RunConfig::from_text("folds = 5\nboruta_alpha = 0.05\n").unwrap();
        assert_eq!(cfg.matrix.folds, 5);
        cfg.set_pair("folds=4").unwrap();
        assert_eq!(cfg.matrix.folds, 4);
        assert!(matches!(cfg.set("nope", "1"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(cfg.set("folds", "many"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(cfg.set("class7_distribution", "0.5,0.5"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(cfg.set_pair("folds"), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn validation_catches_bad_alpha() {
        let cfg = RunConfig::from_text("boruta_alpha = 2").unwrap();
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid(_))));
        let cfg = RunConfig::from_text("stats_alpha = 0").unwrap();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}
