//! The experiment grid: 6 dataset combinations × 2 feature-selection settings
//! × 4 learners × 3 class levels, each cell cross-validated.
//!
//! Fold plans are shared by every cell at the same class level, and Boruta
//! selections by every learner on the same (combination, class level), so
//! cells differ only in what the key says they differ in.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boruta::{boruta_select, BorutaConfig};
use crate::datamodel::{build_combination, BehaviorRecord, ClassLevel, ComboId, DataError, EncodingOptions, FeatureMatrix};
use crate::eval::{
    boruta_fold_selections, cross_validate, kfold_plan, select_columns, EvalError, FoldPlan, FoldSelection,
    RunResult,
};
use crate::learners::{ForestParams, GbtParams, Hyperparams, LearnerKind, LearnerSpec, NnParams, SvmParams};
use crate::stats::{
    aggregate_mean_sd, bonferroni_posthoc, factorial_anova, marginal_posthoc, one_way_anova, render_table, AnovaTable,
    FactorialDesign, MarginalPosthoc, OneWayAnova, Posthoc, StatsError,
};

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("invalid matrix config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("index row {row}: {reason}")]
    Index { row: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSelection {
    None,
    Boruta,
}

impl FeatureSelection {
    pub const ALL: [FeatureSelection; 2] = [FeatureSelection::Boruta, FeatureSelection::None];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSelection::None => "none",
            FeatureSelection::Boruta => "boruta",
        }
    }

    /// Factor level in the pooled analysis: without 0, with Boruta 1.
    pub fn level(self) -> usize {
        match self {
            FeatureSelection::None => 0,
            FeatureSelection::Boruta => 1,
        }
    }
}

impl FromStr for FeatureSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(FeatureSelection::None),
            "boruta" => Ok(FeatureSelection::Boruta),
            other => Err(format!("unknown feature selection `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub combo: ComboId,
    pub feature_selection: FeatureSelection,
    pub learner: LearnerKind,
    pub class_level: ClassLevel,
}

impl CellKey {
    /// All 144 keys in combo, selection, learner, class order.
    pub fn all() -> Vec<CellKey> {
        let mut keys = Vec::with_capacity(144);
        for combo in ComboId::ALL {
            for feature_selection in FeatureSelection::ALL {
                for learner in LearnerKind::ALL {
                    for class_level in ClassLevel::ALL {
                        keys.push(CellKey { combo, feature_selection, learner, class_level });
                    }
                }
            }
        }
        keys
    }

    pub fn includes_env(&self) -> bool {
        self.combo.includes_env()
    }

    /// File stem, e.g. `a_boruta_XGB_class7`.
    pub fn stem(&self) -> String {
        format!(
            "{}_{}_{}_class{}",
            self.combo,
            self.feature_selection.as_str(),
            self.learner,
            self.class_level.n_classes()
        )
    }

    /// Learner seed for this cell: a hash of the master seed and the key.
    pub fn seed(&self, master: u64) -> u64 {
        hash_seed(master, &self.stem())
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.stem())
    }
}

fn hash_seed(master: u64, tag: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(tag.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearnerDefaults {
    pub xgb: GbtParams,
    pub svm: SvmParams,
    pub rf: ForestParams,
    pub nn: NnParams,
}

impl Default for LearnerDefaults {
    fn default() -> Self {
        LearnerDefaults {
            xgb: GbtParams::default(),
            svm: SvmParams::default(),
            rf: ForestParams::default(),
            nn: NnParams::default(),
        }
    }
}

impl LearnerDefaults {
    pub fn spec(&self, kind: LearnerKind, seed: u64) -> LearnerSpec {
        let params = match kind {
            LearnerKind::Xgb => Hyperparams::Xgb(self.xgb),
            LearnerKind::Svm => Hyperparams::Svm(self.svm),
            LearnerKind::Rf => Hyperparams::Rf(self.rf),
            LearnerKind::Nn => Hyperparams::Nn(self.nn),
        };
        LearnerSpec { params, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub folds: usize,
    pub seed: u64,
    pub boruta: BorutaConfig,
    pub keep_tentative: bool,
    /// Run Boruta once on all rows instead of inside each training fold.
    pub select_on_full: bool,
    pub encoding: EncodingOptions,
    pub learners: LearnerDefaults,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            folds: 10,
            seed: 0,
            boruta: BorutaConfig::default(),
            keep_tentative: false,
            select_on_full: false,
            encoding: EncodingOptions::default(),
            learners: LearnerDefaults::default(),
        }
    }
}

impl MatrixConfig {
    pub fn validate(&self) -> Result<(), MatrixError> {
        if self.folds < 2 {
            return Err(MatrixError::Config(format!("folds must be at least 2, got {}", self.folds)));
        }
        if !self.encoding.one_hot && !self.encoding.integer_codes {
            return Err(MatrixError::Config("at least one categorical encoding must be enabled".into()));
        }
        self.boruta.validate().map_err(|e| MatrixError::Config(e.to_string()))?;
        for kind in LearnerKind::ALL {
            self.learners.spec(kind, 0).validate().map_err(|e| MatrixError::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub provenance: Provenance,
    #[serde(with = "cell_map")]
    pub cells: BTreeMap<CellKey, RunResult>,
    pub failures: Vec<CellFailure>,
}

mod cell_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<CellKey, RunResult>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<CellResult> = map.iter().map(|(k, r)| CellResult { key: *k, result: r.clone() }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<CellKey, RunResult>, D::Error> {
        let v: Vec<CellResult> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|c| (c.key, c.result)).collect())
    }
}

impl ResultsTable {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && CellKey::all().iter().all(|k| self.cells.contains_key(k))
    }

    pub fn get(&self, key: &CellKey) -> Option<&RunResult> {
        self.cells.get(key)
    }

    pub fn missing(&self) -> Vec<CellKey> {
        CellKey::all().into_iter().filter(|k| !self.cells.contains_key(k)).collect()
    }
}

/// Boruta output for one (combination, class level).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub combo: ComboId,
    pub class_level: ClassLevel,
    pub on_full_data: bool,
    pub outcome: Result<Vec<FoldSelection>, String>,
}

#[derive(Debug, Clone)]
pub struct MatrixOutput {
    pub table: ResultsTable,
    pub selections: Vec<SelectionRecord>,
}

pub fn run_matrix(records: &[BehaviorRecord], cfg: &MatrixConfig) -> Result<MatrixOutput, MatrixError> {
    run_cells(records, cfg, &CellKey::all())
}

/// Runs the given cells. Cell-level failures are recorded, not returned.
pub fn run_cells(records: &[BehaviorRecord], cfg: &MatrixConfig, keys: &[CellKey]) -> Result<MatrixOutput, MatrixError> {
    cfg.validate()?;
    let mut pairs: Vec<(ComboId, ClassLevel)> = keys.iter().map(|k| (k.combo, k.class_level)).collect();
    pairs.sort_unstable();
    pairs.dedup();

    let mut levels: Vec<ClassLevel> = pairs.iter().map(|p| p.1).collect();
    levels.sort_unstable();
    levels.dedup();

    let matrices: BTreeMap<(ComboId, ClassLevel), FeatureMatrix> = pairs
        .par_iter()
        .map(|&(c, l)| Ok(((c, l), build_combination(records, c, l, cfg.encoding)?)))
        .collect::<Result<_, MatrixError>>()?;

    // Labels do not depend on the combination, so one plan serves a level.
    let mut plans: BTreeMap<ClassLevel, FoldPlan> = BTreeMap::new();
    for &level in &levels {
        let m = matrices.iter().find(|((_, l), _)| *l == level).map(|(_, m)| m).expect("level has a matrix");
        let seed = hash_seed(cfg.seed, &format!("folds_class{}", level.n_classes()));
        plans.insert(level, kfold_plan(m, cfg.folds, seed)?);
    }

    let need_selection: Vec<(ComboId, ClassLevel)> = pairs
        .iter()
        .copied()
        .filter(|&(c, l)| {
            keys.iter().any(|k| k.combo == c && k.class_level == l && k.feature_selection == FeatureSelection::Boruta)
        })
        .collect();
    let selections: Vec<SelectionRecord> = need_selection
        .par_iter()
        .map(|&(combo, level)| {
            let m = &matrices[&(combo, level)];
            let bcfg = BorutaConfig {
                seed: hash_seed(cfg.seed, &format!("boruta_{combo}_class{}", level.n_classes())),
                ..cfg.boruta
            };
            log::info!("boruta {combo} class {}", level.n_classes());
            let outcome = select_for(m, &plans[&level], &bcfg, cfg).map_err(|e| e.to_string());
            SelectionRecord { combo, class_level: level, on_full_data: cfg.select_on_full, outcome }
        })
        .collect();

    let results: Vec<(CellKey, Result<RunResult, String>)> = keys
        .par_iter()
        .map(|key| {
            let m = &matrices[&(key.combo, key.class_level)];
            let plan = &plans[&key.class_level];
            let spec = cfg.learners.spec(key.learner, key.seed(cfg.seed));
            let outcome = match key.feature_selection {
                FeatureSelection::None => cross_validate(&spec, m, plan, None).map_err(|e| e.to_string()),
                FeatureSelection::Boruta => {
                    let rec = selections
                        .iter()
                        .find(|s| s.combo == key.combo && s.class_level == key.class_level)
                        .expect("selection computed for every boruta pair");
                    match &rec.outcome {
                        Ok(sel) => cross_validate(&spec, m, plan, Some(sel)).map_err(|e| e.to_string()),
                        Err(e) => Err(format!("feature selection failed: {e}")),
                    }
                }
            };
            log::info!("cell {key} done");
            (*key, outcome)
        })
        .collect();

    let mut cells = BTreeMap::new();
    let mut failures = Vec::new();
    for (key, outcome) in results {
        match outcome {
            Ok(r) => {
                cells.insert(key, r);
            }
            Err(error) => {
                log::warn!("cell {key} failed: {error}");
                failures.push(CellFailure { key, error });
            }
        }
    }
    let provenance = Provenance { seed: cfg.seed, config_hash: cfg.hash() };
    Ok(MatrixOutput { table: ResultsTable { provenance, cells, failures }, selections })
}

fn select_for(
    m: &FeatureMatrix,
    plan: &FoldPlan,
    bcfg: &BorutaConfig,
    cfg: &MatrixConfig,
) -> Result<Vec<FoldSelection>, EvalError> {
    if !cfg.select_on_full {
        return boruta_fold_selections(m, plan, bcfg, cfg.keep_tentative);
    }
    let report = boruta_select(m, bcfg).map_err(|source| EvalError::Selection { fold: 0, source })?;
    let sel = select_columns(0, report, cfg.keep_tentative)?;
    Ok((0..plan.k).map(|fold| FoldSelection { fold, ..sel.clone() }).collect())
}

/// Dimensions a summary can group by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Env,
    FeatureSelection,
    Learner,
    ClassLevel,
    Combo,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "env" => Ok(GroupBy::Env),
            "feature_selection" | "fs" => Ok(GroupBy::FeatureSelection),
            "learner" => Ok(GroupBy::Learner),
            "class_level" | "class" => Ok(GroupBy::ClassLevel),
            "combo" => Ok(GroupBy::Combo),
            other => Err(format!("unknown grouping `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: Vec<(GroupBy, String)>,
    pub n: usize,
    /// Mean of the cells' mean accuracies, in percent.
    pub mean: f64,
    pub sd: Option<f64>,
}

fn group_value(row: &IndexRow, g: GroupBy) -> String {
    match g {
        GroupBy::Env => if row.env { "with_env" } else { "without_env" }.to_string(),
        GroupBy::FeatureSelection => row.feature_selection.as_str().to_string(),
        GroupBy::Learner => row.learner.to_string(),
        GroupBy::ClassLevel => row.class_level.n_classes().to_string(),
        GroupBy::Combo => row.combo.to_string(),
    }
}

/// Mean and sample SD of cell mean accuracies (percent) per group.
pub fn summarize(rows: &[IndexRow], grouping: &[GroupBy]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
    for r in rows {
        let key = grouping.iter().map(|&g| group_value(r, g)).collect();
        groups.entry(key).or_default().push(100.0 * r.accuracy);
    }
    groups
        .into_iter()
        .filter_map(|(key, vals)| match aggregate_mean_sd(&vals) {
            Ok(ms) => Some(SummaryRow {
                group: grouping.iter().copied().zip(key).collect(),
                n: ms.n,
                mean: ms.mean,
                sd: ms.sd,
            }),
            Err(e) => {
                log::warn!("group {key:?} excluded: {e}");
                None
            }
        })
        .collect()
}

/// One line of `index.csv`. Metric columns are fold means; `sd_accuracy` is
/// the fold SD of accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRow {
    pub combo: ComboId,
    pub env: bool,
    pub feature_selection: FeatureSelection,
    pub learner: LearnerKind,
    pub class_level: ClassLevel,
    pub accuracy: f64,
    pub sd_accuracy: f64,
    pub precision: f64,
    pub recall_sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

impl IndexRow {
    pub fn key(&self) -> CellKey {
        CellKey {
            combo: self.combo,
            feature_selection: self.feature_selection,
            learner: self.learner,
            class_level: self.class_level,
        }
    }
}

pub fn index_rows(table: &ResultsTable) -> Vec<IndexRow> {
    table
        .cells
        .iter()
        .map(|(k, r)| IndexRow {
            combo: k.combo,
            env: k.includes_env(),
            feature_selection: k.feature_selection,
            learner: k.learner,
            class_level: k.class_level,
            accuracy: r.mean.accuracy,
            sd_accuracy: r.sd.accuracy,
            precision: r.mean.precision,
            recall_sensitivity: r.mean.recall_sensitivity,
            specificity: r.mean.specificity,
            f1: r.mean.f1,
            auc: r.mean.auc,
        })
        .collect()
}

pub fn write_index<W: Write>(w: W, rows: &[IndexRow]) -> Result<(), MatrixError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_index(path: &Path) -> Result<Vec<IndexRow>, MatrixError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize().enumerate() {
        let row: IndexRow = rec?;
        if row.env != row.combo.includes_env() {
            return Err(MatrixError::Index { row: i + 1, reason: format!("env flag disagrees with combo {}", row.combo) });
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Writes `cells/<key>.json` per cell, `index.csv`, `failures.json` and
/// `provenance.json` under `dir`.
pub fn write_results(dir: &Path, table: &ResultsTable) -> Result<(), MatrixError> {
    let cells = dir.join("cells");
    fs::create_dir_all(&cells)?;
    for (key, result) in &table.cells {
        let doc = CellResult { key: *key, result: result.clone() };
        fs::write(cells.join(format!("{}.json", key.stem())), serde_json::to_vec_pretty(&doc)?)?;
    }
    let mut buf = Vec::new();
    write_index(&mut buf, &index_rows(table))?;
    fs::write(dir.join("index.csv"), buf)?;
    fs::write(dir.join("failures.json"), serde_json::to_vec_pretty(&table.failures)?)?;
    fs::write(dir.join("provenance.json"), serde_json::to_vec_pretty(&table.provenance)?)?;
    Ok(())
}

pub fn write_selections(dir: &Path, selections: &[SelectionRecord]) -> Result<(), MatrixError> {
    fs::create_dir_all(dir)?;
    for s in selections {
        let name = format!("{}_class{}.json", s.combo, s.class_level.n_classes());
        fs::write(dir.join(name), serde_json::to_vec_pretty(s)?)?;
    }
    Ok(())
}

/// The pooled design: Dataset (env) × Feature selection × Classifier × Class,
/// one observation per cell, replicated by behavior variant (major, minor,
/// both). Response is mean accuracy in percent.
pub fn factorial_design(rows: &[IndexRow]) -> Result<FactorialDesign, StatsError> {
    require_complete(rows)?;
    let mut d = FactorialDesign::experiment_grid();
    for r in rows {
        let cell = vec![
            usize::from(r.env),
            r.feature_selection.level(),
            r.learner.code() - 1,
            usize::from(r.class_level.code()) - 1,
        ];
        d.push(cell, r.combo.variant().index(), 100.0 * r.accuracy);
    }
    Ok(d)
}

fn require_complete(rows: &[IndexRow]) -> Result<(), StatsError> {
    let mut seen = std::collections::BTreeSet::new();
    for r in rows {
        if !seen.insert(r.key()) {
            return Err(StatsError::PartialTable(format!("duplicate cell {}", r.key())));
        }
    }
    let missing = CellKey::all().into_iter().filter(|k| !seen.contains(k)).count();
    if missing > 0 {
        return Err(StatsError::PartialTable(format!("{missing} of 144 cells missing")));
    }
    Ok(())
}

/// One one-way ANOVA with its Bonferroni comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyTest {
    pub scope: String,
    pub group_labels: Vec<String>,
    pub group_means: Vec<f64>,
    pub anova: OneWayAnova,
    pub posthoc: Posthoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub alpha: f64,
    /// Per class level: the six combinations compared, 8 cells each.
    pub within_class: Vec<FamilyTest>,
    /// Per combination: the three class levels compared, 8 cells each.
    pub between_class: Vec<FamilyTest>,
    pub factorial: AnovaTable,
    pub main_effects: Vec<MarginalPosthoc>,
    pub rendered: String,
}

fn family(scope: String, groups: Vec<(String, Vec<f64>)>, alpha: f64) -> Result<FamilyTest, StatsError> {
    let (labels, vals): (Vec<String>, Vec<Vec<f64>>) = groups.into_iter().unzip();
    let anova = one_way_anova(&vals)?;
    let posthoc = bonferroni_posthoc(&vals, alpha)?;
    let group_means = vals.iter().map(|g| g.iter().sum::<f64>() / g.len() as f64).collect();
    Ok(FamilyTest { scope, group_labels: labels, group_means, anova, posthoc })
}

/// Both analysis stages on a complete index. Accuracies enter in percent.
pub fn analyze(rows: &[IndexRow], alpha: f64) -> Result<AnalysisReport, StatsError> {
    require_complete(rows)?;
    let pct = |pred: &dyn Fn(&IndexRow) -> bool| -> Vec<f64> {
        rows.iter().filter(|r| pred(r)).map(|r| 100.0 * r.accuracy).collect()
    };
    let mut within_class = Vec::new();
    for level in ClassLevel::ALL {
        let groups = ComboId::ALL
            .iter()
            .map(|&c| (c.to_string(), pct(&|r| r.class_level == level && r.combo == c)))
            .collect();
        within_class.push(family(format!("class {}", level.n_classes()), groups, alpha)?);
    }
    let mut between_class = Vec::new();
    for combo in ComboId::ALL {
        let groups = ClassLevel::ALL
            .iter()
            .map(|&l| (format!("class {}", l.n_classes()), pct(&|r| r.combo == combo && r.class_level == l)))
            .collect();
        between_class.push(family(format!("combo {combo}"), groups, alpha)?);
    }
    let design = factorial_design(rows)?;
    let factorial = factorial_anova(&design)?;
    let main_effects = (0..design.factor_levels.len())
        .map(|f| marginal_posthoc(&design, &factorial, f, alpha))
        .collect::<Result<_, _>>()?;
    let rendered = render_table(
        &factorial,
        "Three-way ANOVA of mean classification accuracy (%) by dataset, feature selection, classifier and class\n\
         (fitted as a four-factor full factorial; replicates are the behavior-category variants)",
    );
    Ok(AnalysisReport { alpha, within_class, between_class, factorial, main_effects, rendered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::MetricSet;

    #[test]
    fn grid_has_144_distinct_keys() {
        let keys = CellKey::all();
        assert_eq!(keys.len(), 144);
        let set: std::collections::BTreeSet<_> = keys.iter().collect();
        assert_eq!(set.len(), 144);
        let stems: std::collections::BTreeSet<_> = keys.iter().map(CellKey::stem).collect();
        assert_eq!(stems.len(), 144);
        assert_eq!(keys.iter().filter(|k| k.includes_env()).count(), 72);
    }

    #[test]
    fn cell_seeds_are_distinct_and_stable() {
        let seeds: std::collections::BTreeSet<u64> = CellKey::all().iter().map(|k| k.seed(5)).collect();
        assert_eq!(seeds.len(), 144);
        let k = CellKey::all()[17];
        assert_eq!(k.seed(5), k.seed(5));
        assert_ne!(k.seed(5), k.seed(6));
    }

    fn row(key: CellKey, acc: f64) -> IndexRow {
        IndexRow {
            combo: key.combo,
            env: key.includes_env(),
            feature_selection: key.feature_selection,
            learner: key.learner,
            class_level: key.class_level,
            accuracy: acc,
            sd_accuracy: 0.01,
            precision: 0.5,
            recall_sensitivity: 0.5,
            specificity: 0.5,
            f1: 0.5,
            auc: Some(0.6),
        }
    }

    fn fake_rows() -> Vec<IndexRow> {
        CellKey::all()
            .into_iter()
            .enumerate()
            .map(|(i, k)| {
                let base = if k.includes_env() { 0.7 } else { 0.6 };
                row(k, base + 0.01 * ((i * 7919) % 13) as f64 / 13.0)
            })
            .collect()
    }

    #[test]
    fn summary_partition_consistency() {
        let rows = fake_rows();
        let all = summarize(&rows, &[]);
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].n, 144);
        for g in [GroupBy::Env, GroupBy::Learner, GroupBy::ClassLevel, GroupBy::Combo, GroupBy::FeatureSelection] {
            let parts = summarize(&rows, &[g]);
            let weighted: f64 = parts.iter().map(|p| p.mean * p.n as f64).sum::<f64>() / 144.0;
            assert!((weighted - all[0].mean).abs() < 1e-9);
        }
        let by_env = summarize(&rows, &[GroupBy::Env]);
        assert_eq!(by_env.len(), 2);
        assert!(by_env[0].mean > by_env[1].mean);
    }

    #[test]
    fn design_from_index() {
        let d = factorial_design(&fake_rows()).unwrap();
        assert_eq!(d.observations.len(), 144);
        let t = factorial_anova(&d).unwrap();
        assert_eq!(t.df_error, 96);
        assert!(t.row("Dataset").unwrap().p < 0.001);
    }

    #[test]
    fn partial_index_is_refused() {
        let mut rows = fake_rows();
        rows.pop();
        assert!(matches!(factorial_design(&rows), Err(StatsError::PartialTable(_))));
        assert!(matches!(analyze(&rows, 0.05), Err(StatsError::PartialTable(_))));
        let mut dup = fake_rows();
        dup[0] = dup[1].clone();
        assert!(matches!(factorial_design(&dup), Err(StatsError::PartialTable(_))));
    }

    #[test]
    fn analysis_families() {
        let rep = analyze(&fake_rows(), 0.05).unwrap();
        assert_eq!(rep.within_class.len(), 3);
        assert_eq!(rep.between_class.len(), 6);
        for f in &rep.within_class {
            assert_eq!(f.group_labels.len(), 6);
            assert_eq!((f.anova.df_between, f.anova.df_within), (5, 42));
            assert_eq!(f.posthoc.m, 15);
        }
        assert_eq!(rep.main_effects.len(), 4);
        assert_eq!(rep.main_effects[2].posthoc.m, 6);
        assert!(rep.rendered.contains("Error"));
    }

    #[test]
    fn index_csv_round_trip() {
        let rows = fake_rows();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.csv");
        let mut buf = Vec::new();
        write_index(&mut buf, &rows).unwrap();
        fs::write(&path, &buf).unwrap();
        assert_eq!(read_index(&path).unwrap(), rows);
        let header = String::from_utf8(buf).unwrap().lines().next().unwrap().to_string();
        assert_eq!(
            header,
            "combo,env,feature_selection,learner,class_level,accuracy,sd_accuracy,precision,recall_sensitivity,specificity,f1,auc"
        );
    }

    #[test]
    fn env_flag_mismatch_is_rejected() {
        let mut rows = fake_rows();
        rows[0].env = !rows[0].env;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.csv");
        let mut buf = Vec::new();
        write_index(&mut buf, &rows).unwrap();
        fs::write(&path, &buf).unwrap();
        assert!(matches!(read_index(&path), Err(MatrixError::Index { row: 1, .. })));
    }

    #[test]
    fn invalid_config_fails_fast() {
        let bad = MatrixConfig { boruta: BorutaConfig { alpha: 1.5, ..Default::default() }, ..Default::default() };
        assert!(matches!(run_matrix(&[], &bad), Err(MatrixError::Config(_))));
        let bad = MatrixConfig { folds: 1, ..Default::default() };
        assert!(matches!(bad.validate(), Err(MatrixError::Config(_))));
    }

    #[test]
    fn config_hash_tracks_content() {
        let a = MatrixConfig::default();
        let b = MatrixConfig { seed: 1, ..Default::default() };
        assert_eq!(a.hash(), MatrixConfig::default().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn table_json_round_trip() {
        let k = CellKey::all()[3];
        let m = MetricSet { accuracy: 0.5, precision: 0.5, recall_sensitivity: 0.5, specificity: 0.5, f1: 0.5, auc: None };
        let r = RunResult {
            learner: k.learner,
            spec: LearnerSpec::default_for(k.learner, 1),
            n_rows: 10,
            n_classes: 2,
            folds: Vec::new(),
            mean: m,
            sd: m,
            confusion: crate::eval::ConfusionMatrix::zeros(2),
        };
        let t = ResultsTable {
            provenance: Provenance { seed: 1, config_hash: "x".into() },
            cells: [(k, r)].into_iter().collect(),
            failures: vec![CellFailure { key: CellKey::all()[4], error: "boom".into() }],
        };
        let back: ResultsTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert!(!t.is_complete());
        assert_eq!(t.missing().len(), 143);
    }
}
