//! Command implementations behind the `behavior-bench` binary, and the
//! end-to-end `reproduce` pipeline.
//!
//! Exit codes: 0 success, 2 configuration error, 3 partial grid, 4 I/O error.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use std::str::FromStr;

use crate::agreement::{cohen_kappa, interpret_kappa, mean_pairwise_kappa, AgreementError, KappaBand, RatingPair};
use crate::boruta::{boruta_select, BorutaConfig, BorutaError, BorutaReport};
use crate::config::{ConfigError, RunConfig};
use crate::datamodel::{
    build_combination, read_records, write_records, BehaviorRecord, ClassLevel, ComboId, DataError, FeatureMatrix,
    LabelMapping,
};
use crate::eval::{cross_validate, kfold_plan, EvalError, RunResult};
use crate::impute::{impute_records, ImputationReport, ImputeError};
use crate::learners::{self, LearnerError, LearnerKind, TrainedModel};
use crate::matrix::{
    analyze, index_rows, read_index, run_matrix, summarize, write_results, write_selections, AnalysisReport, GroupBy,
    MatrixError, ResultsTable,
};
use crate::stats::StatsError;
use crate::synth::{generate, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("grid incomplete: {failed} failed, {missing} missing; partial artifacts kept in {dir}")]
    PartialGrid { failed: usize, missing: usize, dir: PathBuf },
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Impute(#[from] ImputeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Boruta(#[from] BorutaError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) => EXIT_IO,
            CliError::Config(_) | CliError::Usage(_) => EXIT_CONFIG,
            CliError::PartialGrid { .. } | CliError::Stats(StatsError::PartialTable(_)) => EXIT_PARTIAL,
            CliError::Io { .. } | CliError::Json(_) => EXIT_IO,
            CliError::Data(DataError::Io(_) | DataError::Csv(_)) => EXIT_IO,
            CliError::Matrix(MatrixError::Config(_)) => EXIT_CONFIG,
            CliError::Matrix(MatrixError::Io(_) | MatrixError::Csv(_) | MatrixError::Json(_)) => EXIT_IO,
            CliError::Learner(LearnerError::Io(_) | LearnerError::Json(_)) => EXIT_IO,
            CliError::Learner(LearnerError::InvalidParam(_)) => EXIT_CONFIG,
            CliError::Synth(SynthError::Config(_)) => EXIT_CONFIG,
            CliError::Boruta(BorutaError::InvalidConfig(_)) => EXIT_CONFIG,
            _ => 1,
        }
    }
}

pub fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

/// Provenance written next to the artifacts of a `reproduce` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Full key/value snapshot; feeding it back reproduces the run.
    pub config: Vec<(String, String)>,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    /// SHA-256 per artifact, keyed by path relative to the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub complete: bool,
    pub created_utc: String,
}

impl RunManifest {
    pub fn config_text(&self) -> String {
        self.config.iter().map(|(k, v)| format!("{k} = \"{v}\"\n")).collect()
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Loads a run config from a flat config file or from a previous run's
/// `manifest.json`.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))?;
        let manifest: RunManifest = serde_json::from_str(&text)?;
        return Ok(RunConfig::from_text(&manifest.config_text())?);
    }
    Ok(RunConfig::from_file(path)?)
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(io_err(format!("hashing {}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn walk(dir: &Path, base: &Path, out: &mut BTreeMap<String, String>) -> Result<(), CliError> {
    let mut entries: Vec<_> = fs::read_dir(dir)
        .map_err(io_err(format!("listing {}", dir.display())))?
        .collect::<Result<_, _>>()
        .map_err(io_err(format!("listing {}", dir.display())))?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            walk(&path, base, out)?;
        } else {
            let rel = path.strip_prefix(base).expect("under base").to_string_lossy().replace('\\', "/");
            if rel != MANIFEST_FILE {
                out.insert(rel, sha256_file(&path)?);
            }
        }
    }
    Ok(())
}

/// Hashes every file under `dir` except the manifest itself.
pub fn artifact_hashes(dir: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out)?;
    Ok(out)
}

fn now_utc() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    chrono::DateTime::from_timestamp(secs, 0).map(|t| t.to_rfc3339()).unwrap_or_default()
}

/// Relabels records through a mapping file (class7 stays as coded).
pub fn apply_mapping(records: &mut [BehaviorRecord], mapping: &LabelMapping) {
    for r in records {
        r.labels = mapping.labels_for(r.labels.class7);
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let bytes = serde_json::to_vec_pretty(value)?;
    fs::write(path, bytes).map_err(io_err(format!("writing {}", path.display())))
}

#[derive(Debug, Clone)]
pub struct ReproduceOutcome {
    pub table: ResultsTable,
    pub manifest: RunManifest,
}

/// synth → impute → per-fold Boruta + 144-cell grid → two-stage analysis.
///
/// Layout of `out`: `data.csv`, `data_imputed.csv`, `imputation.json`,
/// `boruta/`, `results/cells/*.json`, `results/index.csv`, `summary.csv`,
/// `anova.json`, `anova.txt`, `manifest.json`. On a partial grid everything
/// computed so far is kept, the manifest is written, and `PartialGrid` is
/// returned.
pub fn reproduce(cfg: &RunConfig, out: &Path) -> Result<ReproduceOutcome, CliError> {
    cfg.validate()?;
    let mapping = match &cfg.label_mapping {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(io_err(format!("reading {}", p.display())))?;
            Some(LabelMapping::parse(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?)
        }
        None => None,
    };
    fs::create_dir_all(out).map_err(io_err(format!("creating {}", out.display())))?;

    log::info!("generating {} synthetic records", cfg.synth.n_records);
    let mut records = generate(&cfg.synth)?;
    if let Some(m) = &mapping {
        apply_mapping(&mut records, m);
    }
    write_records(&out.join("data.csv"), &records)?;

    log::info!("imputing with k = {}", cfg.knn_k);
    let (imputed, report) = impute_records(&records, cfg.knn_k)?;
    write_records(&out.join("data_imputed.csv"), &imputed)?;
    write_json(&out.join("imputation.json"), &report)?;

    log::info!("running the experiment grid");
    let output = run_matrix(&imputed, &cfg.matrix)?;
    write_selections(&out.join("boruta"), &output.selections)?;
    write_results(&out.join("results"), &output.table)?;

    let complete = output.table.is_complete();
    if complete {
        let rows = index_rows(&output.table);
        let analysis = analyze(&rows, cfg.stats_alpha)?;
        write_json(&out.join("anova.json"), &analysis)?;
        fs::write(out.join("anova.txt"), &analysis.rendered).map_err(io_err("writing anova.txt"))?;
        write_summary(
            &out.join("summary.csv"),
            &rows,
            &[GroupBy::ClassLevel, GroupBy::Learner, GroupBy::Env, GroupBy::FeatureSelection],
        )?;
    }

    let mut seeds = BTreeMap::new();
    seeds.insert("master".to_string(), cfg.matrix.seed);
    seeds.insert("synth".to_string(), cfg.synth.seed);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        config_hash: hex::encode(Sha256::digest(cfg.to_text().as_bytes())),
        seeds,
        artifacts: artifact_hashes(out)?,
        complete,
        created_utc: now_utc(),
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;

    if !complete {
        return Err(CliError::PartialGrid {
            failed: output.table.failures.len(),
            missing: output.table.missing().len(),
            dir: out.to_path_buf(),
        });
    }
    Ok(ReproduceOutcome { table: output.table, manifest })
}

pub fn write_summary(path: &Path, rows: &[crate::matrix::IndexRow], grouping: &[GroupBy]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| CliError::Io {
        context: format!("writing {}", path.display()),
        source: e.into(),
    })?;
    let mut header: Vec<String> = grouping.iter().map(|g| format!("{g:?}").to_lowercase()).collect();
    header.extend(["n".into(), "mean_accuracy_pct".into(), "sd".into()]);
    let csv_io = |e: csv::Error| CliError::Io { context: format!("writing {}", path.display()), source: e.into() };
    wtr.write_record(&header).map_err(csv_io)?;
    for s in summarize(rows, grouping) {
        let mut rec: Vec<String> = s.group.iter().map(|(_, v)| v.clone()).collect();
        rec.push(s.n.to_string());
        rec.push(format!("{:.4}", s.mean));
        rec.push(s.sd.map(|v| format!("{v:.4}")).unwrap_or_default());
        wtr.write_record(&rec).map_err(csv_io)?;
    }
    wtr.flush().map_err(io_err(format!("writing {}", path.display())))?;
    Ok(())
}

/// Reads a dataset CSV, mapping failures to exit-code-aware errors.
pub fn load_records(path: &Path) -> Result<Vec<BehaviorRecord>, CliError> {
    if !path.exists() {
        return Err(CliError::Io {
            context: format!("reading {}", path.display()),
            source: io::Error::new(io::ErrorKind::NotFound, "no such file"),
        });
    }
    Ok(read_records(path)?)
}

/// Writes the synthetic dataset; returns the record count.
pub fn cmd_synth(cfg: &RunConfig, out: &Path) -> Result<usize, CliError> {
    cfg.validate()?;
    let records = generate(&cfg.synth)?;
    write_records(out, &records)?;
    Ok(records.len())
}

/// kNN imputation of a dataset file; the report goes next to the output as JSON.
pub fn cmd_impute(input: &Path, out: &Path, k: usize) -> Result<ImputationReport, CliError> {
    if k == 0 {
        return Err(ConfigError::Invalid("knn_k must be at least 1".into()).into());
    }
    let records = load_records(input)?;
    let (imputed, report) = impute_records(&records, k)?;
    write_records(out, &imputed)?;
    write_json(&out.with_extension("report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub raters: Vec<String>,
    pub items: usize,
    /// Cohen's kappa for two raters, mean pairwise kappa otherwise.
    pub kappa: f64,
    pub band: KappaBand,
}

/// Agreement across the rating columns of a CSV file (one column per rater).
pub fn cmd_kappa(input: &Path) -> Result<KappaSummary, CliError> {
    let text = fs::read_to_string(input).map_err(io_err(format!("reading {}", input.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let bad = |e: csv::Error| CliError::Usage(format!("{}: {e}", input.display()));
    let raters: Vec<String> = rdr.headers().map_err(bad)?.iter().map(str::to_string).collect();
    if raters.len() < 2 {
        return Err(CliError::Usage(format!("{} needs at least two rater columns", input.display())));
    }
    let mut columns = vec![Vec::new(); raters.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(bad)?;
        for (c, v) in columns.iter_mut().zip(rec.iter()) {
            c.push(v.to_string());
        }
    }
    let items = columns[0].len();
    let kappa = if raters.len() == 2 {
        let pair = RatingPair::new(columns[0].clone(), columns[1].clone())?;
        match cohen_kappa(&pair) {
            Ok(k) => k,
            Err(e) => e.defined_kappa().ok_or(e)?,
        }
    } else {
        mean_pairwise_kappa(&columns)?
    };
    Ok(KappaSummary { raters, items, kappa, band: interpret_kappa(kappa) })
}

fn parse_combo(s: &str) -> Result<ComboId, CliError> {
    ComboId::parse(s).ok_or_else(|| CliError::Usage(format!("unknown combination `{s}` (expected a to f)")))
}

fn parse_level(n: usize) -> Result<ClassLevel, CliError> {
    ClassLevel::from_n(n).ok_or_else(|| CliError::Usage(format!("unknown class level {n} (expected 2, 3 or 7)")))
}

fn matrix_for(data: &Path, cfg: &RunConfig, combo: &str, classes: usize) -> Result<FeatureMatrix, CliError> {
    let records = load_records(data)?;
    Ok(build_combination(&records, parse_combo(combo)?, parse_level(classes)?, cfg.matrix.encoding)?)
}

/// Boruta on every row of one combination and class level.
pub fn cmd_select(data: &Path, cfg: &RunConfig, combo: &str, classes: usize) -> Result<BorutaReport, CliError> {
    cfg.validate()?;
    let m = matrix_for(data, cfg, combo, classes)?;
    let bcfg = BorutaConfig { seed: cfg.matrix.seed, ..cfg.matrix.boruta };
    Ok(boruta_select(&m, &bcfg)?)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TrainedModel,
    pub cv: Option<RunResult>,
}

/// Fits one learner on all rows; with `cv`, also reports k-fold estimates.
pub fn cmd_train(
    data: &Path,
    cfg: &RunConfig,
    combo: &str,
    classes: usize,
    learner: &str,
    cv: bool,
) -> Result<TrainOutcome, CliError> {
    cfg.validate()?;
    let kind = LearnerKind::from_str(learner).map_err(|e| CliError::Usage(e.to_string()))?;
    let m = matrix_for(data, cfg, combo, classes)?;
    let spec = cfg.matrix.learners.spec(kind, cfg.matrix.seed);
    let cv = if cv {
        let plan = kfold_plan(&m, cfg.matrix.folds, cfg.matrix.seed)?;
        Some(cross_validate(&spec, &m, &plan, None)?)
    } else {
        None
    };
    Ok(TrainOutcome { model: learners::fit(&spec, &m)?, cv })
}

/// Runs the grid on an existing (imputed) dataset and writes `results/` and
/// `boruta/` under `out`.
pub fn cmd_matrix(data: &Path, cfg: &RunConfig, out: &Path) -> Result<ResultsTable, CliError> {
    cfg.validate()?;
    let records = load_records(data)?;
    let output = run_matrix(&records, &cfg.matrix)?;
    write_selections(&out.join("boruta"), &output.selections)?;
    write_results(&out.join("results"), &output.table)?;
    if !output.table.is_complete() {
        return Err(CliError::PartialGrid {
            failed: output.table.failures.len(),
            missing: output.table.missing().len(),
            dir: out.to_path_buf(),
        });
    }
    Ok(output.table)
}

/// Two-stage analysis of a results index. Refuses partial tables.
pub fn cmd_stats(index: &Path, alpha: f64) -> Result<AnalysisReport, CliError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConfigError::Invalid(format!("alpha must be in (0, 1), got {alpha}")).into());
    }
    if !index.exists() {
        return Err(CliError::Io {
            context: format!("reading {}", index.display()),
            source: io::Error::new(io::ErrorKind::NotFound, "no such file"),
        });
    }
    let rows = read_index(index)?;
    Ok(analyze(&rows, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config(ConfigError::UnknownKey("x".into())).exit_code(), EXIT_CONFIG);
        assert_eq!(
            CliError::PartialGrid { failed: 1, missing: 0, dir: PathBuf::from("x") }.exit_code(),
            EXIT_PARTIAL
        );
        assert_eq!(
            CliError::Io { context: "x".into(), source: io::Error::other("boom") }.exit_code(),
            EXIT_IO
        );
        assert_eq!(CliError::Stats(StatsError::PartialTable("x".into())).exit_code(), EXIT_PARTIAL);
    }

    #[test]
    fn invalid_alpha_fails_before_any_output() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let cfg = RunConfig::from_text("boruta_alpha = 1.5").unwrap();
        let err = reproduce(&cfg, &out).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
        assert!(!out.exists());
    }

    #[test]
    fn manifest_config_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_text("seed = 11\nfolds = 4").unwrap();
        let m = RunManifest {
            tool_version: "0".into(),
            config: cfg.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            config_hash: String::new(),
            seeds: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            complete: true,
            created_utc: String::new(),
        };
        let path = dir.path().join("manifest.json");
        fs::write(&path, serde_json::to_vec(&m).unwrap()).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
    }

    #[test]
    fn hashes_skip_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/a.txt"), b"abc").unwrap();
        fs::write(dir.path().join(MANIFEST_FILE), b"{}").unwrap();
        let h = artifact_hashes(dir.path()).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h["sub/a.txt"], "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
