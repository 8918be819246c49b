//! Missing-value filling for environment data.
//!
//! Two passes: a missing cell is first copied from the temporally nearest
//! observed value of the same column within the same session; whatever is
//! still missing is filled by k-nearest-neighbour mean imputation.
//!
//! k-NN distance is Euclidean over z-scored columns, using only dimensions
//! observed in both rows and scaled by `total / shared` dimensions. Among
//! equidistant neighbours the lower row index wins.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{BehaviorRecord, EnvCategorical, EnvNumeric};

pub const DEFAULT_K: usize = 14;
pub const DISTANCE_ID: &str = "euclidean-zscore-partial-scaled";

#[derive(Debug, Error)]
pub enum ImputeError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("column `{column}` has {observed} observed rows, fewer than k = {k}")]
    InsufficientNeighbors { column: String, observed: usize, k: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("row {0} has a different width from row 0")]
    Ragged(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnImputation {
    pub column: String,
    pub missing_before: usize,
    pub filled_by_session: usize,
    pub filled_by_knn: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationReport {
    pub columns: Vec<ColumnImputation>,
    pub k: usize,
    pub distance: String,
}

impl ImputationReport {
    pub fn total_imputed(&self) -> usize {
        self.columns.iter().map(|c| c.filled_by_session + c.filled_by_knn).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.columns.iter().all(|c| c.missing_before == c.filled_by_session + c.filled_by_knn)
    }
}

/// Copies the temporally nearest observed same-session value into missing
/// cells; ties go to the earlier observation. Only originally observed
/// values are copied.
pub fn fill_within_session(records: &[BehaviorRecord]) -> Vec<BehaviorRecord> {
    fill_within_session_counted(records).0
}

fn fill_within_session_counted(records: &[BehaviorRecord]) -> (Vec<BehaviorRecord>, HashMap<&'static str, usize>) {
    let mut out = records.to_vec();
    let mut counts: HashMap<&'static str, usize> = HashMap::new();
    let mut sessions: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        sessions.entry((r.child_id, r.session_id)).or_default().push(i);
    }
    for members in sessions.values() {
        let mut ordered = members.clone();
        ordered.sort_by_key(|&i| (records[i].env.stamp.epoch_seconds(), i));
        let times: Vec<i64> = ordered.iter().map(|&i| records[i].env.stamp.epoch_seconds()).collect();

        // position in `ordered` of the nearest observed donor for position `p`
        let nearest = |p: usize, observed: &dyn Fn(usize) -> bool| -> Option<usize> {
            (0..ordered.len())
                .filter(|&q| q != p && observed(ordered[q]))
                .min_by_key(|&q| ((times[q] - times[p]).abs(), times[q], q))
        };

        for col in EnvNumeric::all() {
            for p in 0..ordered.len() {
                let i = ordered[p];
                if records[i].env.get_numeric(col).is_some() {
                    continue;
                }
                if let Some(q) = nearest(p, &|j| records[j].env.get_numeric(col).is_some()) {
                    out[i].env.set_numeric(col, records[ordered[q]].env.get_numeric(col));
                    *counts.entry(col.name()).or_default() += 1;
                }
            }
        }
        for col in EnvCategorical::ALL {
            for p in 0..ordered.len() {
                let i = ordered[p];
                if records[i].env.get_categorical(col).is_some() {
                    continue;
                }
                if let Some(q) = nearest(p, &|j| records[j].env.get_categorical(col).is_some()) {
                    out[i]
                        .env
                        .set_categorical(col, records[ordered[q]].env.get_categorical(col).map(str::to_string));
                    *counts.entry(col.name()).or_default() += 1;
                }
            }
        }
    }
    (out, counts)
}

/// Per-column z-scoring parameters over observed values.
fn standardize(data: &[Vec<Option<f64>>], p: usize) -> Vec<Vec<Option<f64>>> {
    let mut out = data.to_vec();
    for j in 0..p {
        let observed: Vec<f64> = data.iter().filter_map(|r| r[j]).collect();
        if observed.is_empty() {
            continue;
        }
        let n = observed.len() as f64;
        let mean = observed.iter().sum::<f64>() / n;
        let sd = (observed.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        for row in out.iter_mut() {
            if let Some(v) = row[j] {
                row[j] = Some(if sd > 0.0 { (v - mean) / sd } else { 0.0 });
            }
        }
    }
    out
}

/// Partial-observation distance between two standardized rows.
pub fn partial_distance(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let mut shared = 0usize;
    let mut sum = 0.0;
    for (x, y) in a.iter().zip(b) {
        if let (Some(x), Some(y)) = (x, y) {
            shared += 1;
            sum += (x - y) * (x - y);
        }
    }
    if shared == 0 {
        return f64::INFINITY;
    }
    (a.len() as f64 / shared as f64 * sum).sqrt()
}

/// Neighbour ordering for each row flagged in `need`: other row indices
/// sorted by (distance, index). Unflagged rows get an empty list.
fn neighbour_orders(data: &[Vec<Option<f64>>], p: usize, need: &[bool]) -> Vec<Vec<usize>> {
    let z = standardize(data, p);
    let n = data.len();
    (0..n)
        .map(|i| {
            if !need[i] {
                return Vec::new();
            }
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&r| r != i).map(|r| (partial_distance(&z[i], &z[r]), r)).collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().map(|(_, r)| r).collect()
        })
        .collect()
}

fn check_shape(data: &[Vec<Option<f64>>], k: usize) -> Result<usize, ImputeError> {
    if k == 0 {
        return Err(ImputeError::InvalidK);
    }
    let p = data.first().ok_or(ImputeError::EmptyInput)?.len();
    if let Some(bad) = data.iter().position(|r| r.len() != p) {
        return Err(ImputeError::Ragged(bad));
    }
    Ok(p)
}

/// Fills every missing cell with the mean of that column over the `k`
/// nearest rows that observe it. Returns the completed matrix and the
/// number of cells filled per column.
pub fn knn_impute(data: &[Vec<Option<f64>>], k: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>), ImputeError> {
    let p = check_shape(data, k)?;
    let names: Vec<String> = (0..p).map(|j| format!("column {j}")).collect();
    knn_impute_named(data, k, &names)
}

fn knn_impute_named(
    data: &[Vec<Option<f64>>],
    k: usize,
    names: &[String],
) -> Result<(Vec<Vec<f64>>, Vec<usize>), ImputeError> {
    let p = check_shape(data, k)?;
    let mut filled = vec![0usize; p];
    for j in 0..p {
        let observed = data.iter().filter(|r| r[j].is_some()).count();
        if observed < k {
            return Err(ImputeError::InsufficientNeighbors { column: names[j].clone(), observed, k });
        }
    }
    let need: Vec<bool> = data.iter().map(|r| r.iter().any(Option::is_none)).collect();
    let orders = neighbour_orders(data, p, &need);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(data.len());
    for (i, row) in data.iter().enumerate() {
        let mut completed = Vec::with_capacity(p);
        for j in 0..p {
            match row[j] {
                Some(v) => completed.push(v),
                None => {
                    let donors: Vec<f64> = orders[i].iter().filter_map(|&r| data[r][j]).take(k).collect();
                    completed.push(donors.iter().sum::<f64>() / donors.len() as f64);
                    filled[j] += 1;
                }
            }
        }
        out.push(completed);
    }
    Ok((out, filled))
}

/// Full two-pass imputation over environment fields of a record set.
/// Numeric columns get the k-NN mean; categorical columns get the most
/// frequent value among the same k neighbours (ties: lexicographically first).
pub fn impute_records(records: &[BehaviorRecord], k: usize) -> Result<(Vec<BehaviorRecord>, ImputationReport), ImputeError> {
    if records.is_empty() {
        return Err(ImputeError::EmptyInput);
    }
    if k == 0 {
        return Err(ImputeError::InvalidK);
    }
    let numeric = EnvNumeric::all();
    let missing_num: Vec<usize> =
        numeric.iter().map(|&c| records.iter().filter(|r| r.env.get_numeric(c).is_none()).count()).collect();
    let missing_cat: Vec<usize> = EnvCategorical::ALL
        .iter()
        .map(|&c| records.iter().filter(|r| r.env.get_categorical(c).is_none()).count())
        .collect();

    let (mut out, session_counts) = fill_within_session_counted(records);

    let data: Vec<Vec<Option<f64>>> =
        out.iter().map(|r| numeric.iter().map(|&c| r.env.get_numeric(c)).collect()).collect();
    let names: Vec<String> = numeric.iter().map(|c| c.name().to_string()).collect();
    let (completed, knn_num) = knn_impute_named(&data, k, &names)?;

    let mut knn_cat = vec![0usize; EnvCategorical::ALL.len()];
    let need: Vec<bool> = out
        .iter()
        .map(|r| EnvCategorical::ALL.iter().any(|&c| r.env.get_categorical(c).is_none()))
        .collect();
    if need.iter().any(|&b| b) {
        for &col in &EnvCategorical::ALL {
            let observed = out.iter().filter(|r| r.env.get_categorical(col).is_some()).count();
            if observed < out.len() && observed < k {
                return Err(ImputeError::InsufficientNeighbors { column: col.name().into(), observed, k });
            }
        }
        let orders = neighbour_orders(&data, numeric.len(), &need);
        let snapshot = out.clone();
        for (i, rec) in out.iter_mut().enumerate() {
            for (ci, &col) in EnvCategorical::ALL.iter().enumerate() {
                if rec.env.get_categorical(col).is_some() {
                    continue;
                }
                let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
                for v in orders[i].iter().filter_map(|&r| snapshot[r].env.get_categorical(col)).take(k) {
                    *votes.entry(v).or_default() += 1;
                }
                let best = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(v, _)| v.to_string());
                rec.env.set_categorical(col, best);
                knn_cat[ci] += 1;
            }
        }
    }

    for (rec, row) in out.iter_mut().zip(&completed) {
        for (&c, &v) in numeric.iter().zip(row) {
            rec.env.set_numeric(c, Some(v));
        }
    }

    let mut columns: Vec<ColumnImputation> = numeric
        .iter()
        .enumerate()
        .map(|(j, c)| ColumnImputation {
            column: c.name().into(),
            missing_before: missing_num[j],
            filled_by_session: session_counts.get(c.name()).copied().unwrap_or(0),
            filled_by_knn: knn_num[j],
        })
        .collect();
    columns.extend(EnvCategorical::ALL.iter().enumerate().map(|(j, c)| ColumnImputation {
        column: c.name().into(),
        missing_before: missing_cat[j],
        filled_by_session: session_counts.get(c.name()).copied().unwrap_or(0),
        filled_by_knn: knn_cat[j],
    }));
    Ok((out, ImputationReport { columns, k, distance: DISTANCE_ID.into() }))
}
