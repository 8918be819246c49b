use serde::{Deserialize, Serialize};

use super::DataError;

/// Fully observed, row-major design matrix with named columns and class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    column_names: Vec<String>,
    n_rows: usize,
    values: Vec<f64>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major values. Rejects NaN cells, label
    /// out-of-range and shape mismatches.
    pub fn new(
        column_names: Vec<String>,
        values: Vec<f64>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        let n_cols = column_names.len();
        let n_rows = labels.len();
        if values.len() != n_rows * n_cols {
            return Err(DataError::Malformed(format!(
                "{} values for {n_rows} rows x {n_cols} columns",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| v.is_nan()) {
            return Err(DataError::MissingData {
                column: column_names[pos % n_cols.max(1)].clone(),
                row: pos / n_cols.max(1),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(DataError::InvalidValue { field: "label".into(), value: bad.to_string() });
        }
        Ok(FeatureMatrix { column_names, n_rows, values, labels, n_classes })
    }

    pub fn from_rows(
        column_names: Vec<String>,
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self, DataError> {
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        FeatureMatrix::new(column_names, values, labels, n_classes)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Per-class row counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let p = self.n_cols();
        let mut values = Vec::with_capacity(rows.len() * p);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            column_names: self.column_names.clone(),
            n_rows: rows.len(),
            values,
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            n_classes: self.n_classes,
        }
    }

    /// Keeps the given columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        FeatureMatrix {
            column_names: cols.iter().map(|&c| self.column_names[c].clone()).collect(),
            n_rows: self.n_rows,
            values,
            labels: self.labels.clone(),
            n_classes: self.n_classes,
        }
    }

    pub fn with_labels(&self, labels: Vec<usize>, n_classes: usize) -> Result<FeatureMatrix, DataError> {
        FeatureMatrix::new(self.column_names.clone(), self.values.clone(), labels, n_classes)
    }

    /// Appends one column.
    pub fn with_column(&self, name: &str, column: &[f64]) -> Result<FeatureMatrix, DataError> {
        if column.len() != self.n_rows {
            return Err(DataError::Malformed(format!("column `{name}` has wrong length")));
        }
        let p = self.n_cols();
        let mut values = Vec::with_capacity(self.n_rows * (p + 1));
        for (i, v) in column.iter().enumerate() {
            values.extend_from_slice(self.row(i));
            values.push(*v);
        }
        let mut names = self.column_names.clone();
        names.push(name.to_string());
        FeatureMatrix::new(names, values, self.labels.clone(), self.n_classes)
    }

    /// Writes the matrix as CSV: feature columns then a `label` column.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), DataError> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = self.column_names.clone();
        header.push("label".into());
        wr.write_record(&header)?;
        for i in 0..self.n_rows {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| format_f64(*v)).collect();
            rec.push(self.labels[i].to_string());
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a matrix written by [`write_csv`](Self::write_csv). The class
    /// count is `max(label) + 1` unless given.
    pub fn read_csv<R: std::io::Read>(r: R, n_classes: Option<usize>) -> Result<FeatureMatrix, DataError> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let label_col = header
            .iter()
            .position(|h| h == "label")
            .ok_or_else(|| DataError::Malformed("matrix csv has no `label` column".into()))?;
        let names: Vec<String> =
            header.iter().enumerate().filter(|(i, _)| *i != label_col).map(|(_, h)| h.clone()).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            for (j, field) in rec.iter().enumerate() {
                if j == label_col {
                    labels.push(field.trim().parse::<usize>().map_err(|_| DataError::InvalidValue {
                        field: "label".into(),
                        value: field.into(),
                    })?);
                } else {
                    if field.trim().is_empty() {
                        return Err(DataError::MissingData { column: header[j].clone(), row });
                    }
                    values.push(field.trim().parse::<f64>().map_err(|_| DataError::InvalidValue {
                        field: header[j].clone(),
                        value: field.into(),
                    })?);
                }
            }
        }
        let k = n_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        FeatureMatrix::new(names, values, labels, k)
    }
}

/// Shortest round-trippable decimal representation.
pub(crate) fn format_f64(v: f64) -> String {
    format!("{v}")
}
