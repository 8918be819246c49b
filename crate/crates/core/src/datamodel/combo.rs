use std::fmt;

use serde::{Deserialize, Serialize};

use super::encode::{characteristic_columns, env_raw_columns};
use super::{
    encode_table, BehaviorRecord, ClassLevel, DataError, EncodedColumn, EncodingOptions,
    FeatureMatrix, MAJOR_NAMES, MINOR_NAMES,
};

/// Which behavior flags a combination carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorVariant {
    Major,
    Minor,
    Both,
}

impl BehaviorVariant {
    pub fn index(self) -> usize {
        self as usize
    }
}

/// The six dataset recipes. a, c, e carry environment data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComboId {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl ComboId {
    pub const ALL: [ComboId; 6] = [ComboId::A, ComboId::B, ComboId::C, ComboId::D, ComboId::E, ComboId::F];

    pub fn includes_env(self) -> bool {
        matches!(self, ComboId::A | ComboId::C | ComboId::E)
    }

    pub fn includes_major(self) -> bool {
        matches!(self, ComboId::A | ComboId::B | ComboId::E | ComboId::F)
    }

    pub fn includes_minor(self) -> bool {
        matches!(self, ComboId::C | ComboId::D | ComboId::E | ComboId::F)
    }

    pub fn variant(self) -> BehaviorVariant {
        match (self.includes_major(), self.includes_minor()) {
            (true, true) => BehaviorVariant::Both,
            (true, false) => BehaviorVariant::Major,
            _ => BehaviorVariant::Minor,
        }
    }

    pub fn letter(self) -> char {
        match self {
            ComboId::A => 'a',
            ComboId::B => 'b',
            ComboId::C => 'c',
            ComboId::D => 'd',
            ComboId::E => 'e',
            ComboId::F => 'f',
        }
    }

    pub fn parse(s: &str) -> Option<ComboId> {
        ComboId::ALL.into_iter().find(|c| s.len() == 1 && s.starts_with(c.letter()))
    }

    pub fn description(self) -> &'static str {
        match self {
            ComboId::A => "CC+MajC+ED",
            ComboId::B => "CC+MajC",
            ComboId::C => "CC+MinC+ED",
            ComboId::D => "CC+MinC",
            ComboId::E => "CC+MajC+MinC+ED",
            ComboId::F => "CC+MajC+MinC",
        }
    }
}

impl fmt::Display for ComboId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

fn flag_column(name: String, records: &[BehaviorRecord], f: impl Fn(&BehaviorRecord) -> bool) -> EncodedColumn {
    EncodedColumn { name, values: records.iter().map(|r| Some(f64::from(u8::from(f(r))))).collect() }
}

/// Builds the design matrix for one combination and class level. Column
/// order: characteristics, major flags, minor flags, encoded environment.
pub fn build_combination(
    records: &[BehaviorRecord],
    combo: ComboId,
    level: ClassLevel,
    opts: EncodingOptions,
) -> Result<FeatureMatrix, DataError> {
    if records.is_empty() {
        return Err(DataError::EmptyInput);
    }
    let mut cols = characteristic_columns(records);
    if combo.includes_major() {
        for (j, name) in MAJOR_NAMES.iter().enumerate() {
            cols.push(flag_column(format!("major_{name}"), records, |r| r.major.0[j]));
        }
    }
    if combo.includes_minor() {
        for (j, name) in MINOR_NAMES.iter().enumerate() {
            cols.push(flag_column(format!("minor_{name}"), records, |r| r.minor.0[j]));
        }
    }
    if combo.includes_env() {
        cols.extend(encode_table(&env_raw_columns(records), opts));
    }

    let n = records.len();
    let mut values = Vec::with_capacity(n * cols.len());
    for i in 0..n {
        for c in &cols {
            match c.values[i] {
                Some(v) => values.push(v),
                None => return Err(DataError::MissingData { column: c.name.clone(), row: i }),
            }
        }
    }
    let labels = records.iter().map(|r| r.labels.at(level)).collect();
    FeatureMatrix::new(cols.into_iter().map(|c| c.name).collect(), values, labels, level.n_classes())
}
