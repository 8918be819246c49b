use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    AlpsChannel, BehaviorRecord, ChildCharacteristics, DataError, EnvCategorical, EnvNumeric,
    WeatherNumeric,
};

/// A source column before encoding. `None` marks a missing cell.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Numeric { name: String, values: Vec<Option<f64>> },
    Categorical { name: String, values: Vec<Option<String>> },
}

impl RawColumn {
    pub fn name(&self) -> &str {
        match self {
            RawColumn::Numeric { name, .. } | RawColumn::Categorical { name, .. } => name,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RawColumn::Numeric { values, .. } => values.len(),
            RawColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedColumn {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

/// Which encodings to emit for categorical columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingOptions {
    pub one_hot: bool,
    pub integer_codes: bool,
}

impl Default for EncodingOptions {
    fn default() -> Self {
        EncodingOptions { one_hot: true, integer_codes: true }
    }
}

/// Encodes columns in order. A categorical column with `c` distinct observed
/// values becomes `name_code` (integer code by lexicographic value order)
/// followed by `name=value` one-hot columns in the same order. Numeric
/// columns pass through.
pub fn encode_table(columns: &[RawColumn], opts: EncodingOptions) -> Vec<EncodedColumn> {
    let mut out = Vec::new();
    for col in columns {
        match col {
            RawColumn::Numeric { name, values } => {
                out.push(EncodedColumn { name: name.clone(), values: values.clone() })
            }
            RawColumn::Categorical { name, values } => {
                let categories: Vec<&str> = values
                    .iter()
                    .flatten()
                    .map(String::as_str)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let code_of = |v: &str| categories.binary_search(&v).expect("category collected above");
                if opts.integer_codes {
                    out.push(EncodedColumn {
                        name: format!("{name}_code"),
                        values: values.iter().map(|v| v.as_deref().map(|s| code_of(s) as f64)).collect(),
                    });
                }
                if opts.one_hot {
                    for (k, cat) in categories.iter().enumerate() {
                        out.push(EncodedColumn {
                            name: format!("{name}={cat}"),
                            values: values
                                .iter()
                                .map(|v| v.as_deref().map(|s| if code_of(s) == k { 1.0 } else { 0.0 }))
                                .collect(),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Environment source columns in documented order.
pub(crate) fn env_raw_columns(records: &[BehaviorRecord]) -> Vec<RawColumn> {
    let num = |c: EnvNumeric| RawColumn::Numeric {
        name: c.name().to_string(),
        values: records.iter().map(|r| r.env.get_numeric(c)).collect(),
    };
    let cat = |c: EnvCategorical| RawColumn::Categorical {
        name: c.name().to_string(),
        values: records.iter().map(|r| r.env.get_categorical(c).map(str::to_string)).collect(),
    };
    let stamp_num = |name: &str, f: &dyn Fn(&BehaviorRecord) -> f64| RawColumn::Numeric {
        name: name.to_string(),
        values: records.iter().map(|r| Some(f(r))).collect(),
    };
    let stamp_cat = |name: &str, f: &dyn Fn(&BehaviorRecord) -> String| RawColumn::Categorical {
        name: name.to_string(),
        values: records.iter().map(|r| Some(f(r))).collect(),
    };

    let mut cols = vec![
        num(EnvNumeric::Latitude),
        num(EnvNumeric::Longitude),
        num(EnvNumeric::BeaconRssi),
        cat(EnvCategorical::BeaconName),
    ];
    cols.extend(AlpsChannel::ALL.iter().map(|&c| num(EnvNumeric::Alps(c))));
    cols.push(cat(EnvCategorical::WeatherCondition));
    for f in WeatherNumeric::ALL {
        cols.push(num(EnvNumeric::Weather(f)));
        if f == WeatherNumeric::Humidity {
            cols.push(cat(EnvCategorical::WeatherDescription));
        }
    }
    cols.push(stamp_cat("season", &|r| r.env.stamp.season.as_str().to_string()));
    cols.push(stamp_cat("year", &|r| r.env.stamp.year.to_string()));
    cols.push(stamp_cat("month", &|r| format!("{:02}", r.env.stamp.month)));
    cols.push(stamp_num("day", &|r| f64::from(r.env.stamp.day)));
    cols.push(stamp_num("hour", &|r| f64::from(r.env.stamp.hour)));
    cols.push(stamp_num("minute", &|r| f64::from(r.env.stamp.minute)));
    cols.push(stamp_num("second", &|r| f64::from(r.env.stamp.second)));
    cols
}

pub(crate) fn characteristic_columns(records: &[BehaviorRecord]) -> Vec<EncodedColumn> {
    let encoded: Vec<[f64; 2]> = records.iter().map(|r| r.characteristics.encode()).collect();
    ChildCharacteristics::COLUMNS
        .iter()
        .enumerate()
        .map(|(j, name)| EncodedColumn {
            name: name.to_string(),
            values: encoded.iter().map(|e| Some(e[j])).collect(),
        })
        .collect()
}

/// Characteristic columns followed by encoded environment columns.
pub fn encode_categoricals(
    records: &[BehaviorRecord],
    opts: EncodingOptions,
) -> Result<Vec<EncodedColumn>, DataError> {
    if records.is_empty() {
        return Err(DataError::EmptyInput);
    }
    let mut out = characteristic_columns(records);
    out.extend(encode_table(&env_raw_columns(records), opts));
    Ok(out)
}
