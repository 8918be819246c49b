//! Record types, outcome-class hierarchy, dataset combinations and the
//! categorical-to-numeric encoding that turns records into design matrices.

mod combo;
mod csv_io;
mod encode;
mod env;
mod labels;
mod matrix;

pub use combo::{build_combination, BehaviorVariant, ComboId};
pub use csv_io::{read_records, read_records_from, record_header, write_records, write_records_to};
pub use encode::{encode_categoricals, encode_table, EncodedColumn, EncodingOptions, RawColumn};
pub use env::{
    AlpsChannel, AlpsChannels, BeaconFields, EnvCategorical, EnvNumeric, EnvironmentSnapshot,
    GpsPosition, MacAddress, Season, Timestamp, WeatherFields, WeatherNumeric,
};
pub use labels::{Class2, Class3, Class7, ClassLevel, LabelMapping, OutcomeLabels};
pub use matrix::FeatureMatrix;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("empty input")]
    EmptyInput,
    #[error("missing value in column `{column}` (row {row}); impute before building an environment combination")]
    MissingData { column: String, row: usize },
    #[error("invalid value `{value}` for `{field}`")]
    InvalidValue { field: String, value: String },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("label mapping: {0}")]
    Mapping(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    PimdSmid,
    SevereProfoundId,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            _ => Err(DataError::InvalidValue { field: "gender".into(), value: s.into() }),
        }
    }
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Condition::PimdSmid => "PIMD_SMID",
            Condition::SevereProfoundId => "severe_profound_ID",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        match s {
            "PIMD_SMID" => Ok(Condition::PimdSmid),
            "severe_profound_ID" => Ok(Condition::SevereProfoundId),
            _ => Err(DataError::InvalidValue { field: "condition".into(), value: s.into() }),
        }
    }
}

/// Gender and main diagnosis of a child.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildCharacteristics {
    pub gender: Gender,
    pub condition: Condition,
}

impl ChildCharacteristics {
    pub const COLUMNS: [&'static str; 2] = ["gender_female", "condition_severe_profound_id"];

    /// Two binary columns: female indicator and severe/profound-ID indicator.
    pub fn encode(&self) -> [f64; 2] {
        [
            f64::from(u8::from(self.gender == Gender::Female)),
            f64::from(u8::from(self.condition == Condition::SevereProfoundId)),
        ]
    }
}

pub const MAJOR_NAMES: [&str; 6] = [
    "eye_movement",
    "facial_expression",
    "vocalization",
    "hand_movement",
    "body_movement",
    "non_communicative",
];

pub const MINOR_NAMES: [&str; 16] = [
    "gazing",
    "eye_tracking",
    "changing_line_of_sight",
    "opening_closing_eyelids",
    "smiling",
    "facial_expression_other",
    "concentrating_listening",
    "vocalization",
    "pointing",
    "reaching",
    "moving",
    "approaching",
    "contacting",
    "body_part_movement",
    "stereotypical",
    "injurious",
];

/// Major category index owning each minor category.
pub const MINOR_TO_MAJOR: [usize; 16] = [0, 0, 0, 0, 1, 1, 1, 2, 3, 3, 3, 4, 4, 4, 5, 5];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorCategoryFlags(pub [bool; 6]);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinorCategoryFlags(pub [bool; 16]);

impl MinorCategoryFlags {
    /// Major flags implied by these minors: a major flag is set iff any of its minors is.
    pub fn implied_major(&self) -> MajorCategoryFlags {
        let mut major = [false; 6];
        for (flag, &owner) in self.0.iter().zip(MINOR_TO_MAJOR.iter()) {
            major[owner] |= *flag;
        }
        MajorCategoryFlags(major)
    }
}

impl MajorCategoryFlags {
    pub fn consistent_with(&self, minor: &MinorCategoryFlags) -> bool {
        *self == minor.implied_major()
    }
}

/// One observed behavior event with its context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub record_id: u64,
    pub child_id: u32,
    pub session_id: u32,
    pub characteristics: ChildCharacteristics,
    pub major: MajorCategoryFlags,
    pub minor: MinorCategoryFlags,
    pub env: EnvironmentSnapshot,
    pub labels: OutcomeLabels,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn major_is_or_of_minors() {
        let mut minor = MinorCategoryFlags::default();
        minor.0[9] = true; // reaching
        minor.0[15] = true; // injurious
        let major = minor.implied_major();
        assert_eq!(major.0, [false, false, false, true, false, true]);
        assert!(major.consistent_with(&minor));
        assert!(!MajorCategoryFlags([true; 6]).consistent_with(&minor));
    }

    #[test]
    fn minor_grouping_covers_six_majors() {
        for m in 0..6 {
            assert!(MINOR_TO_MAJOR.contains(&m));
        }
        assert_eq!(MINOR_NAMES.len(), 16);
    }

    #[test]
    fn characteristics_encode_to_two_columns() {
        let c = ChildCharacteristics { gender: Gender::Female, condition: Condition::PimdSmid };
        assert_eq!(c.encode(), [1.0, 0.0]);
    }
}
