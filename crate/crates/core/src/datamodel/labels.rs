use serde::{Deserialize, Serialize};

use super::DataError;
use crate::config::parse_flat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class7 {
    Calling,
    Response,
    Emotions,
    Interest,
    Negative,
    Selecting,
    PhysiologicalResponse,
}

impl Class7 {
    pub const ALL: [Class7; 7] = [
        Class7::Calling,
        Class7::Response,
        Class7::Emotions,
        Class7::Interest,
        Class7::Negative,
        Class7::Selecting,
        Class7::PhysiologicalResponse,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class7::Calling => "calling",
            Class7::Response => "response",
            Class7::Emotions => "emotions",
            Class7::Interest => "interest",
            Class7::Negative => "negative",
            Class7::Selecting => "selecting",
            Class7::PhysiologicalResponse => "physiological_response",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        Class7::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DataError::InvalidValue { field: "class7".into(), value: s.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class3 {
    Response,
    Action,
    ResponseOrAction,
}

impl Class3 {
    pub const ALL: [Class3; 3] = [Class3::Response, Class3::Action, Class3::ResponseOrAction];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class3::Response => "response",
            Class3::Action => "action",
            Class3::ResponseOrAction => "response_or_action",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        Class3::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DataError::InvalidValue { field: "class3".into(), value: s.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class2 {
    Response,
    Action,
}

impl Class2 {
    pub const ALL: [Class2; 2] = [Class2::Response, Class2::Action];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Class2::Response => "response",
            Class2::Action => "action",
        }
    }

    pub fn parse(s: &str) -> Result<Self, DataError> {
        Class2::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DataError::InvalidValue { field: "class2".into(), value: s.into() })
    }
}

/// Granularity of the outcome labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassLevel {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "7")]
    Seven,
}

impl ClassLevel {
    pub const ALL: [ClassLevel; 3] = [ClassLevel::Two, ClassLevel::Three, ClassLevel::Seven];

    pub fn n_classes(self) -> usize {
        match self {
            ClassLevel::Two => 2,
            ClassLevel::Three => 3,
            ClassLevel::Seven => 7,
        }
    }

    pub fn from_n(n: usize) -> Option<ClassLevel> {
        match n {
            2 => Some(ClassLevel::Two),
            3 => Some(ClassLevel::Three),
            7 => Some(ClassLevel::Seven),
            _ => None,
        }
    }

    /// Factor code used in the pooled analysis (class 2 → 1, 3 → 2, 7 → 3).
    pub fn code(self) -> u8 {
        match self {
            ClassLevel::Two => 1,
            ClassLevel::Three => 2,
            ClassLevel::Seven => 3,
        }
    }

    pub fn class_names(self) -> Vec<&'static str> {
        match self {
            ClassLevel::Two => Class2::ALL.iter().map(|c| c.as_str()).collect(),
            ClassLevel::Three => Class3::ALL.iter().map(|c| c.as_str()).collect(),
            ClassLevel::Seven => Class7::ALL.iter().map(|c| c.as_str()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLabels {
    pub class7: Class7,
    pub class3: Class3,
    pub class2: Class2,
}

impl OutcomeLabels {
    pub fn at(&self, level: ClassLevel) -> usize {
        match level {
            ClassLevel::Two => self.class2.index(),
            ClassLevel::Three => self.class3.index(),
            ClassLevel::Seven => self.class7.index(),
        }
    }
}

/// Mapping between outcome levels, loaded from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    to3: [Class3; 7],
    response_or_action_to2: Class2,
}

const DEFAULT_MAPPING: &str = include_str!("../../data/label_mapping.conf");

impl Default for LabelMapping {
    fn default() -> Self {
        LabelMapping::parse(DEFAULT_MAPPING).expect("bundled mapping is valid")
    }
}

impl LabelMapping {
    pub fn default_text() -> &'static str {
        DEFAULT_MAPPING
    }

    pub fn parse(text: &str) -> Result<Self, DataError> {
        let pairs = parse_flat(text).map_err(DataError::Mapping)?;
        let mut to3: [Option<Class3>; 7] = [None; 7];
        let mut roa = None;
        for (key, value) in pairs {
            if let Some(name) = key.strip_prefix("class7.") {
                to3[Class7::parse(name)?.index()] = Some(Class3::parse(&value)?);
            } else if let Some(name) = key.strip_prefix("class3.") {
                let from = Class3::parse(name)?;
                let to = Class2::parse(&value)?;
                match from {
                    Class3::ResponseOrAction => roa = Some(to),
                    Class3::Response if to == Class2::Response => {}
                    Class3::Action if to == Class2::Action => {}
                    _ => {
                        return Err(DataError::Mapping(format!(
                            "class3.{name} must map to itself at the 2-class level"
                        )))
                    }
                }
            } else {
                return Err(DataError::Mapping(format!("unknown key `{key}`")));
            }
        }
        let mut out = [Class3::Response; 7];
        for (i, slot) in to3.iter().enumerate() {
            out[i] = slot.ok_or_else(|| {
                DataError::Mapping(format!("no mapping for class7.{}", Class7::ALL[i].as_str()))
            })?;
        }
        let response_or_action_to2 =
            roa.ok_or_else(|| DataError::Mapping("no mapping for class3.response_or_action".into()))?;
        Ok(LabelMapping { to3: out, response_or_action_to2 })
    }

    pub fn map_class7_to_class3(&self, c: Class7) -> Class3 {
        self.to3[c.index()]
    }

    pub fn map_class3_to_class2(&self, c: Class3) -> Class2 {
        match c {
            Class3::Response => Class2::Response,
            Class3::Action => Class2::Action,
            Class3::ResponseOrAction => self.response_or_action_to2,
        }
    }

    pub fn labels_for(&self, class7: Class7) -> OutcomeLabels {
        let class3 = self.map_class7_to_class3(class7);
        OutcomeLabels { class7, class3, class2: self.map_class3_to_class2(class3) }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c in Class7::ALL {
            s.push_str(&format!("class7.{} = {}\n", c.as_str(), self.to3[c.index()].as_str()));
        }
        s.push_str(&format!(
            "class3.response_or_action = {}\n",
            self.response_or_action_to2.as_str()
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_branches_at_two_class_level() {
        let m = LabelMapping::default();
        assert_eq!(m.map_class3_to_class2(Class3::Response), Class2::Response);
        assert_eq!(m.map_class3_to_class2(Class3::Action), Class2::Action);
    }

    #[test]
    fn default_maps_response_to_response_and_rest_elsewhere() {
        let m = LabelMapping::default();
        for c in Class7::ALL {
            let to = m.map_class7_to_class3(c);
            assert_eq!(c == Class7::Response, to == Class3::Response);
        }
    }

    #[test]
    fn mapping_is_configurable_and_round_trips() {
        let text = LabelMapping::default_text().replace(
            "class7.calling = action",
            "class7.calling = response_or_action",
        );
        let m = LabelMapping::parse(&text).unwrap();
        assert_eq!(m.map_class7_to_class3(Class7::Calling), Class3::ResponseOrAction);
        assert_eq!(LabelMapping::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn rejects_incomplete_or_contradictory_mapping() {
        assert!(LabelMapping::parse("class7.calling = action").is_err());
        let bad = format!("{}\nclass3.action = response\n", LabelMapping::default_text());
        assert!(LabelMapping::parse(&bad).is_err());
        let unknown = format!("{}\nclass7.positive = action\n", LabelMapping::default_text());
        assert!(LabelMapping::parse(&unknown).is_err());
    }
}
