//! Weather readings: fixture documents for offline runs, and an optional live
//! client (feature `live-weather`).
//!
//! A fixture is one JSON object per (latitude, longitude, hour) with the 13
//! fields `condition`, `description`, `sunset`, `sunrise`, `current_time`,
//! `temp_min`, `temp_max`, `pressure`, `temp_main`, `humidity`, `cloudiness`,
//! `wind_direction`, `wind_speed`. Absent or `null` fields are missing.
//! `sunrise`, `sunset` and `current_time` are local seconds since midnight.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::IngestError;
use crate::datamodel::{Timestamp, WeatherFields, WeatherNumeric};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeatherResponse {
    pub fields: WeatherFields,
}

impl WeatherResponse {
    pub fn from_fixture_json(doc: &Value) -> Result<WeatherResponse, IngestError> {
        let obj = doc
            .as_object()
            .ok_or_else(|| IngestError::InvalidDocument("weather fixture must be a JSON object".into()))?;
        let text = |key: &str| -> Result<Option<String>, IngestError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(other) => Err(IngestError::InvalidDocument(format!("`{key}` must be a string, got {other}"))),
            }
        };
        let mut fields = WeatherFields {
            condition: text("condition")?,
            description: text("description")?,
            ..WeatherFields::default()
        };
        for f in WeatherNumeric::ALL {
            let key = f.fixture_key();
            let v = match obj.get(key) {
                None | Some(Value::Null) => None,
                Some(v) => Some(v.as_f64().ok_or_else(|| {
                    IngestError::InvalidDocument(format!("`{key}` must be a number, got {v}"))
                })?),
            };
            fields.set(f, v);
        }
        let resp = WeatherResponse { fields };
        resp.validate()?;
        Ok(resp)
    }

    pub fn to_fixture_json(&self) -> Value {
        let mut obj = Map::new();
        let put_text = |obj: &mut Map<String, Value>, key: &str, v: &Option<String>| {
            if let Some(s) = v {
                obj.insert(key.into(), Value::String(s.clone()));
            }
        };
        put_text(&mut obj, "condition", &self.fields.condition);
        put_text(&mut obj, "description", &self.fields.description);
        for f in WeatherNumeric::ALL {
            if let Some(v) = self.fields.get(f) {
                obj.insert(f.fixture_key().into(), serde_json::json!(v));
            }
        }
        Value::Object(obj)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        for f in WeatherNumeric::ALL {
            if let Some(v) = self.fields.get(f) {
                if !f.valid(v) {
                    return Err(IngestError::InvalidDocument(format!("{} out of range: {v}", f.fixture_key())));
                }
            }
        }
        for f in [WeatherNumeric::Sunrise, WeatherNumeric::Sunset, WeatherNumeric::CurrentTime] {
            if let Some(v) = self.fields.get(f) {
                if !(0.0..86_400.0).contains(&v) {
                    return Err(IngestError::InvalidDocument(format!(
                        "{} must be seconds since local midnight, got {v}",
                        f.fixture_key()
                    )));
                }
            }
        }
        if let (Some(rise), Some(set)) =
            (self.fields.get(WeatherNumeric::Sunrise), self.fields.get(WeatherNumeric::Sunset))
        {
            if rise >= set {
                return Err(IngestError::InvalidDocument(format!("sunrise {rise} not before sunset {set}")));
            }
        }
        Ok(())
    }

    /// Decodes an OpenWeatherMap "current weather" document (metric units).
    pub fn from_openweathermap(doc: &Value) -> Result<WeatherResponse, IngestError> {
        let num = |path: &[&str]| -> Option<f64> {
            let mut v = doc;
            for p in path {
                v = v.get(p)?;
            }
            v.as_f64()
        };
        let offset = num(&["timezone"]).unwrap_or(0.0);
        let local = |t: Option<f64>| t.map(|t| (t + offset).rem_euclid(86_400.0));
        let first = doc.get("weather").and_then(|w| w.get(0));
        let text = |key: &str| first.and_then(|w| w.get(key)).and_then(Value::as_str).map(str::to_string);
        let mut fields = WeatherFields { condition: text("main"), description: text("description"), ..Default::default() };
        fields.set(WeatherNumeric::Sunset, local(num(&["sys", "sunset"])));
        fields.set(WeatherNumeric::Sunrise, local(num(&["sys", "sunrise"])));
        fields.set(WeatherNumeric::CurrentTime, local(num(&["dt"])));
        fields.set(WeatherNumeric::TempMin, num(&["main", "temp_min"]));
        fields.set(WeatherNumeric::TempMax, num(&["main", "temp_max"]));
        fields.set(WeatherNumeric::Pressure, num(&["main", "pressure"]));
        fields.set(WeatherNumeric::TempMain, num(&["main", "temp"]));
        fields.set(WeatherNumeric::Humidity, num(&["main", "humidity"]));
        fields.set(WeatherNumeric::Cloudiness, num(&["clouds", "all"]));
        fields.set(WeatherNumeric::WindDirection, num(&["wind", "deg"]).map(|d| d.rem_euclid(360.0)));
        fields.set(WeatherNumeric::WindSpeed, num(&["wind", "speed"]));
        let resp = WeatherResponse { fields };
        resp.validate()?;
        Ok(resp)
    }
}

/// Where weather readings come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeatherSource {
    Fixture { dir: PathBuf },
    Live { endpoint: String, api_key: String },
}

pub const ENDPOINT_ENV: &str = "WEATHER_API_ENDPOINT";
pub const API_KEY_ENV: &str = "WEATHER_API_KEY";

impl WeatherSource {
    pub fn fixtures(dir: impl Into<PathBuf>) -> Self {
        WeatherSource::Fixture { dir: dir.into() }
    }

    /// Live source configured from `WEATHER_API_ENDPOINT` / `WEATHER_API_KEY`.
    pub fn live_from_env() -> Result<Self, IngestError> {
        let get = |k: &str| {
            std::env::var(k).map_err(|_| IngestError::SourceUnavailable(format!("environment variable {k} not set")))
        };
        Ok(WeatherSource::Live { endpoint: get(ENDPOINT_ENV)?, api_key: get(API_KEY_ENV)? })
    }
}

/// Fixture file name for a location and hour, e.g. `33.80_132.87_2020-11-05T10.json`.
pub fn fixture_name(lat: f64, lon: f64, when: &Timestamp) -> String {
    format!(
        "{:.2}_{:.2}_{:04}-{:02}-{:02}T{:02}.json",
        lat, lon, when.year, when.month, when.day, when.hour
    )
}

pub fn write_fixture(dir: &Path, lat: f64, lon: f64, when: &Timestamp, resp: &WeatherResponse) -> Result<PathBuf, IngestError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(fixture_name(lat, lon, when));
    std::fs::write(&path, serde_json::to_vec_pretty(&resp.to_fixture_json())?)?;
    Ok(path)
}

pub fn fetch_weather(lat: f64, lon: f64, when: &Timestamp, source: &WeatherSource) -> Result<WeatherResponse, IngestError> {
    match source {
        WeatherSource::Fixture { dir } => {
            let path = dir.join(fixture_name(lat, lon, when));
            let bytes = std::fs::read(&path)
                .map_err(|e| IngestError::SourceUnavailable(format!("{}: {e}", path.display())))?;
            let doc: Value = serde_json::from_slice(&bytes)?;
            WeatherResponse::from_fixture_json(&doc)
        }
        WeatherSource::Live { endpoint, api_key } => fetch_live(endpoint, api_key, lat, lon),
    }
}

#[cfg(feature = "live-weather")]
fn fetch_live(endpoint: &str, api_key: &str, lat: f64, lon: f64) -> Result<WeatherResponse, IngestError> {
    let unavailable = |e: reqwest::Error| IngestError::SourceUnavailable(e.to_string());
    let client = reqwest::blocking::Client::builder()
        .timeout(std::time::Duration::from_secs(10))
        .build()
        .map_err(unavailable)?;
    let url = format!("{endpoint}?lat={lat}&lon={lon}&units=metric&appid={api_key}");
    let body = client
        .get(url)
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(unavailable)?;
    let doc: Value = serde_json::from_str(&body)?;
    WeatherResponse::from_openweathermap(&doc)
}

#[cfg(not(feature = "live-weather"))]
fn fetch_live(_endpoint: &str, _api_key: &str, _lat: f64, _lon: f64) -> Result<WeatherResponse, IngestError> {
    Err(IngestError::SourceUnavailable("built without the `live-weather` feature".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn full_doc() -> Value {
        json!({
            "condition": "Clouds", "description": "broken clouds",
            "sunset": 61200.0, "sunrise": 22500.0, "current_time": 36000.0,
            "temp_min": 14.0, "temp_max": 21.0, "pressure": 1016.0, "temp_main": 18.5,
            "humidity": 62.0, "cloudiness": 75.0, "wind_direction": 240.0, "wind_speed": 3.1
        })
    }

    #[test]
    fn full_fixture_decodes_all_fields() {
        let r = WeatherResponse::from_fixture_json(&full_doc()).unwrap();
        assert!(r.fields.numeric.iter().all(Option::is_some));
        assert_eq!(r.fields.condition.as_deref(), Some("Clouds"));
        assert_eq!(r.fields.get(WeatherNumeric::Pressure), Some(1016.0));
        let again = WeatherResponse::from_fixture_json(&r.to_fixture_json()).unwrap();
        assert_eq!(again, r);
    }

    #[test]
    fn missing_wind_direction_only() {
        let mut doc = full_doc();
        doc.as_object_mut().unwrap().remove("wind_direction");
        let r = WeatherResponse::from_fixture_json(&doc).unwrap();
        for f in WeatherNumeric::ALL {
            assert_eq!(r.fields.get(f).is_none(), f == WeatherNumeric::WindDirection);
        }
        assert!(r.fields.description.is_some());
    }

    #[test]
    fn invariants_enforced() {
        let mut doc = full_doc();
        doc["wind_direction"] = json!(360.0);
        assert!(WeatherResponse::from_fixture_json(&doc).is_err());
        let mut doc = full_doc();
        doc["sunrise"] = json!(70000.0);
        assert!(WeatherResponse::from_fixture_json(&doc).is_err());
        let mut doc = full_doc();
        doc["wind_speed"] = json!(-1.0);
        assert!(WeatherResponse::from_fixture_json(&doc).is_err());
        assert!(WeatherResponse::from_fixture_json(&json!([1, 2])).is_err());
    }

    #[test]
    fn openweathermap_document() {
        let doc = json!({
            "weather": [{"main": "Rain", "description": "light rain"}],
            "main": {"temp": 12.3, "temp_min": 11.0, "temp_max": 13.0, "pressure": 1009, "humidity": 81},
            "wind": {"speed": 4.6, "deg": 200}, "clouds": {"all": 90},
            "dt": 1604538000, "sys": {"sunrise": 1604525000, "sunset": 1604563900}, "timezone": 32400
        });
        let r = WeatherResponse::from_openweathermap(&doc).unwrap();
        assert_eq!(r.fields.condition.as_deref(), Some("Rain"));
        assert_eq!(r.fields.get(WeatherNumeric::WindDirection), Some(200.0));
        let rise = r.fields.get(WeatherNumeric::Sunrise).unwrap();
        let set = r.fields.get(WeatherNumeric::Sunset).unwrap();
        assert!(rise < set);
    }

    #[test]
    fn missing_fixture_is_source_unavailable() {
        let dir = tempfile::tempdir().unwrap();
        let when = Timestamp::new(2020, 11, 5, 10, 0, 0).unwrap();
        let err = fetch_weather(33.8, 132.87, &when, &WeatherSource::fixtures(dir.path())).unwrap_err();
        assert!(matches!(err, IngestError::SourceUnavailable(_)));
    }

    #[test]
    fn fixture_lookup_by_rounded_location_and_hour() {
        let dir = tempfile::tempdir().unwrap();
        let when = Timestamp::new(2020, 11, 5, 10, 12, 40).unwrap();
        let resp = WeatherResponse::from_fixture_json(&full_doc()).unwrap();
        write_fixture(dir.path(), 33.7951, 132.8702, &when, &resp).unwrap();
        let later = Timestamp::new(2020, 11, 5, 10, 59, 0).unwrap();
        let got = fetch_weather(33.7950981, 132.8702426, &later, &WeatherSource::fixtures(dir.path())).unwrap();
        assert_eq!(got, resp);
    }

    #[test]
    fn unreachable_live_endpoint_is_source_unavailable() {
        let src = WeatherSource::Live { endpoint: "http://127.0.0.1:9/weather".into(), api_key: "k".into() };
        let when = Timestamp::new(2020, 11, 5, 10, 0, 0).unwrap();
        assert!(matches!(fetch_weather(33.8, 132.9, &when, &src), Err(IngestError::SourceUnavailable(_))));
    }
}
