use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::DataError;

/// The eleven ALPS sensor channels, in frame order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlpsChannel {
    UvRange,
    AmbientLight,
    GeomagG1,
    GeomagG2,
    GeomagG3,
    GeomagUt1,
    GeomagUt2,
    GeomagUt3,
    Pressure,
    Temperature,
    Humidity,
}

impl AlpsChannel {
    pub const ALL: [AlpsChannel; 11] = [
        AlpsChannel::UvRange,
        AlpsChannel::AmbientLight,
        AlpsChannel::GeomagG1,
        AlpsChannel::GeomagG2,
        AlpsChannel::GeomagG3,
        AlpsChannel::GeomagUt1,
        AlpsChannel::GeomagUt2,
        AlpsChannel::GeomagUt3,
        AlpsChannel::Pressure,
        AlpsChannel::Temperature,
        AlpsChannel::Humidity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            AlpsChannel::UvRange => "uv_range",
            AlpsChannel::AmbientLight => "ambient_light",
            AlpsChannel::GeomagG1 => "geomag_g1",
            AlpsChannel::GeomagG2 => "geomag_g2",
            AlpsChannel::GeomagG3 => "geomag_g3",
            AlpsChannel::GeomagUt1 => "geomag_uT1",
            AlpsChannel::GeomagUt2 => "geomag_uT2",
            AlpsChannel::GeomagUt3 => "geomag_uT3",
            AlpsChannel::Pressure => "pressure",
            AlpsChannel::Temperature => "temperature",
            AlpsChannel::Humidity => "humidity",
        }
    }

    /// Inclusive physical range of the channel.
    pub fn range(self) -> (f64, f64) {
        match self {
            AlpsChannel::UvRange => (0.0, 20.48),
            AlpsChannel::AmbientLight => (0.0, 81_900.0),
            AlpsChannel::GeomagG1 | AlpsChannel::GeomagG2 | AlpsChannel::GeomagG3 => (-2.4, 2.4),
            AlpsChannel::GeomagUt1 | AlpsChannel::GeomagUt2 | AlpsChannel::GeomagUt3 => {
                (-2400.0, 2400.0)
            }
            AlpsChannel::Pressure => (300.0, 1100.0),
            AlpsChannel::Temperature => (-20.0, 60.0),
            AlpsChannel::Humidity => (0.0, 100.0),
        }
    }

    pub fn in_range(self, v: f64) -> bool {
        let (lo, hi) = self.range();
        v >= lo && v <= hi
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AlpsChannels(pub [Option<f64>; 11]);

impl AlpsChannels {
    pub fn get(&self, ch: AlpsChannel) -> Option<f64> {
        self.0[ch.index()]
    }

    pub fn set(&mut self, ch: AlpsChannel, v: Option<f64>) {
        self.0[ch.index()] = v;
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(Option::is_none)
    }
}

/// Numeric weather features (the categorical condition and description live
/// beside them in [`WeatherFields`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WeatherNumeric {
    Sunset,
    Sunrise,
    CurrentTime,
    TempMin,
    TempMax,
    Pressure,
    TempMain,
    Humidity,
    Cloudiness,
    WindDirection,
    WindSpeed,
}

impl WeatherNumeric {
    pub const ALL: [WeatherNumeric; 11] = [
        WeatherNumeric::Sunset,
        WeatherNumeric::Sunrise,
        WeatherNumeric::CurrentTime,
        WeatherNumeric::TempMin,
        WeatherNumeric::TempMax,
        WeatherNumeric::Pressure,
        WeatherNumeric::TempMain,
        WeatherNumeric::Humidity,
        WeatherNumeric::Cloudiness,
        WeatherNumeric::WindDirection,
        WeatherNumeric::WindSpeed,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name in the dataset file (prefixed where it would clash with ALPS).
    pub fn name(self) -> &'static str {
        match self {
            WeatherNumeric::Sunset => "sunset",
            WeatherNumeric::Sunrise => "sunrise",
            WeatherNumeric::CurrentTime => "current_time",
            WeatherNumeric::TempMin => "temp_min",
            WeatherNumeric::TempMax => "temp_max",
            WeatherNumeric::Pressure => "weather_pressure",
            WeatherNumeric::TempMain => "temp_main",
            WeatherNumeric::Humidity => "weather_humidity",
            WeatherNumeric::Cloudiness => "cloudiness",
            WeatherNumeric::WindDirection => "wind_direction",
            WeatherNumeric::WindSpeed => "wind_speed",
        }
    }

    /// Field name inside a weather fixture document.
    pub fn fixture_key(self) -> &'static str {
        match self {
            WeatherNumeric::Pressure => "pressure",
            WeatherNumeric::Humidity => "humidity",
            other => other.name(),
        }
    }

    pub fn valid(self, v: f64) -> bool {
        if !v.is_finite() {
            return false;
        }
        match self {
            WeatherNumeric::WindDirection => (0.0..360.0).contains(&v),
            WeatherNumeric::WindSpeed => v >= 0.0,
            WeatherNumeric::Humidity | WeatherNumeric::Cloudiness => (0.0..=100.0).contains(&v),
            WeatherNumeric::Pressure => (300.0..=1100.0).contains(&v),
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeatherFields {
    pub condition: Option<String>,
    pub description: Option<String>,
    pub numeric: [Option<f64>; 11],
}

impl WeatherFields {
    pub fn get(&self, f: WeatherNumeric) -> Option<f64> {
        self.numeric[f.index()]
    }

    pub fn set(&mut self, f: WeatherNumeric, v: Option<f64>) {
        self.numeric[f.index()] = v;
    }

    pub fn is_empty(&self) -> bool {
        self.condition.is_none() && self.description.is_none() && self.numeric.iter().all(Option::is_none)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MacAddress(pub [u8; 6]);

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02X}:{:02X}:{:02X}:{:02X}:{:02X}:{:02X}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

impl FromStr for MacAddress {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || DataError::InvalidValue { field: "beacon_mac".into(), value: s.into() };
        let mut out = [0u8; 6];
        let mut parts = s.split(':');
        for byte in out.iter_mut() {
            let part = parts.next().ok_or_else(bad)?;
            if part.len() != 2 {
                return Err(bad());
            }
            *byte = u8::from_str_radix(part, 16).map_err(|_| bad())?;
        }
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(MacAddress(out))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GpsPosition {
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BeaconFields {
    pub rssi: Option<f64>,
    /// Kept as metadata; not encoded as a feature.
    pub mac: Option<MacAddress>,
    pub name: Option<String>,
}

impl BeaconFields {
    pub fn is_empty(&self) -> bool {
        self.rssi.is_none() && self.mac.is_none() && self.name.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    Spring,
    Summer,
    Autumn,
    Winter,
}

impl Season {
    /// 3-5 spring, 6-8 summer, 9-11 autumn, 12-2 winter.
    pub fn of_month(month: u32) -> Option<Season> {
        match month {
            3..=5 => Some(Season::Spring),
            6..=8 => Some(Season::Summer),
            9..=11 => Some(Season::Autumn),
            12 | 1 | 2 => Some(Season::Winter),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Season::Spring => "spring",
            Season::Summer => "summer",
            Season::Autumn => "autumn",
            Season::Winter => "winter",
        }
    }

    pub fn parse(s: &str) -> Result<Season, DataError> {
        match s {
            "spring" => Ok(Season::Spring),
            "summer" => Ok(Season::Summer),
            "autumn" => Ok(Season::Autumn),
            "winter" => Ok(Season::Winter),
            _ => Err(DataError::InvalidValue { field: "season".into(), value: s.into() }),
        }
    }
}

/// Decomposed event timestamp. Always present on a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamp {
    pub season: Season,
    pub year: i32,
    pub month: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    pub second: u32,
}

impl Timestamp {
    pub fn from_datetime(dt: NaiveDateTime) -> Timestamp {
        Timestamp {
            season: Season::of_month(dt.month()).expect("chrono months are 1..=12"),
            year: dt.year(),
            month: dt.month(),
            day: dt.day(),
            hour: dt.hour(),
            minute: dt.minute(),
            second: dt.second(),
        }
    }

    pub fn new(
        year: i32,
        month: u32,
        day: u32,
        hour: u32,
        minute: u32,
        second: u32,
    ) -> Result<Timestamp, DataError> {
        let dt = NaiveDate::from_ymd_opt(year, month, day)
            .and_then(|d| d.and_hms_opt(hour, minute, second))
            .ok_or_else(|| DataError::InvalidValue {
                field: "timestamp".into(),
                value: format!("{year}-{month}-{day} {hour}:{minute}:{second}"),
            })?;
        Ok(Timestamp::from_datetime(dt))
    }

    pub fn to_datetime(&self) -> Option<NaiveDateTime> {
        NaiveDate::from_ymd_opt(self.year, self.month, self.day)
            .and_then(|d| d.and_hms_opt(self.hour, self.minute, self.second))
    }

    /// Seconds since the Unix epoch, treating the stamp as UTC.
    pub fn epoch_seconds(&self) -> i64 {
        self.to_datetime().map(|dt| dt.and_utc().timestamp()).unwrap_or(0)
    }

    pub fn season_consistent(&self) -> bool {
        Season::of_month(self.month) == Some(self.season)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSnapshot {
    pub gps: GpsPosition,
    pub beacon: BeaconFields,
    pub alps: AlpsChannels,
    pub weather: WeatherFields,
    pub stamp: Timestamp,
}

impl EnvironmentSnapshot {
    pub fn empty(stamp: Timestamp) -> Self {
        EnvironmentSnapshot {
            gps: GpsPosition::default(),
            beacon: BeaconFields::default(),
            alps: AlpsChannels::default(),
            weather: WeatherFields::default(),
            stamp,
        }
    }

    pub fn get_numeric(&self, col: EnvNumeric) -> Option<f64> {
        match col {
            EnvNumeric::Latitude => self.gps.latitude,
            EnvNumeric::Longitude => self.gps.longitude,
            EnvNumeric::BeaconRssi => self.beacon.rssi,
            EnvNumeric::Alps(ch) => self.alps.get(ch),
            EnvNumeric::Weather(f) => self.weather.get(f),
        }
    }

    pub fn set_numeric(&mut self, col: EnvNumeric, v: Option<f64>) {
        match col {
            EnvNumeric::Latitude => self.gps.latitude = v,
            EnvNumeric::Longitude => self.gps.longitude = v,
            EnvNumeric::BeaconRssi => self.beacon.rssi = v,
            EnvNumeric::Alps(ch) => self.alps.set(ch, v),
            EnvNumeric::Weather(f) => self.weather.set(f, v),
        }
    }

    pub fn get_categorical(&self, col: EnvCategorical) -> Option<&str> {
        match col {
            EnvCategorical::BeaconName => self.beacon.name.as_deref(),
            EnvCategorical::WeatherCondition => self.weather.condition.as_deref(),
            EnvCategorical::WeatherDescription => self.weather.description.as_deref(),
        }
    }

    pub fn set_categorical(&mut self, col: EnvCategorical, v: Option<String>) {
        match col {
            EnvCategorical::BeaconName => self.beacon.name = v,
            EnvCategorical::WeatherCondition => self.weather.condition = v,
            EnvCategorical::WeatherDescription => self.weather.description = v,
        }
    }

    /// True when every imputable field (numeric and categorical) is present.
    pub fn is_complete(&self) -> bool {
        EnvNumeric::all().iter().all(|&c| self.get_numeric(c).is_some())
            && EnvCategorical::ALL.iter().all(|&c| self.get_categorical(c).is_some())
    }

    /// Physical-range check for every present value.
    pub fn values_in_range(&self) -> bool {
        let alps_ok = AlpsChannel::ALL
            .iter()
            .all(|&ch| self.alps.get(ch).is_none_or(|v| ch.in_range(v)));
        let weather_ok = WeatherNumeric::ALL
            .iter()
            .all(|&f| self.weather.get(f).is_none_or(|v| f.valid(v)));
        alps_ok && weather_ok && self.stamp.season_consistent()
    }
}

/// Numeric environment columns that may be missing and get imputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvNumeric {
    Latitude,
    Longitude,
    BeaconRssi,
    Alps(AlpsChannel),
    Weather(WeatherNumeric),
}

impl EnvNumeric {
    pub fn all() -> Vec<EnvNumeric> {
        let mut v = vec![EnvNumeric::Latitude, EnvNumeric::Longitude, EnvNumeric::BeaconRssi];
        v.extend(AlpsChannel::ALL.iter().map(|&c| EnvNumeric::Alps(c)));
        v.extend(WeatherNumeric::ALL.iter().map(|&f| EnvNumeric::Weather(f)));
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            EnvNumeric::Latitude => "latitude",
            EnvNumeric::Longitude => "longitude",
            EnvNumeric::BeaconRssi => "beacon_rssi",
            EnvNumeric::Alps(c) => c.name(),
            EnvNumeric::Weather(f) => f.name(),
        }
    }
}

/// Categorical environment columns that may be missing and get imputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvCategorical {
    BeaconName,
    WeatherCondition,
    WeatherDescription,
}

impl EnvCategorical {
    pub const ALL: [EnvCategorical; 3] = [
        EnvCategorical::BeaconName,
        EnvCategorical::WeatherCondition,
        EnvCategorical::WeatherDescription,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvCategorical::BeaconName => "beacon_name",
            EnvCategorical::WeatherCondition => "weather_condition",
            EnvCategorical::WeatherDescription => "weather_description",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn season_follows_month() {
        assert_eq!(Season::of_month(3), Some(Season::Spring));
        assert_eq!(Season::of_month(8), Some(Season::Summer));
        assert_eq!(Season::of_month(11), Some(Season::Autumn));
        assert_eq!(Season::of_month(1), Some(Season::Winter));
        assert_eq!(Season::of_month(13), None);
        let ts = Timestamp::new(2020, 12, 24, 10, 0, 0).unwrap();
        assert_eq!(ts.season, Season::Winter);
        assert!(ts.season_consistent());
    }

    #[test]
    fn mac_round_trips_through_text() {
        let mac: MacAddress = "F5:B0:E2:A2:AE:69".parse().unwrap();
        assert_eq!(mac.0, [0xF5, 0xB0, 0xE2, 0xA2, 0xAE, 0x69]);
        assert_eq!(mac.to_string(), "F5:B0:E2:A2:AE:69");
        assert!("F5:B0:E2".parse::<MacAddress>().is_err());
        assert!("F5:B0:E2:A2:AE:69:00".parse::<MacAddress>().is_err());
    }

    #[test]
    fn alps_range_edges() {
        assert!(AlpsChannel::Pressure.in_range(300.0));
        assert!(AlpsChannel::Pressure.in_range(1100.0));
        assert!(!AlpsChannel::Pressure.in_range(299.9));
        assert!(AlpsChannel::Humidity.in_range(100.0));
        assert!(!AlpsChannel::Humidity.in_range(100.1));
    }

    #[test]
    fn twenty_five_numeric_env_columns() {
        let all = EnvNumeric::all();
        assert_eq!(all.len(), 25);
        let mut names: Vec<_> = all.iter().map(|c| c.name()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 25);
    }
}
