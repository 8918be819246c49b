//! Dataset file: one CSV row per record, mandatory header, empty field = missing.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::matrix::format_f64;
use super::{
    AlpsChannel, BehaviorRecord, ChildCharacteristics, Class2, Class3, Class7, Condition, DataError,
    EnvCategorical, EnvNumeric, EnvironmentSnapshot, Gender, MajorCategoryFlags, MinorCategoryFlags,
    OutcomeLabels, Season, Timestamp, WeatherNumeric, MAJOR_NAMES, MINOR_NAMES,
};

pub fn record_header() -> Vec<String> {
    let mut h: Vec<String> =
        ["record_id", "child_id", "session_id", "gender", "condition"].iter().map(|s| s.to_string()).collect();
    h.extend(MAJOR_NAMES.iter().map(|n| format!("major_{n}")));
    h.extend(MINOR_NAMES.iter().map(|n| format!("minor_{n}")));
    h.extend(["latitude", "longitude", "beacon_rssi", "beacon_mac", "beacon_name"].map(String::from));
    h.extend(AlpsChannel::ALL.iter().map(|c| c.name().to_string()));
    h.push("weather_condition".into());
    h.push("weather_description".into());
    h.extend(WeatherNumeric::ALL.iter().map(|f| f.name().to_string()));
    h.extend(
        ["season", "year", "month", "day", "hour", "minute", "second", "class7", "class3", "class2"]
            .map(String::from),
    );
    h
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn record_fields(r: &BehaviorRecord) -> Vec<String> {
    let e = &r.env;
    let mut f = vec![
        r.record_id.to_string(),
        r.child_id.to_string(),
        r.session_id.to_string(),
        r.characteristics.gender.as_str().to_string(),
        r.characteristics.condition.as_str().to_string(),
    ];
    f.extend(r.major.0.iter().map(|&b| flag(b)));
    f.extend(r.minor.0.iter().map(|&b| flag(b)));
    f.push(opt_num(e.gps.latitude));
    f.push(opt_num(e.gps.longitude));
    f.push(opt_num(e.beacon.rssi));
    f.push(e.beacon.mac.map(|m| m.to_string()).unwrap_or_default());
    f.push(e.beacon.name.clone().unwrap_or_default());
    f.extend(AlpsChannel::ALL.iter().map(|&c| opt_num(e.alps.get(c))));
    f.push(e.weather.condition.clone().unwrap_or_default());
    f.push(e.weather.description.clone().unwrap_or_default());
    f.extend(WeatherNumeric::ALL.iter().map(|&w| opt_num(e.weather.get(w))));
    let s = &e.stamp;
    f.extend([
        s.season.as_str().to_string(),
        s.year.to_string(),
        s.month.to_string(),
        s.day.to_string(),
        s.hour.to_string(),
        s.minute.to_string(),
        s.second.to_string(),
        r.labels.class7.as_str().to_string(),
        r.labels.class3.as_str().to_string(),
        r.labels.class2.as_str().to_string(),
    ]);
    f
}

pub fn write_records_to<W: Write>(w: W, records: &[BehaviorRecord]) -> Result<(), DataError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(record_header())?;
    for r in records {
        wr.write_record(record_fields(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_records(path: &Path, records: &[BehaviorRecord]) -> Result<(), DataError> {
    write_records_to(File::create(path)?, records)
}

struct Fields<'a> {
    header: &'a [String],
    rec: &'a csv::StringRecord,
    row: usize,
}

impl Fields<'_> {
    fn raw(&self, name: &str) -> Result<&str, DataError> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::Malformed(format!("missing column `{name}`")))?;
        Ok(self.rec.get(idx).unwrap_or("").trim())
    }

    fn required(&self, name: &str) -> Result<&str, DataError> {
        let v = self.raw(name)?;
        if v.is_empty() {
            return Err(DataError::MissingData { column: name.into(), row: self.row });
        }
        Ok(v)
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T, DataError> {
        let v = self.required(name)?;
        v.parse().map_err(|_| DataError::InvalidValue { field: name.into(), value: v.into() })
    }

    fn opt_f64(&self, name: &str) -> Result<Option<f64>, DataError> {
        let v = self.raw(name)?;
        if v.is_empty() {
            return Ok(None);
        }
        v.parse()
            .map(Some)
            .map_err(|_| DataError::InvalidValue { field: name.into(), value: v.into() })
    }

    fn opt_string(&self, name: &str) -> Result<Option<String>, DataError> {
        let v = self.raw(name)?;
        Ok((!v.is_empty()).then(|| v.to_string()))
    }

    fn flag(&self, name: &str) -> Result<bool, DataError> {
        match self.required(name)? {
            "0" => Ok(false),
            "1" => Ok(true),
            v => Err(DataError::InvalidValue { field: name.into(), value: v.into() }),
        }
    }
}

fn parse_record(f: &Fields<'_>) -> Result<BehaviorRecord, DataError> {
    let mut major = [false; 6];
    for (j, n) in MAJOR_NAMES.iter().enumerate() {
        major[j] = f.flag(&format!("major_{n}"))?;
    }
    let mut minor = [false; 16];
    for (j, n) in MINOR_NAMES.iter().enumerate() {
        minor[j] = f.flag(&format!("minor_{n}"))?;
    }
    let stamp = Timestamp::new(
        f.parse("year")?,
        f.parse("month")?,
        f.parse("day")?,
        f.parse("hour")?,
        f.parse("minute")?,
        f.parse("second")?,
    )?;
    let season = Season::parse(f.required("season")?)?;
    if season != stamp.season {
        return Err(DataError::InvalidValue { field: "season".into(), value: season.as_str().into() });
    }
    let mut env = EnvironmentSnapshot::empty(stamp);
    for c in EnvNumeric::all() {
        env.set_numeric(c, f.opt_f64(c.name())?);
    }
    for c in EnvCategorical::ALL {
        env.set_categorical(c, f.opt_string(c.name())?);
    }
    env.beacon.mac = f.opt_string("beacon_mac")?.map(|s| s.parse()).transpose()?;
    if !env.values_in_range() {
        return Err(DataError::Malformed(format!("row {}: environment value out of physical range", f.row)));
    }
    Ok(BehaviorRecord {
        record_id: f.parse("record_id")?,
        child_id: f.parse("child_id")?,
        session_id: f.parse("session_id")?,
        characteristics: ChildCharacteristics {
            gender: Gender::parse(f.required("gender")?)?,
            condition: Condition::parse(f.required("condition")?)?,
        },
        major: MajorCategoryFlags(major),
        minor: MinorCategoryFlags(minor),
        env,
        labels: OutcomeLabels {
            class7: Class7::parse(f.required("class7")?)?,
            class3: Class3::parse(f.required("class3")?)?,
            class2: Class2::parse(f.required("class2")?)?,
        },
    })
}

pub fn read_records_from<R: Read>(r: R) -> Result<Vec<BehaviorRecord>, DataError> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut out = Vec::new();
    let mut ids = std::collections::HashSet::new();
    for (row, rec) in rd.records().enumerate() {
        let rec = rec?;
        let record = parse_record(&Fields { header: &header, rec: &rec, row })?;
        if !ids.insert(record.record_id) {
            return Err(DataError::Malformed(format!("duplicate record_id {}", record.record_id)));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<BehaviorRecord>, DataError> {
    read_records_from(File::open(path)?)
}
