//! Source payload parsers and record assembly.
//!
//! Four sources feed a behavior event: an iBeacon advertisement (indoor
//! location), an ALPS sensor frame, a GPS fix and a weather reading. Records
//! are persisted to a local append-only JSON-lines store.

mod alps;
mod beacon;
mod weather;

pub use alps::{parse_alps, AlpsFrame, ALPS_FRAME_LEN, ALPS_HEADER};
pub use beacon::{parse_ibeacon, strongest, BeaconFrame, BeaconObservation, IBEACON_HEADER, IBEACON_LEN};
pub use weather::{
    fetch_weather, fixture_name, write_fixture, WeatherResponse, WeatherSource, API_KEY_ENV, ENDPOINT_ENV,
};

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    BehaviorRecord, ChildCharacteristics, EnvironmentSnapshot, MajorCategoryFlags, MinorCategoryFlags,
    OutcomeLabels, Timestamp,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed frame at byte {offset}: {reason}")]
    MalformedFrame { offset: usize, reason: String },
    #[error("channel `{channel}` out of range: {value}")]
    Range { channel: &'static str, value: f64 },
    #[error("source unavailable: {0}")]
    SourceUnavailable(String),
    #[error("invalid weather document: {0}")]
    InvalidDocument(String),
    #[error("event has no associated source data")]
    Discarded,
    #[error("record {0}: major flags disagree with minor flags")]
    InconsistentFlags(u64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A coded behavior event before any environment data is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorEvent {
    pub record_id: u64,
    pub child_id: u32,
    pub session_id: u32,
    pub stamp: Timestamp,
    pub characteristics: ChildCharacteristics,
    pub major: MajorCategoryFlags,
    pub minor: MinorCategoryFlags,
    pub labels: OutcomeLabels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsFix {
    pub latitude: f64,
    pub longitude: f64,
}

/// Everything captured around one event. Beacon list may hold several
/// simultaneous advertisements; the strongest one is used.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub event: BehaviorEvent,
    pub beacons: Vec<BeaconObservation>,
    pub alps: Option<AlpsFrame>,
    pub gps: Option<GpsFix>,
    pub weather: Option<WeatherResponse>,
}

/// Attaches source data to an event. Absent sources leave their fields
/// missing; an event with no source data at all is discarded.
pub fn assemble_record(
    event: &BehaviorEvent,
    beacon: Option<&BeaconObservation>,
    alps: Option<&AlpsFrame>,
    gps: Option<&GpsFix>,
    weather: Option<&WeatherResponse>,
) -> Result<BehaviorRecord, IngestError> {
    if !event.major.consistent_with(&event.minor) {
        return Err(IngestError::InconsistentFlags(event.record_id));
    }
    let mut env = EnvironmentSnapshot::empty(event.stamp);
    if let Some(b) = beacon {
        env.beacon.rssi = Some(f64::from(b.frame.observed_rssi));
        env.beacon.mac = Some(b.mac);
        env.beacon.name = Some(b.name.clone());
    }
    if let Some(a) = alps {
        env.alps = a.channels;
    }
    if let Some(g) = gps {
        env.gps.latitude = Some(g.latitude);
        env.gps.longitude = Some(g.longitude);
    }
    if let Some(w) = weather {
        env.weather = w.fields.clone();
    }
    if env.beacon.is_empty() && env.alps.is_empty() && env.gps.latitude.is_none() && env.weather.is_empty() {
        return Err(IngestError::Discarded);
    }
    Ok(BehaviorRecord {
        record_id: event.record_id,
        child_id: event.child_id,
        session_id: event.session_id,
        characteristics: event.characteristics,
        major: event.major,
        minor: event.minor,
        env,
        labels: event.labels,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub records_in: usize,
    pub records_retained: usize,
    pub records_discarded: usize,
}

/// Assembles a batch; discards are counted, other errors abort.
pub fn ingest_batch(captures: &[Capture]) -> Result<(Vec<BehaviorRecord>, IngestStats), IngestError> {
    let mut records = Vec::with_capacity(captures.len());
    let mut stats = IngestStats { records_in: captures.len(), ..Default::default() };
    for c in captures {
        match assemble_record(&c.event, strongest(&c.beacons), c.alps.as_ref(), c.gps.as_ref(), c.weather.as_ref()) {
            Ok(r) => records.push(r),
            Err(IngestError::Discarded) => stats.records_discarded += 1,
            Err(e) => return Err(e),
        }
    }
    stats.records_retained = records.len();
    Ok((records, stats))
}

/// Append-only JSON-lines record store. One writer at a time.
#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    file: File,
}

impl RecordStore {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(RecordStore { path, file })
    }

    pub fn append(&mut self, record: &BehaviorRecord) -> Result<(), IngestError> {
        let mut line = serde_json::to_vec(record)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        Ok(())
    }

    pub fn append_all(&mut self, records: &[BehaviorRecord]) -> Result<(), IngestError> {
        records.iter().try_for_each(|r| self.append(r))?;
        self.file.flush()?;
        Ok(())
    }

    pub fn read_all(&self) -> Result<Vec<BehaviorRecord>, IngestError> {
        let reader = BufReader::new(File::open(&self.path)?);
        let mut out = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                out.push(serde_json::from_str(&line)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{AlpsChannel, Class7, Condition, Gender, LabelMapping, MacAddress};

    fn event() -> BehaviorEvent {
        let mut minor = MinorCategoryFlags::default();
        minor.0[4] = true;
        BehaviorEvent {
            record_id: 1,
            child_id: 3,
            session_id: 7,
            stamp: Timestamp::new(2020, 11, 5, 10, 15, 0).unwrap(),
            characteristics: ChildCharacteristics { gender: Gender::Male, condition: Condition::PimdSmid },
            major: minor.implied_major(),
            minor,
            labels: LabelMapping::default().labels_for(Class7::Interest),
        }
    }

    fn beacon() -> BeaconObservation {
        BeaconObservation {
            frame: BeaconFrame::new([1; 16], 1, 2, -59, -64),
            mac: "F5:B0:E2:A2:AE:69".parse::<MacAddress>().unwrap(),
            name: "classroom".into(),
        }
    }

    fn alps() -> AlpsFrame {
        let mut channels = crate::datamodel::AlpsChannels::default();
        for ch in AlpsChannel::ALL {
            channels.set(ch, Some(ch.range().0.max(1.0).min(ch.range().1)));
        }
        channels.set(AlpsChannel::Pressure, Some(1012.0));
        AlpsFrame { counter: 1, channels }
    }

    fn weather() -> WeatherResponse {
        let mut r = WeatherResponse::default();
        r.fields.condition = Some("Clear".into());
        r.fields.description = Some("clear sky".into());
        for f in crate::datamodel::WeatherNumeric::ALL {
            r.fields.set(f, Some(10.0));
        }
        r.fields.set(crate::datamodel::WeatherNumeric::Sunset, Some(60000.0));
        r.fields.set(crate::datamodel::WeatherNumeric::Pressure, Some(1010.0));
        r
    }

    #[test]
    fn all_sources_give_complete_record() {
        let gps = GpsFix { latitude: 33.795098, longitude: 132.8702426 };
        let r = assemble_record(&event(), Some(&beacon()), Some(&alps()), Some(&gps), Some(&weather())).unwrap();
        assert!(r.env.is_complete());
        assert_eq!(r.env.beacon.rssi, Some(-64.0));
    }

    #[test]
    fn gps_only_record_is_retained() {
        let gps = GpsFix { latitude: 33.8, longitude: 132.9 };
        let r = assemble_record(&event(), None, None, Some(&gps), None).unwrap();
        assert_eq!(r.env.gps.latitude, Some(33.8));
        assert!(r.env.beacon.is_empty() && r.env.alps.is_empty() && r.env.weather.is_empty());
    }

    #[test]
    fn no_source_event_is_discarded_and_counted() {
        assert!(matches!(assemble_record(&event(), None, None, None, None), Err(IngestError::Discarded)));
        let gps = GpsFix { latitude: 33.8, longitude: 132.9 };
        let mut e2 = event();
        e2.record_id = 2;
        let captures = vec![
            Capture { event: event(), beacons: vec![], alps: None, gps: Some(gps), weather: None },
            Capture { event: e2, beacons: vec![], alps: None, gps: None, weather: None },
        ];
        let (records, stats) = ingest_batch(&captures).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(stats.records_discarded, 1);
        assert_eq!(stats.records_in, stats.records_retained + stats.records_discarded);
    }

    #[test]
    fn inconsistent_flags_rejected() {
        let mut e = event();
        e.major.0[0] = true;
        let gps = GpsFix { latitude: 33.8, longitude: 132.9 };
        assert!(matches!(
            assemble_record(&e, None, None, Some(&gps), None),
            Err(IngestError::InconsistentFlags(1))
        ));
    }

    #[test]
    fn store_appends_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let gps = GpsFix { latitude: 33.8, longitude: 132.9 };
        let r = assemble_record(&event(), Some(&beacon()), None, Some(&gps), None).unwrap();
        {
            let mut store = RecordStore::open(&path).unwrap();
            store.append_all(std::slice::from_ref(&r)).unwrap();
        }
        let mut store = RecordStore::open(&path).unwrap();
        store.append(&r).unwrap();
        assert_eq!(store.read_all().unwrap(), vec![r.clone(), r]);
    }
}
