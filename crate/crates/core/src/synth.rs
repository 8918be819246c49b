//! Synthetic behavior datasets with the study's shape and missingness.
//!
//! Generation works at the capture level: every retained event gets a GPS
//! fix, an ALPS frame and, unless dropped by the missingness profile, an
//! iBeacon advertisement and a weather reading. Extra events with no source
//! data at all are appended and then discarded by ingest, as in the field.
//!
//! Class signal: each environment feature has a per-class mean offset drawn
//! once per seed; values are `center + spread * (env_signal * offset + noise)`.
//! Minor flags are Bernoulli with probabilities interpolated between a flat
//! base rate and a per-class prototype by `behavior_signal`.

use chrono::Datelike;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datamodel::{
    AlpsChannel, AlpsChannels, BehaviorRecord, ChildCharacteristics, Class7, Condition, Gender, LabelMapping,
    MacAddress, MinorCategoryFlags, Timestamp, WeatherFields, WeatherNumeric, MINOR_TO_MAJOR,
};
use crate::ingest::{
    ingest_batch, AlpsFrame, BeaconFrame, BeaconObservation, BehaviorEvent, Capture, GpsFix, IngestError,
    WeatherResponse,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Share of retained records missing each source or channel group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessProfile {
    pub beacon: f64,
    pub uv_range: f64,
    pub ambient_light: f64,
    /// Accel+geomag g1..g3, missing together.
    pub geomag_range: f64,
    /// Geomag uT1..uT3, missing together.
    pub geomag_resolution: f64,
    /// Whole weather reading absent.
    pub weather: f64,
    /// Wind direction absent, counting the rows where weather is absent.
    pub wind_direction: f64,
    pub gps: f64,
}

impl Default for MissingnessProfile {
    fn default() -> Self {
        MissingnessProfile {
            beacon: 0.158,
            uv_range: 0.336,
            ambient_light: 0.181,
            geomag_range: 0.0514,
            geomag_resolution: 0.0479,
            weather: 0.0479,
            wind_direction: 0.119,
            gps: 0.0,
        }
    }
}

impl MissingnessProfile {
    pub fn none() -> Self {
        MissingnessProfile {
            beacon: 0.0,
            uv_range: 0.0,
            ambient_light: 0.0,
            geomag_range: 0.0,
            geomag_resolution: 0.0,
            weather: 0.0,
            wind_direction: 0.0,
            gps: 0.0,
        }
    }

    fn rates(&self) -> [(&'static str, f64); 8] {
        [
            ("beacon", self.beacon),
            ("uv_range", self.uv_range),
            ("ambient_light", self.ambient_light),
            ("geomag_range", self.geomag_range),
            ("geomag_resolution", self.geomag_resolution),
            ("weather", self.weather),
            ("wind_direction", self.wind_direction),
            ("gps", self.gps),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_records: usize,
    pub n_children: usize,
    pub n_sessions: usize,
    /// Events with no source data, dropped at ingest.
    pub n_unmatched: usize,
    pub class7_distribution: [f64; 7],
    pub env_signal: f64,
    pub behavior_signal: f64,
    pub male_share: f64,
    pub pimd_share: f64,
    pub missingness: MissingnessProfile,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_records: 292,
            n_children: 20,
            n_sessions: 105,
            n_unmatched: 37,
            class7_distribution: [1.0 / 7.0; 7],
            env_signal: 0.8,
            behavior_signal: 0.5,
            male_share: 0.68,
            pimd_share: 0.79,
            missingness: MissingnessProfile::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Config(m));
        if self.n_records == 0 {
            return bad("n_records must be positive".into());
        }
        if self.n_children == 0 {
            return bad("n_children must be positive".into());
        }
        if self.n_sessions < self.n_children || self.n_sessions > self.n_records {
            return bad(format!(
                "n_sessions must lie in [n_children, n_records] = [{}, {}], got {}",
                self.n_children, self.n_records, self.n_sessions
            ));
        }
        let d = &self.class7_distribution;
        if d.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("class7 distribution has a negative or non-finite entry".into());
        }
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return bad(format!("class7 distribution sums to {total}, not 1"));
        }
        let unit = [
            ("env_signal", self.env_signal),
            ("behavior_signal", self.behavior_signal),
            ("male_share", self.male_share),
            ("pimd_share", self.pimd_share),
        ];
        for (name, v) in unit.into_iter().chain(self.missingness.rates()) {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.missingness.gps > 0.0 {
            // every retained record needs at least one source; GPS is the anchor
            return bad("gps missingness must be 0".into());
        }
        if self.missingness.wind_direction < self.missingness.weather {
            return bad("wind_direction missingness includes the weather-absent rows and cannot be smaller".into());
        }
        Ok(())
    }
}

/// Generated captures (retained events first, then unmatched ones).
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub captures: Vec<Capture>,
    pub records: Vec<BehaviorRecord>,
}

pub fn generate(cfg: &SynthConfig) -> Result<Vec<BehaviorRecord>, SynthError> {
    Ok(generate_with_captures(cfg)?.records)
}

pub fn generate_with_captures(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    let captures = generate_captures(cfg)?;
    let (records, stats) = ingest_batch(&captures)?;
    debug_assert_eq!(stats.records_retained, cfg.n_records);
    Ok(SynthOutput { captures, records })
}

const ROOMS: [&str; 4] = ["classroom", "music_room", "playroom", "hall"];
const CONDITIONS: [(&str, &[&str]); 3] = [
    ("Clear", &["clear sky"]),
    ("Clouds", &["few clouds", "scattered clouds", "broken clouds"]),
    ("Rain", &["light rain", "moderate rain"]),
];

/// Continuous features with class signal: (center, spread).
struct Feature {
    center: f64,
    spread: f64,
}

const fn feat(center: f64, spread: f64) -> Feature {
    Feature { center, spread }
}

// lat, lon, rssi, 11 ALPS channels, then weather temp_min offset, temp_max
// offset, pressure, temp_main, humidity, cloudiness, wind_direction, wind_speed
const FEATURES: [Feature; 22] = [
    feat(33.795098, 0.0008),
    feat(132.870243, 0.0008),
    feat(-70.0, 8.0),
    feat(1.2, 0.5),
    feat(400.0, 150.0),
    feat(0.0, 0.4),
    feat(0.0, 0.4),
    feat(0.9, 0.3),
    feat(30.0, 12.0),
    feat(-15.0, 12.0),
    feat(40.0, 12.0),
    feat(1010.0, 5.0),
    feat(24.0, 2.5),
    feat(50.0, 8.0),
    feat(2.5, 1.0),
    feat(2.5, 1.0),
    feat(1012.0, 6.0),
    feat(20.0, 5.0),
    feat(60.0, 12.0),
    feat(45.0, 20.0),
    feat(180.0, 60.0),
    feat(3.0, 1.2),
];
const F_LAT: usize = 0;
const F_LON: usize = 1;
const F_RSSI: usize = 2;
const F_ALPS: usize = 3;
const F_TMIN: usize = 14;
const F_TMAX: usize = 15;
const F_PRESS: usize = 16;
const F_TEMP: usize = 17;
const F_HUM: usize = 18;
const F_CLOUD: usize = 19;
const F_WDIR: usize = 20;
const F_WSPEED: usize = 21;

struct ClassModel {
    /// Mean offsets in spread units, per class then feature.
    offsets: Vec<[f64; 22]>,
    room_pref: Vec<[f64; 4]>,
    weather_pref: Vec<[f64; 3]>,
    minor_proto: Vec<[f64; 16]>,
}

const BASE_MINOR_RATE: f64 = 0.08;

impl ClassModel {
    fn draw(rng: &mut ChaCha8Rng) -> ClassModel {
        let mut normal = || -> f64 { StandardNormal.sample(&mut *rng) };
        let offsets = (0..7).map(|_| std::array::from_fn(|_| normal())).collect();
        let room_pref = (0..7).map(|_| std::array::from_fn(|_| normal())).collect();
        let weather_pref = (0..7).map(|_| std::array::from_fn(|_| normal())).collect();
        // Each class favors two major groups; its prototype minors sit inside them.
        let minor_proto = (0..7)
            .map(|_| {
                let a = rng.random_range(0..6);
                let b = (a + rng.random_range(1..6)) % 6;
                std::array::from_fn(|j| {
                    let favored = MINOR_TO_MAJOR[j] == a || MINOR_TO_MAJOR[j] == b;
                    if favored && rng.random_bool(0.7) { 0.7 } else { 0.03 }
                })
            })
            .collect();
        ClassModel { offsets, room_pref, weather_pref, minor_proto }
    }
}

fn softmax_pick<const N: usize>(prefs: &[f64; N], strength: f64, rng: &mut ChaCha8Rng) -> usize {
    let w: Vec<f64> = prefs.iter().map(|p| (2.0 * strength * p).exp()).collect();
    let mut u = rng.random::<f64>() * w.iter().sum::<f64>();
    for (i, wi) in w.iter().enumerate() {
        if u < *wi {
            return i;
        }
        u -= wi;
    }
    N - 1
}

fn pick_class(dist: &[f64; 7], rng: &mut ChaCha8Rng) -> Class7 {
    let mut u = rng.random::<f64>();
    for (i, p) in dist.iter().enumerate() {
        if u < *p {
            return Class7::ALL[i];
        }
        u -= p;
    }
    // rounding slack lands on the last class with positive mass
    let last = dist.iter().rposition(|p| *p > 0.0).unwrap_or(6);
    Class7::ALL[last]
}

/// Exactly `round(rate * n)` distinct indices.
fn exact_subset(n: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let k = ((rate * n as f64).round() as usize).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut mask = vec![false; n];
    for &i in &idx[..k] {
        mask[i] = true;
    }
    mask
}

/// Sessions per child: every child gets one, the rest are spread with
/// child-specific weights so counts vary.
fn sessions_per_child(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut counts = vec![1u32; cfg.n_children];
    let weights: Vec<f64> = (0..cfg.n_children).map(|_| rng.random_range(0.2..1.8)).collect();
    let total: f64 = weights.iter().sum();
    for _ in cfg.n_children..cfg.n_sessions {
        let mut u = rng.random::<f64>() * total;
        let mut pick = cfg.n_children - 1;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                pick = i;
                break;
            }
            u -= w;
        }
        counts[pick] += 1;
    }
    counts
}

struct Session {
    child: u32,
    start: chrono::NaiveDateTime,
}

fn session_start(rng: &mut ChaCha8Rng) -> chrono::NaiveDateTime {
    let base = chrono::NaiveDate::from_ymd_opt(2020, 6, 1).expect("valid date");
    let day = base + chrono::Days::new(rng.random_range(0..540));
    let hour = rng.random_range(8..15);
    let minute = rng.random_range(0..60);
    day.and_hms_opt(hour, minute, 0).expect("valid time")
}

fn mac_for_room(r: usize) -> MacAddress {
    MacAddress([0xF5, 0xB0, 0xE2, 0xA2, 0xAE, 0x60 + r as u8])
}

fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

pub fn generate_captures(cfg: &SynthConfig) -> Result<Vec<Capture>, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let model = ClassModel::draw(&mut rng);
    let mapping = LabelMapping::default();

    let children: Vec<ChildCharacteristics> = (0..cfg.n_children)
        .map(|_| ChildCharacteristics {
            gender: if rng.random_bool(cfg.male_share) { Gender::Male } else { Gender::Female },
            condition: if rng.random_bool(cfg.pimd_share) { Condition::PimdSmid } else { Condition::SevereProfoundId },
        })
        .collect();

    let mut sessions = Vec::with_capacity(cfg.n_sessions);
    for (child, count) in sessions_per_child(cfg, &mut rng).into_iter().enumerate() {
        for _ in 0..count {
            sessions.push(Session { child: child as u32, start: session_start(&mut rng) });
        }
    }

    // every session holds at least one event; the remainder land uniformly
    let n_total = cfg.n_records + cfg.n_unmatched;
    let mut session_of: Vec<usize> = (0..sessions.len()).collect();
    while session_of.len() < n_total {
        session_of.push(rng.random_range(0..sessions.len()));
    }
    session_of.truncate(n_total);
    session_of.shuffle(&mut rng);
    let mut cursor = vec![0u32; sessions.len()];
    let mut matched = vec![true; n_total];
    let mut order: Vec<usize> = (0..n_total).collect();
    order.shuffle(&mut rng);
    for &i in &order[..cfg.n_unmatched] {
        matched[i] = false;
    }

    let m = &cfg.missingness;
    let n = cfg.n_records;
    let no_beacon = exact_subset(n, m.beacon, &mut rng);
    let no_uv = exact_subset(n, m.uv_range, &mut rng);
    let no_ambient = exact_subset(n, m.ambient_light, &mut rng);
    let no_g = exact_subset(n, m.geomag_range, &mut rng);
    let no_ut = exact_subset(n, m.geomag_resolution, &mut rng);
    let no_weather = exact_subset(n, m.weather, &mut rng);
    let no_wind = {
        let extra = ((m.wind_direction * n as f64).round() as usize)
            .saturating_sub(no_weather.iter().filter(|&&b| b).count());
        let mut pool: Vec<usize> = (0..n).filter(|&i| !no_weather[i]).collect();
        pool.shuffle(&mut rng);
        let mut mask = no_weather.clone();
        for &i in pool.iter().take(extra) {
            mask[i] = true;
        }
        mask
    };

    let s = cfg.env_signal;
    let mut captures = Vec::with_capacity(n_total);
    let mut retained = 0usize;
    for (i, &sid) in session_of.iter().enumerate() {
        let session = &sessions[sid];
        cursor[sid] += 1;
        let at = session.start + chrono::Duration::seconds(i64::from(cursor[sid]) * rng.random_range(20..240));
        let stamp = Timestamp::from_datetime(at);
        let class7 = pick_class(&cfg.class7_distribution, &mut rng);
        let c = class7.index();

        let mut minor = MinorCategoryFlags::default();
        for (j, flag) in minor.0.iter_mut().enumerate() {
            let p = (1.0 - cfg.behavior_signal) * BASE_MINOR_RATE + cfg.behavior_signal * model.minor_proto[c][j];
            *flag = rng.random_bool(p);
        }
        if !minor.0.iter().any(|&b| b) {
            minor.0[rng.random_range(0..16)] = true;
        }
        let event = BehaviorEvent {
            record_id: i as u64 + 1,
            child_id: session.child + 1,
            session_id: sid as u32 + 1,
            stamp,
            characteristics: children[session.child as usize],
            major: minor.implied_major(),
            minor,
            labels: mapping.labels_for(class7),
        };

        if !matched[i] {
            captures.push(Capture { event, beacons: Vec::new(), alps: None, gps: None, weather: None });
            continue;
        }
        let r = retained;
        retained += 1;

        let value = |f: usize, rng: &mut ChaCha8Rng| {
            let noise: f64 = StandardNormal.sample(rng);
            FEATURES[f].center + FEATURES[f].spread * (s * model.offsets[c][f] + noise)
        };

        let gps = GpsFix { latitude: value(F_LAT, &mut rng), longitude: value(F_LON, &mut rng) };

        let rssi = value(F_RSSI, &mut rng).round().clamp(-100.0, -30.0) as i16;
        let room = softmax_pick(&model.room_pref[c], s, &mut rng);
        let beacons = if no_beacon[r] {
            Vec::new()
        } else {
            vec![BeaconObservation {
                frame: BeaconFrame::new([0x48; 16], 1, room as u16 + 1, -59, rssi),
                mac: mac_for_room(room),
                name: ROOMS[room].to_string(),
            }]
        };

        let mut channels = AlpsChannels::default();
        for (k, ch) in AlpsChannel::ALL.into_iter().enumerate() {
            let (lo, hi) = ch.range();
            let v = f32_exact(value(F_ALPS + k, &mut rng).clamp(lo, hi));
            let absent = match ch {
                AlpsChannel::UvRange => no_uv[r],
                AlpsChannel::AmbientLight => no_ambient[r],
                AlpsChannel::GeomagG1 | AlpsChannel::GeomagG2 | AlpsChannel::GeomagG3 => no_g[r],
                AlpsChannel::GeomagUt1 | AlpsChannel::GeomagUt2 | AlpsChannel::GeomagUt3 => no_ut[r],
                _ => false,
            };
            channels.set(ch, (!absent).then_some(v));
        }
        let alps = AlpsFrame { counter: r as u32, channels };

        let weather = if no_weather[r] {
            // keep the draws aligned so other rows do not shift
            for f in F_TMIN..=F_WSPEED {
                value(f, &mut rng);
            }
            softmax_pick(&model.weather_pref[c], s, &mut rng);
            rng.random::<f64>();
            None
        } else {
            let midnight = at.date().and_hms_opt(0, 0, 0).expect("valid").and_utc().timestamp() as f64;
            let season = (at.ordinal() as f64 / 365.25 * std::f64::consts::TAU).cos();
            let mut w = WeatherFields::default();
            let temp = value(F_TEMP, &mut rng);
            w.set(WeatherNumeric::Sunrise, Some(midnight + 3600.0 * (5.5 + 1.2 * season)));
            w.set(WeatherNumeric::Sunset, Some(midnight + 3600.0 * (18.0 - 1.3 * season)));
            w.set(WeatherNumeric::CurrentTime, Some(at.and_utc().timestamp() as f64));
            w.set(WeatherNumeric::TempMin, Some(temp - value(F_TMIN, &mut rng).abs()));
            w.set(WeatherNumeric::TempMax, Some(temp + value(F_TMAX, &mut rng).abs()));
            w.set(WeatherNumeric::Pressure, Some(value(F_PRESS, &mut rng).clamp(300.0, 1100.0)));
            w.set(WeatherNumeric::TempMain, Some(temp));
            w.set(WeatherNumeric::Humidity, Some(value(F_HUM, &mut rng).clamp(0.0, 100.0)));
            w.set(WeatherNumeric::Cloudiness, Some(value(F_CLOUD, &mut rng).clamp(0.0, 100.0)));
            let dir = value(F_WDIR, &mut rng).rem_euclid(360.0);
            w.set(WeatherNumeric::WindDirection, (!no_wind[r]).then_some(dir));
            w.set(WeatherNumeric::WindSpeed, Some(value(F_WSPEED, &mut rng).max(0.0)));
            let (cond, descs) = CONDITIONS[softmax_pick(&model.weather_pref[c], s, &mut rng)];
            w.condition = Some(cond.to_string());
            w.description = Some(descs[rng.random_range(0..descs.len())].to_string());
            Some(WeatherResponse { fields: w })
        };

        captures.push(Capture { event, beacons, alps: Some(alps), gps: Some(gps), weather });
    }
    Ok(captures)
}
