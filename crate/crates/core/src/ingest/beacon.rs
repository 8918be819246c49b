//! iBeacon advertisement payloads.
//!
//! Layout (30 bytes):
//!
//! | offset | bytes | content                               |
//! |--------|-------|---------------------------------------|
//! | 0      | 3     | `02 01 06` flags AD structure         |
//! | 3      | 2     | `1A FF` length / manufacturer data    |
//! | 5      | 2     | `4C 00` company id (little-endian)    |
//! | 7      | 2     | `02 15` iBeacon type / length         |
//! | 9      | 16    | proximity UUID                        |
//! | 25     | 2     | major (big-endian)                    |
//! | 27     | 2     | minor (big-endian)                    |
//! | 29     | 1     | tx power, signed dBm at 1 m           |
//!
//! RSSI is not part of the payload; the capture layer supplies it.

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::datamodel::MacAddress;

pub const IBEACON_LEN: usize = 30;
pub const IBEACON_HEADER: [u8; 9] = [0x02, 0x01, 0x06, 0x1A, 0xFF, 0x4C, 0x00, 0x02, 0x15];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeaconFrame {
    pub raw: [u8; IBEACON_LEN],
    pub uuid: [u8; 16],
    pub major_field: u16,
    pub minor_field: u16,
    pub tx_power: i8,
    pub observed_rssi: i16,
}

impl BeaconFrame {
    pub fn new(uuid: [u8; 16], major_field: u16, minor_field: u16, tx_power: i8, observed_rssi: i16) -> Self {
        let mut raw = [0u8; IBEACON_LEN];
        raw[..9].copy_from_slice(&IBEACON_HEADER);
        raw[9..25].copy_from_slice(&uuid);
        raw[25..27].copy_from_slice(&major_field.to_be_bytes());
        raw[27..29].copy_from_slice(&minor_field.to_be_bytes());
        raw[29] = tx_power as u8;
        BeaconFrame { raw, uuid, major_field, minor_field, tx_power, observed_rssi }
    }

    pub fn serialize(&self) -> Vec<u8> {
        self.raw.to_vec()
    }

    /// Log-distance path-loss estimate (free space exponent 2), in metres.
    pub fn estimated_distance_m(&self) -> f64 {
        10f64.powf(f64::from(i16::from(self.tx_power) - self.observed_rssi) / 20.0)
    }
}

pub fn parse_ibeacon(bytes: &[u8], observed_rssi: i16) -> Result<BeaconFrame, IngestError> {
    if bytes.len() != IBEACON_LEN {
        return Err(IngestError::MalformedFrame {
            offset: bytes.len().min(IBEACON_LEN),
            reason: format!("expected {IBEACON_LEN} bytes, got {}", bytes.len()),
        });
    }
    if let Some(offset) = IBEACON_HEADER.iter().zip(bytes).position(|(want, got)| want != got) {
        let what = match offset {
            0..=2 => "flags",
            3..=4 => "length/type",
            5..=6 => "company identifier",
            _ => "iBeacon type",
        };
        return Err(IngestError::MalformedFrame {
            offset,
            reason: format!("bad {what} byte 0x{:02X}", bytes[offset]),
        });
    }
    let mut raw = [0u8; IBEACON_LEN];
    raw.copy_from_slice(bytes);
    let mut uuid = [0u8; 16];
    uuid.copy_from_slice(&bytes[9..25]);
    Ok(BeaconFrame {
        raw,
        uuid,
        major_field: u16::from_be_bytes([bytes[25], bytes[26]]),
        minor_field: u16::from_be_bytes([bytes[27], bytes[28]]),
        tx_power: bytes[29] as i8,
        observed_rssi,
    })
}

/// A received advertisement with the capture-layer metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeaconObservation {
    pub frame: BeaconFrame,
    pub mac: MacAddress,
    pub name: String,
}

/// Picks the observation with the strongest RSSI; ties keep the earliest.
pub fn strongest(observations: &[BeaconObservation]) -> Option<&BeaconObservation> {
    observations.iter().reduce(|best, o| if o.frame.observed_rssi > best.frame.observed_rssi { o } else { best })
}
