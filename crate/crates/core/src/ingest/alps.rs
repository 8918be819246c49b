//! ALPS sensor frames.
//!
//! Layout (52 bytes, little-endian):
//!
//! | offset | bytes | content                                  |
//! |--------|-------|------------------------------------------|
//! | 0      | 2     | magic `41 4C` ("AL")                     |
//! | 2      | 1     | format version `01`                      |
//! | 3      | 1     | channel count `0B`                       |
//! | 4      | 4     | frame counter, u32                       |
//! | 8      | 44    | 11 channels, f32, in [`AlpsChannel::ALL`] order |
//!
//! A channel holding the canonical quiet NaN (`0x7FC00000`) was not reported.

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::datamodel::{AlpsChannel, AlpsChannels};

pub const ALPS_FRAME_LEN: usize = 52;
pub const ALPS_HEADER: [u8; 4] = [0x41, 0x4C, 0x01, 0x0B];
const NOT_REPORTED: u32 = 0x7FC0_0000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlpsFrame {
    pub counter: u32,
    pub channels: AlpsChannels,
}

impl AlpsFrame {
    /// Channel values are stored as f32 on the wire; callers wanting an exact
    /// round trip should pass f32-representable values.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ALPS_FRAME_LEN);
        out.extend_from_slice(&ALPS_HEADER);
        out.extend_from_slice(&self.counter.to_le_bytes());
        for ch in AlpsChannel::ALL {
            let bits = match self.channels.get(ch) {
                Some(v) => (v as f32).to_bits(),
                None => NOT_REPORTED,
            };
            out.extend_from_slice(&bits.to_le_bytes());
        }
        out
    }
}

pub fn parse_alps(payload: &[u8]) -> Result<AlpsFrame, IngestError> {
    if payload.len() != ALPS_FRAME_LEN {
        return Err(IngestError::MalformedFrame {
            offset: payload.len().min(ALPS_FRAME_LEN),
            reason: format!("expected {ALPS_FRAME_LEN} bytes, got {}", payload.len()),
        });
    }
    if let Some(offset) = ALPS_HEADER.iter().zip(payload).position(|(a, b)| a != b) {
        return Err(IngestError::MalformedFrame {
            offset,
            reason: format!("bad header byte 0x{:02X}", payload[offset]),
        });
    }
    let counter = u32::from_le_bytes(payload[4..8].try_into().expect("4 bytes"));
    let mut channels = AlpsChannels::default();
    for (i, ch) in AlpsChannel::ALL.into_iter().enumerate() {
        let off = 8 + 4 * i;
        let bits = u32::from_le_bytes(payload[off..off + 4].try_into().expect("4 bytes"));
        if bits == NOT_REPORTED {
            continue;
        }
        let v = f32::from_bits(bits);
        if !v.is_finite() {
            return Err(IngestError::MalformedFrame { offset: off, reason: format!("non-finite {}", ch.name()) });
        }
        let v = f64::from(v);
        if !ch.in_range(v) {
            return Err(IngestError::Range { channel: ch.name(), value: v });
        }
        channels.set(ch, Some(v));
    }
    Ok(AlpsFrame { counter, channels })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_with(ch: AlpsChannel, v: f64) -> Vec<u8> {
        let mut channels = AlpsChannels::default();
        channels.set(AlpsChannel::Pressure, Some(1013.0));
        channels.set(ch, Some(v));
        AlpsFrame { counter: 9, channels }.serialize()
    }

    #[test]
    fn pressure_limits() {
        assert!(parse_alps(&frame_with(AlpsChannel::Pressure, 300.0)).is_ok());
        assert!(parse_alps(&frame_with(AlpsChannel::Pressure, 1100.0)).is_ok());
        match parse_alps(&frame_with(AlpsChannel::Pressure, 299.9)) {
            Err(IngestError::Range { channel, .. }) => assert_eq!(channel, "pressure"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn humidity_limits() {
        assert!(parse_alps(&frame_with(AlpsChannel::Humidity, 0.0)).is_ok());
        assert!(parse_alps(&frame_with(AlpsChannel::Humidity, 100.0)).is_ok());
        assert!(matches!(
            parse_alps(&frame_with(AlpsChannel::Humidity, 100.1)),
            Err(IngestError::Range { channel: "humidity", .. })
        ));
    }

    #[test]
    fn short_frame_and_missing_channels() {
        let bytes = frame_with(AlpsChannel::Temperature, 21.5);
        assert!(matches!(parse_alps(&bytes[..40]), Err(IngestError::MalformedFrame { .. })));
        let f = parse_alps(&bytes).unwrap();
        assert_eq!(f.counter, 9);
        assert_eq!(f.channels.get(AlpsChannel::Temperature), Some(21.5));
        assert_eq!(f.channels.get(AlpsChannel::UvRange), None);
        assert_eq!(f.serialize(), bytes);
    }

    #[test]
    fn rejects_infinite_channel() {
        let mut bytes = frame_with(AlpsChannel::Temperature, 21.5);
        bytes[8..12].copy_from_slice(&f32::INFINITY.to_bits().to_le_bytes());
        assert!(matches!(parse_alps(&bytes), Err(IngestError::MalformedFrame { offset: 8, .. })));
    }
}
