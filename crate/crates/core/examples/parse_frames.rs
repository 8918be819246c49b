//! Round-trip iBeacon and ALPS sensor frames and show a rejected header.
use behavior_bench::datamodel::{AlpsChannel, AlpsChannels};
use behavior_bench::ingest::{parse_alps, parse_ibeacon, AlpsFrame, BeaconFrame};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let beacon = BeaconFrame::new([0xAB; 16], 1, 42, -59, -71);
    let bytes = beacon.serialize();
    let parsed = parse_ibeacon(&bytes, -71)?;
    println!("beacon major {} minor {} ~{:.1} m away", parsed.major_field, parsed.minor_field, parsed.estimated_distance_m());

    let mut corrupt = bytes.clone();
    corrupt[5] ^= 0xFF;
    println!("corrupted header: {}", parse_ibeacon(&corrupt, -71).unwrap_err());

    let mut channels = AlpsChannels::default();
    channels.set(AlpsChannel::ALL[0], Some(3.5));
    let frame = AlpsFrame { counter: 7, channels };
    let back = parse_alps(&frame.serialize())?;
    println!("alps counter {} first channel {:?}", back.counter, back.channels.get(AlpsChannel::ALL[0]));
    Ok(())
}
