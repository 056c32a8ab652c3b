//! Wire codec: byte layout, round trips and hostile input.

use posekit_core::pipeline::transport::{write_frame, FrameReader};
use posekit_core::pipeline::{decode_frame, encode_frame, FrameType, WireEntry, WireError, WireFrame};
use proptest::prelude::*;

mod common;
use common::wire::hand_vectors;

#[test]
fn hand_derived_vectors_match_bit_exactly() {
    for v in hand_vectors() {
        if v.prefixed {
            let mut buf = Vec::new();
            write_frame(&mut buf, &v.frame).unwrap();
            assert_eq!(buf, v.bytes, "{}", v.name);
            assert_eq!(
                FrameReader::new(&v.bytes[..]).next_frame().unwrap(),
                Some(v.frame),
                "{}",
                v.name
            );
        } else {
            assert_eq!(encode_frame(&v.frame).unwrap(), v.bytes, "{}", v.name);
            assert_eq!(decode_frame(&v.bytes).unwrap(), v.frame, "{}", v.name);
        }
    }
}

fn arb_frame() -> impl Strategy<Value = WireFrame> {
    let entry =
        (any::<u8>(), any::<f32>(), any::<f32>(), any::<f32>(), any::<f32>()).prop_map(|(id, x, y, z, confidence)| {
            WireEntry {
                id,
                x,
                y,
                z,
                confidence,
            }
        });
    (0u8..3, any::<u64>(), any::<u32>(), prop::collection::vec(entry, 0..40)).prop_map(|(t, ts, seq, entries)| {
        WireFrame {
            frame_type: FrameType::try_from(t).unwrap(),
            timestamp_us: ts,
            sequence: seq,
            entries,
        }
    })
}

/// Bitwise comparison, so NaN payloads count too.
fn same(a: &WireFrame, b: &WireFrame) -> bool {
    let bits = |e: &WireEntry| {
        (
            e.id,
            e.x.to_bits(),
            e.y.to_bits(),
            e.z.to_bits(),
            e.confidence.to_bits(),
        )
    };
    a.frame_type == b.frame_type
        && a.timestamp_us == b.timestamp_us
        && a.sequence == b.sequence
        && a.entries.iter().map(bits).eq(b.entries.iter().map(bits))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn round_trip_is_identity(f in arb_frame()) {
        let bytes = encode_frame(&f).unwrap();
        prop_assert_eq!(bytes.len(), 20 + 17 * f.entries.len());
        prop_assert_eq!(&bytes[..4], &[0x45u8, 0x53, 0x4F, 0x50][..]);
        prop_assert!(same(&decode_frame(&bytes).unwrap(), &f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn every_truncation_is_a_typed_error(f in arb_frame()) {
        let bytes = encode_frame(&f).unwrap();
        for cut in 0..bytes.len() {
            let r = decode_frame(&bytes[..cut]);
            let truncated = matches!(r, Err(WireError::TruncatedFrame { .. }));
            prop_assert!(truncated, "cut {}: {:?}", cut, r);
        }
    }

    #[test]
    fn corrupted_bytes_never_panic(f in arb_frame(), flips in prop::collection::vec((any::<prop::sample::Index>(), any::<u8>()), 1..8)) {
        let mut bytes = encode_frame(&f).unwrap();
        for (at, value) in flips {
            let i = at.index(bytes.len());
            bytes[i] = value;
        }
        let _ = decode_frame(&bytes);
    }

    #[test]
    fn garbage_streams_end_in_errors_not_panics(noise in prop::collection::vec(any::<u8>(), 0..400)) {
        for item in FrameReader::new(&noise[..]) {
            if item.is_err() {
                break;
            }
        }
    }

    #[test]
    fn truncated_stream_delivers_prefix_then_error(frames in prop::collection::vec(arb_frame(), 1..6), cut in any::<prop::sample::Index>()) {
        let mut buf = Vec::new();
        let mut ends = Vec::new();
        for f in &frames {
            write_frame(&mut buf, f).unwrap();
            ends.push(buf.len());
        }
        let cut = cut.index(buf.len());
        let complete = ends.iter().filter(|&&e| e <= cut).count();
        let mut reader = FrameReader::new(&buf[..cut]);
        for f in &frames[..complete] {
            prop_assert!(same(&reader.next_frame().unwrap().unwrap(), f));
        }
        let tail = reader.next_frame();
        if ends.contains(&cut) || cut == 0 {
            prop_assert!(matches!(tail, Ok(None)));
        } else {
            let truncated = matches!(tail, Err(WireError::TruncatedFrame { .. }));
            prop_assert!(truncated);
        }
    }
}

#[test]
fn unsupported_version_rejected_before_payload() {
    let mut bytes = encode_frame(&WireFrame {
        frame_type: FrameType::Keypoints3d,
        timestamp_us: 0,
        sequence: 0,
        entries: vec![],
    })
    .unwrap();
    bytes[4] = 2;
    bytes.truncate(10);
    assert!(matches!(decode_frame(&bytes), Err(WireError::UnsupportedVersion(2))));
}
