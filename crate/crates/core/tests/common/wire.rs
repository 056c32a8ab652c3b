//! Frame layouts worked out by hand from the field table.

use posekit_core::pipeline::{FrameType, WireEntry, WireFrame};

pub struct HandVector {
    pub name: &'static str,
    pub frame: WireFrame,
    pub bytes: Vec<u8>,
    /// Whether `bytes` include the stream length prefix.
    pub prefixed: bool,
}

pub fn hand_vectors() -> Vec<HandVector> {
    #[rustfmt::skip]
    let single = vec![
        0x45, 0x53, 0x4F, 0x50,                         // magic
        0x01,                                           // version
        0x01,                                           // keypoints3d
        0x01, 0x00,                                     // count
        0x01, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, // timestamp
        0x02, 0x00, 0x00, 0x00,                         // sequence
        0x00,                                           // id
        0x00, 0x00, 0x80, 0x3F,                         // 1.0
        0x00, 0x00, 0x00, 0xC0,                         // -2.0
        0x00, 0x00, 0x00, 0x3F,                         // 0.5
        0x00, 0x00, 0x80, 0x3F,                         // 1.0
    ];
    #[rustfmt::skip]
    let empty = vec![
        0x45, 0x53, 0x4F, 0x50, 0x01, 0x00, 0x00, 0x00,
        0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01,
        0xEF, 0xBE, 0xAD, 0xDE,
    ];
    #[rustfmt::skip]
    let joints = vec![
        0x36, 0x00, 0x00, 0x00,                         // length 54
        0x45, 0x53, 0x4F, 0x50, 0x01, 0x02, 0x02, 0x00,
        0x40, 0x42, 0x0F, 0x00, 0x00, 0x00, 0x00, 0x00, // 1_000_000
        0x2C, 0x01, 0x00, 0x00,                         // 300
        0x00,
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
        0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x80, 0x3F,
        0x05,
        0x00, 0x00, 0x80, 0x3E,                         // 0.25
        0x00, 0x00, 0x00, 0x00,
        0x00, 0x00, 0xC0, 0xBF,                         // -1.5
        0x00, 0x00, 0x00, 0x3F,                         // 0.5
    ];
    vec![
        HandVector {
            name: "single keypoint entry",
            frame: WireFrame {
                frame_type: FrameType::Keypoints3d,
                timestamp_us: 1,
                sequence: 2,
                entries: vec![WireEntry {
                    id: 0,
                    x: 1.0,
                    y: -2.0,
                    z: 0.5,
                    confidence: 1.0,
                }],
            },
            bytes: single,
            prefixed: false,
        },
        HandVector {
            name: "empty frame byte order",
            frame: WireFrame {
                frame_type: FrameType::Keypoints2d,
                timestamp_us: 0x0102_0304_0506_0708,
                sequence: 0xDEAD_BEEF,
                entries: vec![],
            },
            bytes: empty,
            prefixed: false,
        },
        HandVector {
            name: "joint frame with length prefix",
            frame: WireFrame {
                frame_type: FrameType::JointConfig,
                timestamp_us: 1_000_000,
                sequence: 300,
                entries: vec![
                    WireEntry {
                        id: 0,
                        x: 0.0,
                        y: 0.0,
                        z: 0.0,
                        confidence: 1.0,
                    },
                    WireEntry {
                        id: 5,
                        x: 0.25,
                        y: 0.0,
                        z: -1.5,
                        confidence: 0.5,
                    },
                ],
            },
            bytes: joints,
            prefixed: true,
        },
    ]
}
