//! Binary frame layout, little-endian throughout:
//!
//! ```text
//! offset  size  field
//!      0     4  magic 0x504F5345 (bytes "ESOP")
//!      4     1  version = 1
//!      5     1  frame type: 0 keypoints2d, 1 keypoints3d, 2 joint_config
//!      6     2  entry count
//!      8     8  timestamp, microseconds
//!     16     4  sequence
//!     20  17·n  entries: id u8, x f32, y f32, z f32, confidence f32
//! ```
//!
//! Pixel frames carry `u, v` in `x, y`. Joint frames carry one entry per
//! rig joint with the rotation as an axis-angle vector in `x, y, z` and the
//! output status in `confidence` (1 fresh, 0.5 stale, 0 starved).

use std::sync::Arc;

use thiserror::Error;

use super::Status;
use crate::geometry::{Rotation, Vec3};
use crate::skeleton::{AvatarRig, JointConfiguration, Keypoint, KeypointFrame, LandmarkScheme, SpaceTag};

pub const MAGIC: u32 = 0x504F_5345;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;
pub const ENTRY_LEN: usize = 17;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("unknown frame type {0}")]
    UnknownFrameType(u8),
    #[error("frame truncated: need {needed} bytes, have {got}")]
    TruncatedFrame { needed: usize, got: usize },
    #[error("count {declared} implies {expected} bytes but frame has {got}")]
    CountMismatch { declared: u16, expected: usize, got: usize },
    #[error("{0} entries do not fit in one frame")]
    TooManyEntries(usize),
    #[error("length prefix {0} exceeds the largest possible frame")]
    FrameTooLarge(u32),
    #[error("expected a {expected:?} frame, got {got:?}")]
    WrongFrameType { expected: FrameType, got: FrameType },
    #[error("frame does not match {what}: {detail}")]
    SchemeMismatch { what: String, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameType {
    Keypoints2d = 0,
    Keypoints3d = 1,
    JointConfig = 2,
}

impl TryFrom<u8> for FrameType {
    type Error = WireError;

    fn try_from(b: u8) -> Result<Self, WireError> {
        match b {
            0 => Ok(Self::Keypoints2d),
            1 => Ok(Self::Keypoints3d),
            2 => Ok(Self::JointConfig),
            other => Err(WireError::UnknownFrameType(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireEntry {
    pub id: u8,
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub confidence: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WireFrame {
    pub frame_type: FrameType,
    pub timestamp_us: u64,
    pub sequence: u32,
    pub entries: Vec<WireEntry>,
}

pub fn encode_frame(frame: &WireFrame) -> Result<Vec<u8>, WireError> {
    let count = u16::try_from(frame.entries.len()).map_err(|_| WireError::TooManyEntries(frame.entries.len()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + ENTRY_LEN * frame.entries.len());
    out.extend_from_slice(&MAGIC.to_le_bytes());
    out.push(VERSION);
    out.push(frame.frame_type as u8);
    out.extend_from_slice(&count.to_le_bytes());
    out.extend_from_slice(&frame.timestamp_us.to_le_bytes());
    out.extend_from_slice(&frame.sequence.to_le_bytes());
    for e in &frame.entries {
        out.push(e.id);
        for v in [e.x, e.y, e.z, e.confidence] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn le<const N: usize>(bytes: &[u8], at: usize) -> [u8; N] {
    bytes[at..at + N].try_into().expect("slice length checked by caller")
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<WireFrame, WireError> {
    if bytes.len() >= 4 {
        let magic = u32::from_le_bytes(le(bytes, 0));
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
    }
    if bytes.len() >= 5 && bytes[4] != VERSION {
        return Err(WireError::UnsupportedVersion(bytes[4]));
    }
    if bytes.len() < HEADER_LEN {
        return Err(WireError::TruncatedFrame {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let frame_type = FrameType::try_from(bytes[5])?;
    let declared = u16::from_le_bytes(le(bytes, 6));
    let expected = HEADER_LEN + ENTRY_LEN * declared as usize;
    if bytes.len() < expected {
        return Err(WireError::TruncatedFrame {
            needed: expected,
            got: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(WireError::CountMismatch {
            declared,
            expected,
            got: bytes.len(),
        });
    }
    let entries = bytes[HEADER_LEN..]
        .chunks_exact(ENTRY_LEN)
        .map(|c| WireEntry {
            id: c[0],
            x: f32::from_le_bytes(le(c, 1)),
            y: f32::from_le_bytes(le(c, 5)),
            z: f32::from_le_bytes(le(c, 9)),
            confidence: f32::from_le_bytes(le(c, 13)),
        })
        .collect();
    Ok(WireFrame {
        frame_type,
        timestamp_us: u64::from_le_bytes(le(bytes, 8)),
        sequence: u32::from_le_bytes(le(bytes, 16)),
        entries,
    })
}

impl WireFrame {
    pub fn from_keypoints(frame: &KeypointFrame) -> Result<Self, WireError> {
        if frame.points.len() > u8::MAX as usize + 1 {
            return Err(WireError::TooManyEntries(frame.points.len()));
        }
        let frame_type = match frame.space {
            SpaceTag::Camera2d => FrameType::Keypoints2d,
            SpaceTag::Camera3d | SpaceTag::World3d => FrameType::Keypoints3d,
        };
        Ok(Self {
            frame_type,
            timestamp_us: frame.timestamp_us,
            sequence: frame.sequence,
            entries: frame
                .points
                .iter()
                .enumerate()
                .map(|(id, kp)| WireEntry {
                    id: id as u8,
                    x: kp.position.x as f32,
                    y: kp.position.y as f32,
                    z: kp.position.z as f32,
                    confidence: kp.confidence as f32,
                })
                .collect(),
        })
    }

    /// Landmark frame in `scheme`; every landmark must appear exactly once.
    pub fn to_keypoints(&self, scheme: &Arc<LandmarkScheme>) -> Result<KeypointFrame, WireError> {
        let space = match self.frame_type {
            FrameType::Keypoints2d => SpaceTag::Camera2d,
            FrameType::Keypoints3d => SpaceTag::World3d,
            FrameType::JointConfig => {
                return Err(WireError::WrongFrameType {
                    expected: FrameType::Keypoints3d,
                    got: self.frame_type,
                })
            }
        };
        let mismatch = |detail: String| WireError::SchemeMismatch {
            what: format!("scheme {:?}", scheme.name()),
            detail,
        };
        let points = self.indexed(scheme.count()).map_err(mismatch)?;
        Ok(KeypointFrame {
            timestamp_us: self.timestamp_us,
            sequence: self.sequence,
            scheme: scheme.clone(),
            points: points
                .into_iter()
                .map(|e| Keypoint::new(Vec3::new(e.x as f64, e.y as f64, e.z as f64), e.confidence as f64))
                .collect(),
            space,
        })
    }

    pub fn from_joints(config: &JointConfiguration, status: Status) -> Result<Self, WireError> {
        if config.rotations.len() > u8::MAX as usize + 1 {
            return Err(WireError::TooManyEntries(config.rotations.len()));
        }
        Ok(Self {
            frame_type: FrameType::JointConfig,
            timestamp_us: config.timestamp_us,
            sequence: config.sequence,
            entries: config
                .rotations
                .iter()
                .enumerate()
                .map(|(id, r)| {
                    let v = r.scaled_axis();
                    WireEntry {
                        id: id as u8,
                        x: v.x as f32,
                        y: v.y as f32,
                        z: v.z as f32,
                        confidence: status.code(),
                    }
                })
                .collect(),
        })
    }

    /// Joint configuration for `rig` and the status it was emitted with,
    /// taken from the first entry.
    pub fn to_joints(&self, rig: &AvatarRig) -> Result<(JointConfiguration, Status), WireError> {
        if self.frame_type != FrameType::JointConfig {
            return Err(WireError::WrongFrameType {
                expected: FrameType::JointConfig,
                got: self.frame_type,
            });
        }
        let mismatch = |detail: String| WireError::SchemeMismatch {
            what: format!("rig {:?}", rig.name()),
            detail,
        };
        let entries = self.indexed(rig.len()).map_err(mismatch)?;
        let status = entries
            .first()
            .and_then(|e| Status::from_code(e.confidence))
            .ok_or_else(|| mismatch("missing or unknown status code".into()))?;
        let config = JointConfiguration {
            rotations: entries
                .iter()
                .map(|e| Rotation::from_scaled_axis(Vec3::new(e.x as f64, e.y as f64, e.z as f64)))
                .collect(),
            timestamp_us: self.timestamp_us,
            sequence: self.sequence,
            stale: status != Status::Fresh,
        };
        Ok((config, status))
    }

    /// Entries ordered by id, requiring ids `0..count` each exactly once.
    fn indexed(&self, count: usize) -> Result<Vec<WireEntry>, String> {
        if self.entries.len() != count {
            return Err(format!("{} entries, expected {count}", self.entries.len()));
        }
        let mut slots: Vec<Option<WireEntry>> = vec![None; count];
        for e in &self.entries {
            let slot = slots
                .get_mut(e.id as usize)
                .ok_or_else(|| format!("id {} out of range", e.id))?;
            if slot.replace(*e).is_some() {
                return Err(format!("id {} repeated", e.id));
            }
        }
        Ok(slots.into_iter().flatten().collect())
    }
}
