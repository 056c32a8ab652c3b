use std::sync::Arc;

use thiserror::Error;

use super::LandmarkScheme;
use crate::geometry::{is_finite, Vec3};

/// Minimum confidence for a landmark to be used, unless configured otherwise.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("frame has {got} points but scheme {scheme:?} has {expected}")]
    SchemeMismatch {
        scheme: String,
        expected: usize,
        got: usize,
    },
    #[error("landmark {landmark} has a non-finite coordinate")]
    NonFinite { landmark: usize },
    #[error("landmark {landmark} has confidence {value} outside [0, 1]")]
    BadConfidence { landmark: usize, value: f64 },
    #[error("landmark {landmark} confidence {confidence} is below threshold {threshold}")]
    LowConfidence {
        landmark: usize,
        confidence: f64,
        threshold: f64,
    },
    #[error("unknown landmark id {0}")]
    UnknownLandmark(usize),
    #[error("frame {sequence} at {timestamp_us}us arrives out of order")]
    OutOfOrder { sequence: u32, timestamp_us: u64 },
}

/// Coordinate space a frame's positions are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceTag {
    /// Pixel coordinates in `x`/`y`; `z` unused.
    Camera2d,
    Camera3d,
    World3d,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub position: Vec3,
    pub confidence: f64,
}

impl Keypoint {
    pub fn new(position: Vec3, confidence: f64) -> Self {
        Self { position, confidence }
    }

    pub fn occluded() -> Self {
        Self::new(Vec3::zeros(), 0.0)
    }
}

/// One timestamped observation of every landmark in a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointFrame {
    pub timestamp_us: u64,
    pub sequence: u32,
    pub scheme: Arc<LandmarkScheme>,
    pub points: Vec<Keypoint>,
    pub space: SpaceTag,
}

/// Checks a frame against `scheme` and hands it back untouched.
pub fn validate_frame(frame: KeypointFrame, scheme: &LandmarkScheme) -> Result<KeypointFrame, FrameError> {
    if frame.points.len() != scheme.count() {
        return Err(FrameError::SchemeMismatch {
            scheme: scheme.name().to_owned(),
            expected: scheme.count(),
            got: frame.points.len(),
        });
    }
    for (id, kp) in frame.points.iter().enumerate() {
        if !is_finite(&kp.position) || !kp.confidence.is_finite() {
            return Err(FrameError::NonFinite { landmark: id });
        }
        if !(0.0..=1.0).contains(&kp.confidence) {
            return Err(FrameError::BadConfidence {
                landmark: id,
                value: kp.confidence,
            });
        }
    }
    Ok(frame)
}

/// Vector from landmark `from` to landmark `to`.
pub fn bone_vector(frame: &KeypointFrame, from: usize, to: usize, threshold: f64) -> Result<Vec3, FrameError> {
    let get = |id: usize| -> Result<&Keypoint, FrameError> {
        let kp = frame.points.get(id).ok_or(FrameError::UnknownLandmark(id))?;
        if kp.confidence < threshold {
            return Err(FrameError::LowConfidence {
                landmark: id,
                confidence: kp.confidence,
                threshold,
            });
        }
        Ok(kp)
    };
    let a = get(from)?;
    let b = get(to)?;
    Ok(b.position - a.position)
}

/// Admits frames of one stream only in non-decreasing timestamp order with
/// strictly increasing sequence numbers.
#[derive(Debug, Default, Clone)]
pub struct StreamOrder {
    last: Option<(u32, u64)>,
}

impl StreamOrder {
    pub fn admit(&mut self, sequence: u32, timestamp_us: u64) -> Result<(), FrameError> {
        if let Some((seq, ts)) = self.last {
            if sequence <= seq || timestamp_us < ts {
                return Err(FrameError::OutOfOrder { sequence, timestamp_us });
            }
        }
        self.last = Some((sequence, timestamp_us));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(scheme: &Arc<LandmarkScheme>, n: usize) -> KeypointFrame {
        KeypointFrame {
            timestamp_us: 10,
            sequence: 1,
            scheme: scheme.clone(),
            points: (0..n)
                .map(|i| Keypoint::new(Vec3::new(i as f64, 0.5, -0.25), 0.9))
                .collect(),
            space: SpaceTag::World3d,
        }
    }

    #[test]
    fn valid_frame_passes_through_unchanged() {
        let s = Arc::new(LandmarkScheme::full_body_33());
        let f = frame(&s, 33);
        let out = validate_frame(f.clone(), &s).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn wrong_count_is_scheme_mismatch() {
        let s = Arc::new(LandmarkScheme::full_body_33());
        let f = frame(&s, 17);
        assert!(matches!(
            validate_frame(f, &s),
            Err(FrameError::SchemeMismatch {
                expected: 33,
                got: 17,
                ..
            })
        ));
    }

    #[test]
    fn confidence_above_one_rejected() {
        let s = Arc::new(LandmarkScheme::full_body_33());
        let mut f = frame(&s, 33);
        f.points[4].confidence = 1.5;
        assert_eq!(
            validate_frame(f, &s),
            Err(FrameError::BadConfidence {
                landmark: 4,
                value: 1.5
            })
        );
    }

    #[test]
    fn nan_rejected() {
        let s = Arc::new(LandmarkScheme::full_body_33());
        let mut f = frame(&s, 33);
        f.points[7].position.y = f64::NAN;
        assert_eq!(validate_frame(f, &s), Err(FrameError::NonFinite { landmark: 7 }));
    }

    #[test]
    fn bone_vectors() {
        let s = Arc::new(LandmarkScheme::full_body_33());
        let mut f = frame(&s, 33);
        f.points[0].position = Vec3::zeros();
        f.points[1].position = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(bone_vector(&f, 0, 1, 0.5).unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(bone_vector(&f, 1, 0, 0.5).unwrap(), Vec3::new(-1.0, -2.0, -3.0));
        assert_eq!(bone_vector(&f, 1, 1, 0.5).unwrap(), Vec3::zeros());

        f.points[1].confidence = 0.1;
        assert!(matches!(
            bone_vector(&f, 0, 1, 0.5),
            Err(FrameError::LowConfidence { landmark: 1, .. })
        ));
        assert_eq!(bone_vector(&f, 0, 40, 0.5), Err(FrameError::UnknownLandmark(40)));
    }

    #[test]
    fn stream_order() {
        let mut o = StreamOrder::default();
        o.admit(1, 100).unwrap();
        o.admit(2, 100).unwrap();
        assert!(o.admit(2, 200).is_err());
        assert!(o.admit(3, 50).is_err());
        o.admit(5, 300).unwrap();
    }
}
