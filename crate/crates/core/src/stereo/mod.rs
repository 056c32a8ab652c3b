//! Two-camera lifting of 2D keypoints to 3D.
//!
//! Cameras follow the pinhole convention: the extrinsic rotation and
//! translation map world points into a camera frame with `x` right, `y` down
//! and `z` forward, and pixels are `u = fx·x/z + cx`, `v = fy·y/z + cy`.
//! The world frame of a calibration is the engine frame (y up). Lens
//! distortion is not modelled.

mod camera;
mod lift;

pub use camera::{CameraModel, CameraPair, PixelPoint, DEFAULT_MIN_BASELINE};
pub use lift::{lift_frame, triangulate, LiftOptions, Triangulation, DEFAULT_SYNC_WINDOW_US};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StereoError {
    #[error("cannot read calibration {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed calibration: {0}")]
    Parse(String),
    #[error("camera {camera}: {reason}")]
    BadIntrinsics { camera: String, reason: String },
    #[error("camera {camera}: rotation deviates from orthonormal by {deviation:e}")]
    NonOrthonormalRotation { camera: String, deviation: f64 },
    #[error("camera centres are {baseline} apart, need more than {epsilon}")]
    DegenerateGeometry { baseline: f64, epsilon: f64 },
    #[error("back-projected rays are parallel")]
    DegenerateRays,
    #[error("pixel coordinates are not finite")]
    NonFinite,
    #[error("views use different schemes ({a:?}, {b:?})")]
    SchemeMismatch { a: String, b: String },
    #[error("expected pixel-space frames")]
    NotPixelFrame,
    #[error("views are {delta_us}us apart, window is {window_us}us")]
    SyncWindowExceeded { delta_us: u64, window_us: u64 },
}
