//! Basis-vector retargeting.
//!
//! A limb vector `J` observed on the tracked body is expressed relative to a
//! reference vector `B` on the same body (for example the shoulder line):
//! the horizontal `(x, z)` part is rotated so that `B` lies on `+x` and
//! divided by `B`'s horizontal length, and the height `y` is divided by the
//! same length. The resulting dimensionless vector is then rebuilt against
//! the avatar's own reference vector `B'`, which transfers the pose across
//! bodies of different size and heading.
//!
//! Rotations act on column vectors `(x, z)`: rotating by `+θ` turns `+x`
//! toward `+z`. Normalization rotates by `-θ_B`, reconstruction by `+θ_B'`.

mod basis;
mod map;

pub use basis::{
    basis_frame, denormalize_joint, normalize_joint, BasisFrame, NormalizedJoint, PlanarRotation, DEFAULT_EPSILON_BASIS,
};
pub use map::{
    retarget_frame, Endpoint, LimbEntry, LimbTarget, MapError, RetargetMap, RetargetOptions, RetargetOutcome,
    SkipReason,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetargetError {
    #[error("basis vector horizontal length {planar_norm} is below {epsilon}")]
    DegenerateBasis { planar_norm: f64, epsilon: f64 },
    #[error("no limb could be retargeted in this frame")]
    EmptyResult,
}
