//! Skeletal data model: landmark schemes, keypoint frames, avatar rigs,
//! joint constraints and joint configurations.

mod config;
pub(crate) mod constraint;
mod frame;
mod rig;
mod scheme;

pub use config::JointConfiguration;
pub use constraint::{ConstraintError, JointConstraint};
pub use frame::{
    bone_vector, validate_frame, FrameError, Keypoint, KeypointFrame, SpaceTag, StreamOrder,
    DEFAULT_CONFIDENCE_THRESHOLD,
};
pub use rig::{AvatarRig, JointSpec, RigError, RigJoint, UpAxis};
pub use scheme::{LandmarkScheme, SchemeError};
