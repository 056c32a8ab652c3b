//! Real-time retargeting of tracked human keypoints onto an avatar rig.
//!
//! Frames of body landmarks flow through a staged pipeline: optional stereo
//! lifting of two 2D views to 3D, basis-vector retargeting of each limb onto
//! the rig's proportions, and constrained inverse kinematics producing joint
//! rotations. Stages exchange the newest value only and the output falls back
//! to the last good pose when upstream lags.

pub mod data;
pub mod engine;
pub mod geometry;
pub mod ik;
pub mod pipeline;
pub mod retarget;
pub mod skeleton;
pub mod stereo;
pub mod synth;

pub use geometry::{remap_axes, Rotation, Vec3};
pub use ik::{forward_kinematics, solve_ik, IkOptions, IkResult, KinematicChain};
pub use retarget::{basis_frame, denormalize_joint, normalize_joint, BasisFrame, RetargetMap};
pub use skeleton::{AvatarRig, JointConfiguration, JointConstraint, Keypoint, KeypointFrame, LandmarkScheme, SpaceTag};
pub use stereo::{lift_frame, triangulate, CameraModel, CameraPair, PixelPoint};
