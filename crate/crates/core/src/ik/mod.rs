//! Forward and constrained inverse kinematics over an [`AvatarRig`].
//!
//! [`AvatarRig`]: crate::skeleton::AvatarRig

mod clamp;
mod fk;
mod solver;
mod swivel;

pub use clamp::{clamp_ball, clamp_hinge, project_constraints};
pub use fk::{forward_kinematics, world_frames, WorldFrames};
pub use solver::{solve_ik, IkOptions, IkResult, KinematicChain};
pub use swivel::align_swivel;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IkError {
    #[error("configuration has {got} joint rotations, rig has {expected}")]
    MissingJoint { expected: usize, got: usize },
    #[error("direction is antiparallel to the cone axis")]
    DegenerateDirection,
    #[error("joint {anchor} is not a strict ancestor of joint {effector}")]
    NotAChain { anchor: usize, effector: usize },
}
