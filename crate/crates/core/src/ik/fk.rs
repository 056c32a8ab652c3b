use super::IkError;
use crate::geometry::{Rotation, Vec3};
use crate::skeleton::{AvatarRig, JointConfiguration};

/// World position and orientation of every joint.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldFrames {
    pub positions: Vec<Vec3>,
    pub orientations: Vec<Rotation>,
}

/// World positions of all rig joints under `config`.
pub fn forward_kinematics(rig: &AvatarRig, config: &JointConfiguration) -> Result<Vec<Vec3>, IkError> {
    world_frames(rig, config).map(|w| w.positions)
}

pub fn world_frames(rig: &AvatarRig, config: &JointConfiguration) -> Result<WorldFrames, IkError> {
    if config.rotations.len() != rig.len() {
        return Err(IkError::MissingJoint {
            expected: rig.len(),
            got: config.rotations.len(),
        });
    }
    let n = rig.len();
    let mut positions = Vec::with_capacity(n);
    let mut orientations: Vec<Rotation> = Vec::with_capacity(n);
    for (i, joint) in rig.joints().iter().enumerate() {
        // parents precede children in rig order
        match joint.parent {
            None => {
                positions.push(rig.origin());
                orientations.push(config.rotations[i]);
            }
            Some(p) => {
                let parent = orientations[p];
                positions.push(positions[p] + parent * (joint.rest_direction * joint.bone_length));
                orientations.push(parent * config.rotations[i]);
            }
        }
    }
    Ok(WorldFrames {
        positions,
        orientations,
    })
}
