use super::AvatarRig;
use crate::geometry::Rotation;

/// Rotation of every rig joint relative to its parent's frame.
///
/// `rotations[i]` belongs to rig joint `i`. A joint's rotation turns its
/// outgoing bones; the root's rotation is relative to the world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConfiguration {
    pub rotations: Vec<Rotation>,
    pub timestamp_us: u64,
    pub sequence: u32,
    pub stale: bool,
}

impl JointConfiguration {
    /// Rest pose: identity rotation everywhere.
    pub fn neutral(rig: &AvatarRig) -> Self {
        Self {
            rotations: vec![Rotation::identity(); rig.len()],
            timestamp_us: 0,
            sequence: 0,
            stale: false,
        }
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    /// Largest constraint violation in radians across all constrained joints.
    pub fn max_violation(&self, rig: &AvatarRig) -> f64 {
        rig.joints()
            .iter()
            .enumerate()
            .filter_map(|(i, j)| {
                let c = j.constraint.as_ref()?;
                let bone = rig.constrained_bone(i)?;
                Some(c.violation(&self.rotations[i], &bone))
            })
            .fold(0.0, f64::max)
    }
}
