use std::sync::Arc;

use thiserror::Error;

use super::Status;
use crate::ik::{align_swivel, forward_kinematics, solve_ik, IkOptions, KinematicChain};
use crate::retarget::{retarget_frame, LimbTarget, RetargetError, RetargetMap, RetargetOptions};
use crate::skeleton::{AvatarRig, JointConfiguration, KeypointFrame, SpaceTag};
use crate::stereo::{lift_frame, CameraPair, LiftOptions, StereoError};

/// Payload moving between stages.
#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    /// Synchronized pixel frames from cameras A and B.
    Stereo(KeypointFrame, KeypointFrame),
    Keypoints(KeypointFrame),
    Targets(Vec<LimbTarget>),
    Joints(JointConfiguration, Status),
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Stereo(..) => "stereo",
            Body::Keypoints(_) => "keypoints",
            Body::Targets(_) => "targets",
            Body::Joints(..) => "joints",
        }
    }
}

/// One frame in flight, identified by the source's sequence and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub sequence: u32,
    pub timestamp_us: u64,
    /// Pipeline clock reading when the source emitted the frame.
    pub origin_us: u64,
    pub body: Body,
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error("stage {stage} cannot handle a {kind} packet")]
    Unexpected { stage: String, kind: &'static str },
    #[error(transparent)]
    Stereo(#[from] StereoError),
    #[error(transparent)]
    Retarget(#[from] RetargetError),
    #[error("{0}")]
    Other(String),
}

/// A processing step. Packets a stage does not transform pass through
/// unchanged.
pub trait Stage: Send {
    fn name(&self) -> &str;
    fn process(&mut self, packet: Packet) -> Result<Packet, StageError>;
}

/// Passes everything through untouched.
pub struct IdentityStage {
    name: String,
}

impl IdentityStage {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into() }
    }
}

impl Stage for IdentityStage {
    fn name(&self) -> &str {
        &self.name
    }

    fn process(&mut self, packet: Packet) -> Result<Packet, StageError> {
        Ok(packet)
    }
}

pub struct LiftStage {
    pair: CameraPair,
    opts: LiftOptions,
}

impl LiftStage {
    pub fn new(pair: CameraPair, opts: LiftOptions) -> Self {
        Self { pair, opts }
    }
}

impl Stage for LiftStage {
    fn name(&self) -> &str {
        "lift"
    }

    fn process(&mut self, mut packet: Packet) -> Result<Packet, StageError> {
        if let Body::Stereo(a, b) = &packet.body {
            let lifted = lift_frame(a, b, &self.pair, &self.opts)?;
            packet.timestamp_us = lifted.timestamp_us;
            packet.body = Body::Keypoints(lifted);
        }
        Ok(packet)
    }
}

pub struct RetargetStage {
    map: Arc<RetargetMap>,
    rest_pose: Vec<crate::Vec3>,
    opts: RetargetOptions,
}

impl RetargetStage {
    /// Rig-side basis vectors are measured on the rig's rest pose.
    pub fn new(map: Arc<RetargetMap>, rig: &AvatarRig, opts: RetargetOptions) -> Self {
        let rest_pose =
            forward_kinematics(rig, &JointConfiguration::neutral(rig)).expect("neutral configuration matches its rig");
        Self { map, rest_pose, opts }
    }
}

impl Stage for RetargetStage {
    fn name(&self) -> &str {
        "retarget"
    }

    fn process(&mut self, mut packet: Packet) -> Result<Packet, StageError> {
        match &packet.body {
            Body::Keypoints(frame) if frame.space != SpaceTag::Camera2d => {
                let outcome = retarget_frame(frame, &self.map, &self.rest_pose, &self.opts)?;
                for (limb, reason) in &outcome.skipped {
                    log::debug!("frame {}: limb {limb} skipped: {reason:?}", packet.sequence);
                }
                packet.body = Body::Targets(outcome.targets);
                Ok(packet)
            }
            Body::Stereo(..) | Body::Keypoints(_) => Err(StageError::Unexpected {
                stage: "retarget".into(),
                kind: packet.body.kind(),
            }),
            _ => Ok(packet),
        }
    }
}

/// Solves each limb in map order, warm-started from the previous frame's
/// solution. Each limb target is re-anchored at the anchor joint's current
/// position, so earlier limbs (the spine) carry later ones along.
pub struct IkStage {
    rig: Arc<AvatarRig>,
    opts: IkOptions,
    current: JointConfiguration,
}

impl IkStage {
    pub fn new(rig: Arc<AvatarRig>, opts: IkOptions) -> Self {
        let current = JointConfiguration::neutral(&rig);
        Self { rig, opts, current }
    }
}

impl Stage for IkStage {
    fn name(&self) -> &str {
        "ik"
    }

    fn process(&mut self, mut packet: Packet) -> Result<Packet, StageError> {
        let Body::Targets(targets) = &packet.body else {
            return match packet.body {
                Body::Joints(..) => Ok(packet),
                _ => Err(StageError::Unexpected {
                    stage: "ik".into(),
                    kind: packet.body.kind(),
                }),
            };
        };
        let mut config = self.current.clone();
        for t in targets {
            let chain =
                KinematicChain::new(&self.rig, t.anchor, t.effector).map_err(|e| StageError::Other(e.to_string()))?;
            let pose = forward_kinematics(&self.rig, &config).map_err(|e| StageError::Other(e.to_string()))?;
            let target = pose[t.anchor] + t.offset;
            if self.rig.joint(t.effector).parent == Some(t.anchor) {
                // a hinge limb also needs its parent twisted into the bend plane
                align_swivel(&self.rig, &mut config, t.anchor, target).map_err(|e| StageError::Other(e.to_string()))?;
            }
            let result = solve_ik(&chain, &config, target, &self.opts);
            config = result.configuration;
        }
        config.sequence = packet.sequence;
        config.timestamp_us = packet.timestamp_us;
        config.stale = false;
        self.current = config.clone();
        packet.body = Body::Joints(config, Status::Fresh);
        Ok(packet)
    }
}
