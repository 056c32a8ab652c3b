//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use posekit_core::pipeline::stage::{Body, Packet};
use posekit_core::pipeline::WireFrame;
use posekit_core::synth::{desk_camera_pair, performer_frame, project_views};
use posekit_core::{AvatarRig, KeypointFrame, LandmarkScheme, Vec3};

/// One performer frame in the 33-landmark scheme.
pub fn body_frame(t: f64) -> KeypointFrame {
    let scheme = Arc::new(LandmarkScheme::full_body_33());
    performer_frame(&scheme, t, 0, (t * 1e6) as u64)
}

pub fn body_wire_frame() -> WireFrame {
    WireFrame::from_keypoints(&body_frame(0.4)).expect("33 landmarks fit a frame")
}

/// A stereo packet of the desk scene.
pub fn stereo_packet(t: f64, sequence: u32) -> Packet {
    let frame = body_frame(t);
    let (a, b) = project_views(&frame, &desk_camera_pair());
    Packet {
        sequence,
        timestamp_us: frame.timestamp_us,
        origin_us: 0,
        body: Body::Stereo(a, b),
    }
}

/// Reachable wrist targets for the humanoid's left arm, relative to the
/// shoulder.
pub fn arm_targets(rig: &AvatarRig) -> Vec<Vec3> {
    let elbow = rig.id_of("left_elbow").expect("humanoid has arms");
    let wrist = rig.id_of("left_wrist").expect("humanoid has arms");
    let reach = rig.joint(elbow).bone_length + rig.joint(wrist).bone_length;
    (0..16)
        .map(|i| {
            let a = i as f64 * 0.37;
            Vec3::new(0.5 + 0.4 * a.cos(), 0.3 * a.sin(), 0.4 + 0.2 * (2.0 * a).sin()).normalize() * reach * 0.8
        })
        .collect()
}
