//! Synthetic performer and camera rig for tests, benchmarks and demos.

use std::sync::Arc;

use nalgebra::Unit;

use crate::geometry::{Rotation, Vec3};
use crate::skeleton::{Keypoint, KeypointFrame, LandmarkScheme, SpaceTag};
use crate::stereo::{CameraModel, CameraPair};

const CONFIDENCE: f64 = 0.95;

/// Landmark positions of a person standing near the origin, facing `+z`
/// with their left toward `+x`, swinging arms and legs and slowly turning.
/// Landmarks are looked up by name, so any scheme using the common names
/// works; names not recognised are placed at the nose.
pub fn performer_frame(scheme: &Arc<LandmarkScheme>, t: f64, sequence: u32, timestamp_us: u64) -> KeypointFrame {
    let heading = Rotation::from_axis_angle(&Vec3::y_axis(), 0.3 * (0.2 * t).sin());
    let base = Vec3::new(0.2, 0.0, 0.1);
    let place = |local: Vec3| base + heading * local;

    let hip_mid = Vec3::new(0.0, 0.95, 0.0);
    let shoulder_mid = hip_mid + Vec3::new(0.0, 0.5, 0.05 * t.sin());
    let mut named: Vec<(String, Vec3)> = Vec::new();

    for (side, sign, phase) in [("left", 1.0, 0.0), ("right", -1.0, 1.1)] {
        let shoulder = shoulder_mid + Vec3::new(0.19 * sign, 0.0, 0.0);
        let abduct = 0.6 + 0.5 * (1.3 * t + phase).sin();
        let upper = Vec3::new(sign * abduct.sin(), -abduct.cos(), 0.3 * (0.9 * t + phase).sin()).normalize();
        let bend = 0.8 + 0.6 * (1.7 * t + phase).sin();
        let fore = bend_toward(&upper, &Vec3::z(), bend);
        let elbow = shoulder + 0.3 * upper;
        let wrist = elbow + 0.27 * fore;

        let hip = hip_mid + Vec3::new(0.11 * sign, 0.0, 0.0);
        let thigh = Vec3::new(0.05 * sign, -1.0, 0.25 * (t + phase * 2.0).sin()).normalize();
        let knee_bend = 0.3 + 0.3 * (t + phase * 2.0).sin();
        let shin = bend_toward(&thigh, &-Vec3::z(), knee_bend);
        let knee = hip + 0.44 * thigh;
        let ankle = knee + 0.42 * shin;

        let hand = |dx: f64, dz: f64| wrist + 0.08 * fore + Vec3::new(sign * dx, 0.0, dz);
        let entries = [
            ("shoulder", shoulder),
            ("elbow", elbow),
            ("wrist", wrist),
            ("pinky", hand(0.02, -0.02)),
            ("index", hand(0.0, 0.02)),
            ("thumb", hand(-0.02, 0.03)),
            ("hip", hip),
            ("knee", knee),
            ("ankle", ankle),
            ("heel", ankle + Vec3::new(0.0, -0.04, -0.05)),
            ("foot_index", ankle + Vec3::new(0.0, -0.06, 0.15)),
            ("eye_inner", shoulder_mid + Vec3::new(0.015 * sign, 0.28, 0.09)),
            ("eye", shoulder_mid + Vec3::new(0.035 * sign, 0.28, 0.085)),
            ("eye_outer", shoulder_mid + Vec3::new(0.05 * sign, 0.28, 0.08)),
            ("ear", shoulder_mid + Vec3::new(0.075 * sign, 0.26, 0.0)),
        ];
        for (part, pos) in entries {
            named.push((format!("{side}_{part}"), pos));
        }
        named.push((
            format!("mouth_{side}"),
            shoulder_mid + Vec3::new(0.025 * sign, 0.2, 0.09),
        ));
    }
    let nose = shoulder_mid + Vec3::new(0.0, 0.25, 0.11);

    let points = (0..scheme.count())
        .map(|id| {
            let name = scheme.name_of(id).unwrap_or("");
            let local = named.iter().find(|(n, _)| n == name).map_or(nose, |(_, p)| *p);
            Keypoint::new(place(local), CONFIDENCE)
        })
        .collect();
    KeypointFrame {
        timestamp_us,
        sequence,
        scheme: scheme.clone(),
        points,
        space: SpaceTag::World3d,
    }
}

/// Turns `dir` by `angle` toward the part of `toward` perpendicular to it.
fn bend_toward(dir: &Vec3, toward: &Vec3, angle: f64) -> Vec3 {
    let perp = toward - dir * dir.dot(toward);
    let axis = Unit::new_normalize(dir.cross(&perp));
    Rotation::from_axis_angle(&axis, angle) * dir
}

/// `count` frames at `fps`, sequence numbers from 0.
pub fn performer_stream(scheme: &Arc<LandmarkScheme>, fps: f64, count: usize) -> Vec<KeypointFrame> {
    (0..count)
        .map(|i| {
            let t = i as f64 / fps;
            performer_frame(scheme, t, i as u32, (t * 1e6).round() as u64)
        })
        .collect()
}

/// Two cameras 0.4 m apart, 3 m in front of the performer, aimed at the
/// torso.
pub fn desk_camera_pair() -> CameraPair {
    let target = Vec3::new(0.2, 1.1, 0.1);
    let cam = |x: f64| {
        CameraModel::look_at(900.0, 900.0, 1280, 720, Vec3::new(x, 1.3, 3.1), target, Vec3::y())
            .expect("valid synthetic camera")
    };
    CameraPair::new(cam(0.0), cam(0.4), crate::stereo::DEFAULT_MIN_BASELINE).expect("cameras are apart")
}

/// Pixel frames of a 3D frame as seen by each camera. Landmarks outside a
/// camera's image get zero confidence in that view.
pub fn project_views(frame: &KeypointFrame, pair: &CameraPair) -> (KeypointFrame, KeypointFrame) {
    let view = |cam: &CameraModel| KeypointFrame {
        points: frame
            .points
            .iter()
            .map(|kp| {
                let p = cam.project(&kp.position);
                let confidence = if cam.sees(&kp.position) { kp.confidence } else { 0.0 };
                Keypoint::new(Vec3::new(p.x, p.y, 0.0), confidence)
            })
            .collect(),
        space: SpaceTag::Camera2d,
        ..frame.clone()
    };
    (view(&pair.cam_a), view(&pair.cam_b))
}
