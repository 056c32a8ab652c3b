//! Closed-form and brute-force references for planar two-link arms.

use std::f64::consts::PI;

use nalgebra::Unit;
use posekit_core::geometry::wrap_angle;
use posekit_core::skeleton::JointSpec;
use posekit_core::{AvatarRig, JointConstraint, Rotation, Vec3};

pub fn two_link(elbow: Option<JointConstraint>) -> AvatarRig {
    let mut e = JointSpec::child("elbow", "base", 1.0, Vec3::x());
    e.constraint = elbow;
    AvatarRig::new(
        "two-link",
        Vec3::zeros(),
        vec![
            JointSpec::root("base"),
            e,
            JointSpec::child("tip", "elbow", 1.0, Vec3::x()),
        ],
        &[],
    )
    .unwrap()
}

/// Planar angle about -y, i.e. measured from +x toward +z.
pub fn planar(v: &Vec3) -> f64 {
    v.z.atan2(v.x)
}

pub fn about_down(a: f64) -> Rotation {
    Rotation::from_axis_angle(&Unit::new_normalize(-Vec3::y()), a)
}

/// Closed-form joint angles (shoulder, elbow) for a unit two-link arm
/// reaching planar target (x, z): both elbow branches.
pub fn analytic_two_link(x: f64, z: f64) -> [(f64, f64); 2] {
    let d2 = x * x + z * z;
    let c = ((d2 - 2.0) / 2.0).clamp(-1.0, 1.0);
    let elbow = c.acos();
    let heading = z.atan2(x);
    [elbow, -elbow].map(|e| (heading - e.sin().atan2(1.0 + e.cos()), e))
}

/// Shoulder and elbow angles read back from joint world positions.
pub fn solved_angles(pos: &[Vec3]) -> (f64, f64) {
    let upper = pos[1] - pos[0];
    let fore = pos[2] - pos[1];
    (planar(&upper), wrap_angle(planar(&fore) - planar(&upper)))
}

/// Minimum distance to `t` over a dense grid of the planar configuration
/// space with the elbow restricted to `[lo, hi]`.
pub fn grid_min_error(t: Vec3, lo: f64, hi: f64) -> f64 {
    let (n_s, n_e) = (4000, 400);
    let mut best = f64::INFINITY;
    for j in 0..=n_e {
        let e = lo + (hi - lo) * j as f64 / n_e as f64;
        for i in 0..n_s {
            let s = -PI + 2.0 * PI * i as f64 / n_s as f64;
            let p = Vec3::new(s.cos() + (s + e).cos(), 0.0, s.sin() + (s + e).sin());
            best = best.min((p - t).norm());
        }
    }
    best
}
