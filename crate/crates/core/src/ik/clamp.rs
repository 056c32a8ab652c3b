use super::IkError;
use crate::geometry::{angle_between, any_orthogonal, Rotation, Vec3};
use crate::skeleton::constraint::twist_about;
use crate::skeleton::{AvatarRig, JointConfiguration, JointConstraint};

/// Pulls a unit `direction` back inside the cone around `cone_axis`.
///
/// Directions already inside are returned unchanged. Outside ones are moved,
/// in the plane spanned by the axis and the direction, onto the cone surface.
pub fn clamp_ball(direction: Vec3, cone_axis: Vec3, half_angle: f64) -> Result<Vec3, IkError> {
    let angle = angle_between(&direction, &cone_axis);
    if angle <= half_angle + 1e-12 {
        return Ok(direction);
    }
    let perp = direction - cone_axis * direction.dot(&cone_axis);
    let n = perp.norm();
    if n < 1e-9 {
        return Err(IkError::DegenerateDirection);
    }
    let (s, c) = half_angle.sin_cos();
    Ok((cone_axis * c + perp * (s / n)).normalize())
}

pub fn clamp_hinge(angle: f64, min_angle: f64, max_angle: f64) -> f64 {
    angle.max(min_angle).min(max_angle)
}

/// Nearest rotation (by the projection rules below) satisfying `constraint`.
///
/// Hinge: drop everything but the twist about the hinge axis, then clamp the
/// angle. Ball: swing the constrained bone back onto the cone.
pub(crate) fn project(rotation: Rotation, constraint: &JointConstraint, bone_rest: &Vec3) -> Rotation {
    match *constraint {
        JointConstraint::Hinge {
            hinge_axis,
            min_angle,
            max_angle,
        } => {
            let (_, angle) = twist_about(&rotation, &hinge_axis);
            hinge_rotation(&hinge_axis, clamp_hinge(angle, min_angle, max_angle))
        }
        JointConstraint::Ball { cone_axis, half_angle } => {
            let dir = rotation * bone_rest;
            let clamped = clamp_ball(dir, cone_axis, half_angle).unwrap_or_else(|_| {
                // bone points straight away from the axis: any plane will do
                let (s, c) = half_angle.sin_cos();
                cone_axis * c + any_orthogonal(&cone_axis) * s
            });
            if clamped == dir {
                return rotation;
            }
            swing(&dir, &clamped) * rotation
        }
    }
}

pub(crate) fn hinge_rotation(axis: &Vec3, angle: f64) -> Rotation {
    Rotation::from_axis_angle(&nalgebra::Unit::new_unchecked(*axis), angle)
}

/// Shortest rotation taking `from` onto `to`; a half turn about an
/// orthogonal axis when they are opposite.
pub(crate) fn swing(from: &Vec3, to: &Vec3) -> Rotation {
    Rotation::rotation_between(from, to).unwrap_or_else(|| {
        Rotation::from_axis_angle(
            &nalgebra::Unit::new_unchecked(any_orthogonal(from)),
            std::f64::consts::PI,
        )
    })
}

/// Projects every constrained joint of `config` onto its constraint.
pub fn project_constraints(rig: &AvatarRig, config: &mut JointConfiguration) {
    for (i, j) in rig.joints().iter().enumerate() {
        if let (Some(c), Some(bone)) = (&j.constraint, rig.constrained_bone(i)) {
            config.rotations[i] = project(config.rotations[i], c, &bone);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn inside_cone_unchanged() {
        let d = Vec3::new(0.1, 1.0, 0.0).normalize();
        assert_eq!(clamp_ball(d, Vec3::y(), FRAC_PI_4).unwrap(), d);
    }

    #[test]
    fn outside_cone_moves_to_boundary() {
        let out = clamp_ball(Vec3::x(), Vec3::y(), FRAC_PI_4).unwrap();
        let expect = Vec3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
        assert_abs_diff_eq!(out, expect, epsilon = 1e-12);
    }

    #[test]
    fn antiparallel_is_degenerate() {
        assert_eq!(
            clamp_ball(-Vec3::y(), Vec3::y(), FRAC_PI_4),
            Err(IkError::DegenerateDirection)
        );
    }

    #[test]
    fn hinge_clamp() {
        assert_eq!(clamp_hinge(0.5, 0.0, 1.0), 0.5);
        assert_eq!(clamp_hinge(1.3, 0.0, 1.0), 1.0);
        assert_eq!(clamp_hinge(-0.3, 0.0, 1.0), 0.0);
    }

    #[test]
    fn projection_satisfies_constraint() {
        let ball = JointConstraint::ball(Vec3::y(), 0.5).unwrap();
        let r = Rotation::from_axis_angle(&Vec3::z_axis(), 2.0);
        let p = project(r, &ball, &Vec3::y());
        assert!(ball.violation(&p, &Vec3::y()) < 1e-9);

        let hinge = JointConstraint::hinge(Vec3::z(), -0.5, 0.5).unwrap();
        let r = Rotation::from_axis_angle(&Vec3::x_axis(), 0.3) * Rotation::from_axis_angle(&Vec3::z_axis(), 1.0);
        let p = project(r, &hinge, &Vec3::x());
        assert!(hinge.violation(&p, &Vec3::x()) < 1e-12);

        // bone pointing straight down the wrong way still projects
        let r = Rotation::from_axis_angle(&Vec3::x_axis(), PI);
        let p = project(r, &ball, &Vec3::y());
        assert!(ball.violation(&p, &Vec3::y()) < 1e-9);
    }

    fn unit() -> impl Strategy<Value = Vec3> {
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
            .prop_filter("non-zero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
            .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
    }

    proptest! {
        #[test]
        fn clamp_ball_respects_cone(d in unit(), axis in unit(), half in 0.01f64..3.1) {
            if let Ok(out) = clamp_ball(d, axis, half) {
                prop_assert!(angle_between(&out, &axis) <= half + 1e-9);
                prop_assert!((out.norm() - 1.0).abs() < 1e-12);
                let again = clamp_ball(out, axis, half).unwrap();
                prop_assert!((again - out).norm() < 1e-12);
            }
        }
    }
}
