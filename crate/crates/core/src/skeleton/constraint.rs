use std::f64::consts::PI;

use thiserror::Error;

use crate::geometry::{angle_between, wrap_angle, Rotation, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("constraint axis must be non-zero and finite")]
    BadAxis,
    #[error("ball half angle {0} must lie in (0, pi)")]
    BadHalfAngle(f64),
    #[error("hinge range [{min}, {max}] must be non-empty and within (-pi, pi]")]
    BadHingeRange { min: f64, max: f64 },
}

/// Limit on a joint's rotation relative to its parent.
///
/// Both variants are expressed in the parent joint's frame. A ball limits the
/// direction of the joint's outgoing bone to a cone; a hinge only allows
/// rotation about one axis within an angular range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointConstraint {
    Ball {
        cone_axis: Vec3,
        half_angle: f64,
    },
    Hinge {
        hinge_axis: Vec3,
        min_angle: f64,
        max_angle: f64,
    },
}

fn unit_axis(axis: Vec3) -> Result<Vec3, ConstraintError> {
    let n = axis.norm();
    if !n.is_finite() || n < 1e-12 {
        return Err(ConstraintError::BadAxis);
    }
    Ok(axis / n)
}

impl JointConstraint {
    /// Ball constraint; the axis is normalized.
    pub fn ball(cone_axis: Vec3, half_angle: f64) -> Result<Self, ConstraintError> {
        if !(half_angle > 0.0 && half_angle < PI) {
            return Err(ConstraintError::BadHalfAngle(half_angle));
        }
        Ok(Self::Ball {
            cone_axis: unit_axis(cone_axis)?,
            half_angle,
        })
    }

    /// Hinge constraint; the axis is normalized.
    pub fn hinge(hinge_axis: Vec3, min_angle: f64, max_angle: f64) -> Result<Self, ConstraintError> {
        let ok = min_angle.is_finite()
            && max_angle.is_finite()
            && min_angle < max_angle
            && min_angle > -PI
            && max_angle <= PI;
        if !ok {
            return Err(ConstraintError::BadHingeRange {
                min: min_angle,
                max: max_angle,
            });
        }
        Ok(Self::Hinge {
            hinge_axis: unit_axis(hinge_axis)?,
            min_angle,
            max_angle,
        })
    }

    /// How far (radians) `rotation` lies outside this constraint; 0 when it
    /// is satisfied. `bone_rest` is the rest direction of the constrained
    /// outgoing bone, in the joint's own frame.
    pub fn violation(&self, rotation: &Rotation, bone_rest: &Vec3) -> f64 {
        match *self {
            Self::Ball { cone_axis, half_angle } => {
                let dir = rotation * bone_rest;
                (angle_between(&dir, &cone_axis) - half_angle).max(0.0)
            }
            Self::Hinge {
                hinge_axis,
                min_angle,
                max_angle,
            } => {
                let (twist, angle) = twist_about(rotation, &hinge_axis);
                let off_axis = rotation.angle_to(&twist);
                let out_of_range = (min_angle - angle).max(angle - max_angle).max(0.0);
                off_axis.max(out_of_range)
            }
        }
    }
}

/// Swing-twist split: the component of `rotation` about the unit `axis`,
/// returned with its signed angle in `(-π, π]`.
pub(crate) fn twist_about(rotation: &Rotation, axis: &Vec3) -> (Rotation, f64) {
    let q = rotation.quaternion();
    let along = q.imag().dot(axis);
    if along.abs() < 1e-15 && q.w.abs() < 1e-15 {
        // pure half-turn swing orthogonal to the axis: no twist
        return (Rotation::identity(), 0.0);
    }
    let angle = wrap_angle(2.0 * along.atan2(q.w));
    let twist = Rotation::from_axis_angle(&nalgebra::Unit::new_unchecked(*axis), angle);
    (twist, angle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Unit;

    #[test]
    fn validation() {
        assert!(JointConstraint::ball(Vec3::y(), 0.0).is_err());
        assert!(JointConstraint::ball(Vec3::y(), PI).is_err());
        assert!(JointConstraint::ball(Vec3::zeros(), 1.0).is_err());
        assert!(JointConstraint::hinge(Vec3::x(), 0.5, 0.5).is_err());
        assert!(JointConstraint::hinge(Vec3::x(), -PI, 0.5).is_err());
        assert!(JointConstraint::hinge(Vec3::x(), -1.0, PI).is_ok());
        match JointConstraint::ball(Vec3::new(0.0, 2.0, 0.0), 1.0).unwrap() {
            JointConstraint::Ball { cone_axis, .. } => assert_eq!(cone_axis, Vec3::y()),
            _ => unreachable!(),
        }
    }

    #[test]
    fn hinge_violation_measures_off_axis_and_range() {
        let h = JointConstraint::hinge(Vec3::z(), 0.0, 1.0).unwrap();
        let rest = Vec3::x();
        let inside = Rotation::from_axis_angle(&Vec3::z_axis(), 0.5);
        assert!(h.violation(&inside, &rest) < 1e-12);
        let beyond = Rotation::from_axis_angle(&Vec3::z_axis(), 1.3);
        assert!((h.violation(&beyond, &rest) - 0.3).abs() < 1e-12);
        let off = Rotation::from_axis_angle(&Vec3::x_axis(), 0.2) * inside;
        assert!(h.violation(&off, &rest) > 0.1);
    }

    #[test]
    fn twist_recovers_angle() {
        let axis = Unit::new_normalize(Vec3::new(1.0, 2.0, -0.5));
        for a in [-3.0, -1.0, 0.0, 0.7, 3.1] {
            let r = Rotation::from_axis_angle(&axis, a);
            let (_, got) = twist_about(&r, &axis);
            assert!((got - a).abs() < 1e-12, "{a} vs {got}");
        }
    }

    #[test]
    fn ball_violation() {
        let b = JointConstraint::ball(Vec3::y(), PI / 4.0).unwrap();
        let r = Rotation::identity();
        assert!((b.violation(&r, &Vec3::x()) - PI / 4.0).abs() < 1e-12);
        assert_eq!(b.violation(&r, &Vec3::y()), 0.0);
    }
}
