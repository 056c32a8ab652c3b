use nalgebra::Unit;

use super::{world_frames, IkError};
use crate::geometry::{Rotation, Vec3};
use crate::skeleton::{AvatarRig, JointConfiguration, JointConstraint};

/// Twists the parent of hinge joint `hinge` about its own bone, and sets the
/// hinge angle, so that the hinge's outgoing bone points as close to `target`
/// as the hinge range allows.
///
/// The twist leaves the hinge joint's position and the parent's cone
/// constraint unchanged. Among equally good solutions the smallest twist is
/// taken. Returns `Ok(false)` without touching `config` when `hinge` is not a
/// single-child hinge under a single-child, non-hinge parent.
pub fn align_swivel(
    rig: &AvatarRig,
    config: &mut JointConfiguration,
    hinge: usize,
    target: Vec3,
) -> Result<bool, IkError> {
    let joint = rig.joint(hinge);
    let Some(JointConstraint::Hinge {
        hinge_axis,
        min_angle,
        max_angle,
    }) = joint.constraint
    else {
        return Ok(false);
    };
    let Some(parent) = joint.parent else {
        return Ok(false);
    };
    let p = rig.joint(parent);
    if p.children.len() != 1 || matches!(p.constraint, Some(JointConstraint::Hinge { .. })) {
        return Ok(false);
    }
    let Some(child_rest) = rig.constrained_bone(hinge) else {
        return Ok(false);
    };
    let frames = world_frames(rig, config)?;
    let to_target = target - frames.positions[hinge];
    if to_target.norm() < 1e-12 {
        return Ok(false);
    }
    let t = to_target.normalize();
    let wp = frames.orientations[parent];
    let u = (wp * joint.rest_direction).normalize();
    let h = wp * hinge_axis;
    let d0 = wp * child_rest;

    let c = u.dot(&h) * h.dot(&d0);
    let a = u.dot(&d0) - c;
    let b = u.dot(&h.cross(&d0));
    let want = u.dot(&t);
    let mut candidates = vec![min_angle, max_angle];
    let r = a.hypot(b);
    if r > 1e-12 {
        let k = (want - c) / r;
        if k.abs() <= 1.0 {
            let delta = b.atan2(a);
            let spread = k.acos();
            for theta in [delta + spread, delta - spread] {
                let tau = std::f64::consts::TAU;
                for shifted in [theta - tau, theta, theta + tau] {
                    if shifted >= min_angle && shifted <= max_angle {
                        candidates.push(shifted);
                    }
                }
            }
        }
    }

    let elevation = want.clamp(-1.0, 1.0).acos();
    let axis = Unit::new_normalize(h);
    let mut best: Option<(f64, f64, f64)> = None;
    for theta in candidates {
        let v = Rotation::from_axis_angle(&axis, theta) * d0;
        let miss = (u.dot(&v).clamp(-1.0, 1.0).acos() - elevation).abs();
        let v_perp = v - u * u.dot(&v);
        let t_perp = t - u * want;
        let phi = if v_perp.norm() < 1e-12 || t_perp.norm() < 1e-12 {
            0.0
        } else {
            u.dot(&v_perp.cross(&t_perp)).atan2(v_perp.dot(&t_perp))
        };
        let better = match best {
            None => true,
            Some((m, _, f)) => miss < m - 1e-12 || (miss <= m + 1e-12 && phi.abs() < f.abs()),
        };
        if better {
            best = Some((miss, theta, phi));
        }
    }
    let (_, theta, phi) = best.expect("range endpoints are always candidates");

    let wpp = match p.parent {
        Some(g) => frames.orientations[g],
        None => Rotation::identity(),
    };
    let twist = Rotation::from_axis_angle(&Unit::new_unchecked(u), phi);
    config.rotations[parent] = wpp.inverse() * twist * wp;
    config.rotations[hinge] = Rotation::from_axis_angle(&Unit::new_unchecked(hinge_axis), theta);
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ik::forward_kinematics;

    fn arm() -> AvatarRig {
        AvatarRig::default_humanoid()
    }

    #[test]
    fn reaches_bendable_targets_and_keeps_elbow_in_place() {
        let rig = arm();
        let shoulder = rig.id_of("left_shoulder").unwrap();
        let elbow = rig.id_of("left_elbow").unwrap();
        let wrist = rig.id_of("left_wrist").unwrap();
        let mut config = JointConfiguration::neutral(&rig);
        // a wildly twisted upper arm that cannot bend toward the target
        config.rotations[shoulder] = Rotation::from_axis_angle(&Vec3::x_axis(), 2.8);
        let before = forward_kinematics(&rig, &config).unwrap();
        let forearm = (before[wrist] - before[elbow]).norm();
        let target = before[elbow] + Vec3::new(0.3, 0.6, 0.2).normalize() * forearm;
        assert!(align_swivel(&rig, &mut config, elbow, target).unwrap());
        let after = forward_kinematics(&rig, &config).unwrap();
        assert!((after[elbow] - before[elbow]).norm() < 1e-12);
        let dir = (after[wrist] - after[elbow]).normalize();
        let want = (target - after[elbow]).normalize();
        let reachable = rig
            .joint(elbow)
            .constraint
            .unwrap()
            .violation(&config.rotations[elbow], &rig.constrained_bone(elbow).unwrap());
        assert_eq!(reachable, 0.0);
        assert!(dir.angle(&want) < 1e-9, "residual {} rad", dir.angle(&want));
    }

    #[test]
    fn ignores_non_hinges() {
        let rig = arm();
        let shoulder = rig.id_of("left_shoulder").unwrap();
        let mut config = JointConfiguration::neutral(&rig);
        let before = config.clone();
        assert!(!align_swivel(&rig, &mut config, shoulder, Vec3::new(1.0, 1.0, 1.0)).unwrap());
        assert_eq!(config, before);
    }
}
