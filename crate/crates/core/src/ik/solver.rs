use super::clamp::{clamp_hinge, hinge_rotation, project, swing};
use super::{project_constraints, world_frames, IkError};
use crate::geometry::{wrap_angle, Rotation, Vec3};
use crate::skeleton::constraint::twist_about;
use crate::skeleton::{AvatarRig, JointConfiguration, JointConstraint};

/// Joints from an anchor down to an end effector.
#[derive(Debug, Clone)]
pub struct KinematicChain<'r> {
    rig: &'r AvatarRig,
    joints: Vec<usize>,
    reach: f64,
}

impl<'r> KinematicChain<'r> {
    pub fn new(rig: &'r AvatarRig, anchor: usize, effector: usize) -> Result<Self, IkError> {
        let joints = rig
            .path(anchor, effector)
            .ok_or(IkError::NotAChain { anchor, effector })?;
        let reach = joints[1..].iter().map(|&j| rig.joint(j).bone_length).sum();
        Ok(Self { rig, joints, reach })
    }

    pub fn rig(&self) -> &'r AvatarRig {
        self.rig
    }

    pub fn joints(&self) -> &[usize] {
        &self.joints
    }

    pub fn anchor(&self) -> usize {
        self.joints[0]
    }

    pub fn effector(&self) -> usize {
        *self.joints.last().expect("chain has at least two joints")
    }

    /// Sum of the chain's bone lengths.
    pub fn reach(&self) -> f64 {
        self.reach
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkOptions {
    pub max_iterations: usize,
    /// Absolute position tolerance; `None` means `1e-3 ×` the chain's reach.
    pub position_tolerance: Option<f64>,
    /// Largest rotation applied to one joint in one update, radians.
    pub max_joint_step: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            position_tolerance: None,
            max_joint_step: std::f64::consts::PI,
        }
    }
}

impl IkOptions {
    pub fn tolerance_for(&self, chain: &KinematicChain<'_>) -> f64 {
        self.position_tolerance.unwrap_or(1e-3 * chain.reach())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkResult {
    pub configuration: JointConfiguration,
    /// Distance from the end effector to the target, recomputed with
    /// forward kinematics on `configuration`.
    pub final_error: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Per-chain link data in chain order.
struct Links {
    base_position: Vec3,
    base_orientation: Rotation,
    bones: Vec<Vec3>,
    constraints: Vec<Option<(JointConstraint, Vec3)>>,
}

impl Links {
    fn new(chain: &KinematicChain<'_>, config: &JointConfiguration) -> Self {
        let rig = chain.rig;
        let frames = world_frames(rig, config).expect("configuration matches rig");
        let anchor = chain.anchor();
        let base_orientation = rig
            .joint(anchor)
            .parent
            .map(|p| frames.orientations[p])
            .unwrap_or_else(Rotation::identity);
        let bones = chain
            .joints
            .iter()
            .map(|&j| rig.joint(j).rest_direction * rig.joint(j).bone_length)
            .collect();
        let constraints = chain
            .joints
            .iter()
            .map(|&j| {
                let c = rig.joint(j).constraint?;
                Some((c, rig.constrained_bone(j)?))
            })
            .collect();
        Self {
            base_position: frames.positions[anchor],
            base_orientation,
            bones,
            constraints,
        }
    }

    /// Joint positions and parent orientations along the chain.
    fn pose(&self, rots: &[Rotation], positions: &mut Vec<Vec3>, parents: &mut Vec<Rotation>) {
        positions.clear();
        parents.clear();
        positions.push(self.base_position);
        parents.push(self.base_orientation);
        let mut world = self.base_orientation * rots[0];
        for i in 1..rots.len() {
            let p = positions[i - 1] + world * self.bones[i];
            positions.push(p);
            parents.push(world);
            world *= rots[i];
        }
    }

    fn effector(&self, rots: &[Rotation]) -> Vec3 {
        let mut p = self.base_position;
        let mut world = self.base_orientation * rots[0];
        for i in 1..rots.len() {
            p += world * self.bones[i];
            world *= rots[i];
        }
        p
    }
}

/// Cyclic coordinate descent with constraint projection after every joint
/// update.
///
/// Each sweep visits the movable joints from the one nearest the end
/// effector back to the anchor and turns each so the end effector swings
/// toward the target: hinge joints only about their axis, other joints by
/// the shortest rotation, followed by projection onto the cone for balls.
/// The search starts from `start`, so among several solutions the one
/// nearest the previous pose is preferred.
///
/// The best configuration seen is returned, so the error never exceeds that
/// of the (constraint-projected) start. Joints outside the chain keep their
/// start rotations, projected onto their constraints.
pub fn solve_ik(chain: &KinematicChain<'_>, start: &JointConfiguration, target: Vec3, opts: &IkOptions) -> IkResult {
    let rig = chain.rig;
    let tolerance = opts.tolerance_for(chain);
    let mut config = start.clone();
    project_constraints(rig, &mut config);

    let links = Links::new(chain, &config);
    let initial: Vec<Rotation> = chain.joints.iter().map(|&j| config.rotations[j]).collect();
    let mut best = Descent {
        error: (links.effector(&initial) - target).norm(),
        rotations: initial.clone(),
    };
    let mut iterations = 0;

    if best.error > tolerance {
        iterations += descend(
            &links,
            &mut best,
            initial.clone(),
            target,
            tolerance,
            chain.reach,
            opts,
            false,
        );
        // A hinge resting on a limit can trap the descent (a straight elbow
        // cannot learn which way to bend). Retry from bent seeds.
        for fraction in RESTART_FRACTIONS {
            if best.error <= tolerance {
                break;
            }
            let Some(seed) = bent_seed(&links, &initial, fraction) else {
                break;
            };
            iterations += descend(&links, &mut best, seed, target, tolerance, chain.reach, opts, true);
        }
        if best.error > tolerance {
            iterations += polish(&links, &mut best, target, tolerance, chain.reach, opts);
        }
    }
    let best_rots = best.rotations;

    for (&j, r) in chain.joints.iter().zip(best_rots) {
        config.rotations[j] = r;
    }
    let final_error = world_frames(rig, &config)
        .map(|w| (w.positions[chain.effector()] - target).norm())
        .expect("configuration matches rig");
    IkResult {
        configuration: config,
        final_error,
        iterations_used: iterations,
        converged: final_error <= tolerance,
    }
}

/// Damped least-squares refinement of `best`, used when coordinate descent
/// stalls short of the tolerance (typically a target near full extension,
/// where descent creeps radially). Every step is projected onto the
/// constraints and kept only if it lowers the error.
fn polish(links: &Links, best: &mut Descent, target: Vec3, tolerance: f64, reach: f64, opts: &IkOptions) -> usize {
    let movable = best.rotations.len() - 1;
    let mut positions = Vec::with_capacity(movable + 1);
    let mut parents = Vec::with_capacity(movable + 1);
    let mut damping = 1e-2 * reach;
    let mut steps = 0;
    while steps < opts.max_iterations && best.error > tolerance && damping < 1e3 * reach {
        steps += 1;
        let rots = &best.rotations;
        links.pose(rots, &mut positions, &mut parents);
        let effector = links.effector(rots);
        let residual = target - effector;

        // world rotation axes and their pivots, one per degree of freedom
        let mut dofs: Vec<(usize, Vec3)> = Vec::with_capacity(3 * movable);
        for k in 0..movable {
            match &links.constraints[k] {
                Some((JointConstraint::Hinge { hinge_axis, .. }, _)) => dofs.push((k, parents[k] * hinge_axis)),
                _ => dofs.extend([Vec3::x(), Vec3::y(), Vec3::z()].map(|a| (k, a))),
            }
        }
        let columns: Vec<Vec3> = dofs.iter().map(|(k, a)| a.cross(&(effector - positions[*k]))).collect();
        let mut jjt = nalgebra::Matrix3::identity() * (damping * damping);
        for c in &columns {
            jjt += c * c.transpose();
        }
        let Some(inv) = jjt.try_inverse() else {
            damping *= 4.0;
            continue;
        };
        let y = inv * residual;

        let mut trial = rots.clone();
        let mut spin = vec![Vec3::zeros(); movable];
        for ((k, axis), c) in dofs.iter().zip(&columns) {
            let amount = c.dot(&y).clamp(-opts.max_joint_step, opts.max_joint_step);
            match &links.constraints[*k] {
                Some((
                    JointConstraint::Hinge {
                        hinge_axis,
                        min_angle,
                        max_angle,
                    },
                    _,
                )) => {
                    let (_, current) = twist_about(&trial[*k], hinge_axis);
                    let next = clamp_hinge(current + amount, *min_angle, *max_angle);
                    trial[*k] = hinge_rotation(hinge_axis, next);
                }
                _ => spin[*k] += axis * amount,
            }
        }
        for k in 0..movable {
            if spin[k] != Vec3::zeros() {
                let world = Rotation::from_scaled_axis(spin[k]);
                let mut next = parents[k].inverse() * world * parents[k] * trial[k];
                if let Some((c, bone)) = &links.constraints[k] {
                    next = project(next, c, bone);
                }
                trial[k] = next;
            }
        }
        let err = (links.effector(&trial) - target).norm();
        if err < best.error {
            best.error = err;
            best.rotations = trial;
            damping = (damping * 0.5).max(1e-9 * reach);
        } else {
            damping *= 4.0;
        }
    }
    steps
}

/// Hinge angle that makes the anchor-to-effector distance equal the
/// anchor-to-target distance, leaving the aiming to joints nearer the
/// anchor. Among valid angles the one closest to the current is chosen;
/// `None` for non-hinge joints or when the geometry gives no information.
fn match_reach(
    rotation: &Rotation,
    parent: &Rotation,
    constraint: &JointConstraint,
    pivot: Vec3,
    anchor: Vec3,
    effector: Vec3,
    target: Vec3,
) -> Option<Rotation> {
    let JointConstraint::Hinge {
        hinge_axis,
        min_angle,
        max_angle,
    } = constraint
    else {
        return None;
    };
    let axis = parent * hinge_axis;
    let p = pivot - anchor;
    let q = effector - pivot;
    let q_along = axis * q.dot(&axis);
    let q_perp = q - q_along;
    // |p + R(d) q|² = base + 2 (c0 + amp cos(d - phase))
    let base = p.norm_squared() + q.norm_squared();
    let c0 = p.dot(&q_along);
    let (cx, sx) = (p.dot(&q_perp), p.dot(&axis.cross(&q_perp)));
    let amp = cx.hypot(sx);
    if amp < 1e-12 {
        return None;
    }
    let phase = sx.atan2(cx);
    let want = (target - anchor).norm_squared();
    let kappa = ((want - base) / 2.0 - c0) / amp;
    let (_, current) = twist_about(rotation, hinge_axis);
    let reach_at = |a: f64| (base + 2.0 * (c0 + amp * (a - current - phase).cos())).max(0.0).sqrt();
    let miss = |a: f64| (reach_at(a) - want.sqrt()).abs();

    let spread = kappa.clamp(-1.0, 1.0).acos();
    let mut best: Option<(f64, f64, f64)> = None; // (miss, |delta|, angle)
    for delta in [phase + spread, phase - spread] {
        for candidate in [wrap_angle(current + wrap_angle(delta)), current + wrap_angle(delta)] {
            let angle = clamp_hinge(candidate, *min_angle, *max_angle);
            let key = (miss(angle), (angle - current).abs(), angle);
            let better = match best {
                None => true,
                Some((m, d, _)) => key.0 < m - 1e-12 || (key.0 <= m + 1e-12 && key.1 < d),
            };
            if better {
                best = Some(key);
            }
        }
    }
    best.map(|(_, _, angle)| hinge_rotation(hinge_axis, angle))
}

const RESTART_FRACTIONS: [f64; 3] = [0.5, 0.25, 0.75];

struct Descent {
    rotations: Vec<Rotation>,
    error: f64,
}

/// Runs coordinate descent from `rots`, recording any improvement in `best`.
/// Returns the number of sweeps used.
fn descend(
    links: &Links,
    best: &mut Descent,
    mut rots: Vec<Rotation>,
    target: Vec3,
    tolerance: f64,
    reach: f64,
    opts: &IkOptions,
    lead_forward: bool,
) -> usize {
    let movable = rots.len() - 1;
    let mut positions = Vec::with_capacity(rots.len());
    let mut parents = Vec::with_capacity(rots.len());
    let mut prev_err = (links.effector(&rots) - target).norm();
    let mut stalled = 0;
    let mut sweeps = 0;
    while sweeps < opts.max_iterations {
        sweeps += 1;
        // restarts lead with one anchor-first sweep so parent twists can
        // orient a seeded bend before the hinge itself moves
        let forward = lead_forward && sweeps == 1;
        for i in 0..movable {
            let k = if forward { i } else { movable - 1 - i };
            links.pose(&rots, &mut positions, &mut parents);
            let effector = links.effector(&rots);
            let pivot = positions[k];
            if sweeps == 1 && k > 0 {
                if let Some((hinge, _)) = &links.constraints[k] {
                    if let Some(r) = match_reach(&rots[k], &parents[k], hinge, pivot, positions[0], effector, target) {
                        rots[k] = r;
                        continue;
                    }
                }
            }
            rots[k] = step_joint(
                rots[k],
                &parents[k],
                links.constraints[k].as_ref(),
                &links.bones[k + 1],
                effector - pivot,
                target - pivot,
                opts.max_joint_step,
            );
        }
        let err = (links.effector(&rots) - target).norm();
        if err < best.error {
            best.error = err;
            best.rotations.clone_from(&rots);
        }
        if best.error <= tolerance {
            break;
        }
        if prev_err - err <= 1e-12 * reach {
            stalled += 1;
            if stalled >= 3 {
                break;
            }
        } else {
            stalled = 0;
        }
        prev_err = err;
    }
    sweeps
}

/// `rots` with every movable hinge set to `fraction` of its range, or
/// `None` if the chain has no hinge to reseed.
fn bent_seed(links: &Links, rots: &[Rotation], fraction: f64) -> Option<Vec<Rotation>> {
    let mut seed = rots.to_vec();
    let mut any = false;
    for (k, c) in links.constraints[..rots.len() - 1].iter().enumerate() {
        if let Some((
            JointConstraint::Hinge {
                hinge_axis,
                min_angle,
                max_angle,
            },
            _,
        )) = c
        {
            seed[k] = hinge_rotation(hinge_axis, min_angle + fraction * (max_angle - min_angle));
            any = true;
        }
    }
    any.then_some(seed)
}

/// Rotation about the joint-to-target line that brings the bone direction
/// `dir` back inside the cone (or as close as it gets). Turning about that
/// line keeps the effector's distance to the target, so it is free with
/// respect to the objective. `None` when `dir` is already inside.
fn roll_into_cone(dir: &Vec3, cone_axis: &Vec3, half_angle: f64, to_target: &Vec3) -> Option<Rotation> {
    let need = half_angle.cos();
    if dir.dot(cone_axis) >= need {
        return None;
    }
    let n = to_target.norm();
    if n < 1e-12 {
        return None;
    }
    let w = to_target / n;
    let along = dir.dot(&w);
    let perp = dir - w * along;
    let a = along * w.dot(cone_axis);
    let p = perp.dot(cone_axis);
    let q = w.cross(&perp).dot(cone_axis);
    let r = p.hypot(q);
    if r < 1e-12 {
        return None;
    }
    let best = q.atan2(p);
    let phi = if a + r <= need {
        best
    } else {
        // smallest turn reaching the boundary, nudged just inside
        let spread = ((need - a) / r).clamp(-1.0, 1.0).acos() * (1.0 - 1e-9);
        let (lo, hi) = (wrap_angle(best - spread), wrap_angle(best + spread));
        if lo.abs() <= hi.abs() {
            lo
        } else {
            hi
        }
    };
    Some(Rotation::from_axis_angle(&nalgebra::Unit::new_unchecked(w), phi))
}

/// Signed angle about unit `axis` turning `u` toward `v` once both are
/// projected onto the plane orthogonal to `axis`.
fn angle_about(axis: &Vec3, u: &Vec3, v: &Vec3) -> Option<f64> {
    let u = u - axis * u.dot(axis);
    let v = v - axis * v.dot(axis);
    let scale = u.norm() * v.norm();
    if scale < 1e-18 {
        return None;
    }
    Some(axis.dot(&u.cross(&v)).atan2(u.dot(&v)))
}

/// One coordinate-descent update of a single joint.
///
/// `to_effector` and `to_target` are world-space vectors from the joint;
/// `next_bone` is the chain bone leaving this joint, in its own frame.
fn step_joint(
    rotation: Rotation,
    parent: &Rotation,
    constraint: Option<&(JointConstraint, Vec3)>,
    next_bone: &Vec3,
    to_effector: Vec3,
    to_target: Vec3,
    max_step: f64,
) -> Rotation {
    match constraint {
        Some((
            JointConstraint::Hinge {
                hinge_axis,
                min_angle,
                max_angle,
            },
            _,
        )) => {
            let axis = parent * hinge_axis;
            let Some(delta) = angle_about(&axis, &to_effector, &to_target) else {
                return rotation;
            };
            let delta = delta.clamp(-max_step, max_step);
            let (_, current) = twist_about(&rotation, hinge_axis);
            let raw = current + delta;
            let in_range = |a: f64| a >= *min_angle && a <= *max_angle;
            let next = if in_range(raw) {
                raw
            } else if in_range(wrap_angle(raw)) {
                wrap_angle(raw)
            } else {
                clamp_hinge(raw, *min_angle, *max_angle)
            };
            hinge_rotation(hinge_axis, next)
        }
        other => {
            // twist about the outgoing bone first: it leaves the bone's
            // direction, and so a ball constraint, untouched while turning
            // any bend further down the chain toward the target
            let mut rotation = rotation;
            let mut to_effector = to_effector;
            let bone = (parent * rotation * next_bone).normalize();
            if let Some(t) = angle_about(&bone, &to_effector, &to_target) {
                let t = t.clamp(-max_step, max_step);
                let twist_world = Rotation::from_axis_angle(&nalgebra::Unit::new_unchecked(bone), t);
                rotation = parent.inverse() * twist_world * parent * rotation;
                to_effector = twist_world * to_effector;
            }
            if to_effector.norm() < 1e-12 || to_target.norm() < 1e-12 {
                return rotation;
            }
            let mut delta = swing(&to_effector, &to_target);
            if delta.angle() > max_step {
                if let Some(axis) = delta.axis() {
                    delta = Rotation::from_axis_angle(&axis, max_step);
                }
            }
            // world-space delta expressed in the parent frame
            let local = parent.inverse() * delta * parent;
            let mut next = local * rotation;
            match other {
                Some((c, bone)) => {
                    if let JointConstraint::Ball { cone_axis, half_angle } = c {
                        let axis = parent * cone_axis;
                        let dir = parent * next * bone;
                        if let Some(roll) = roll_into_cone(&dir, &axis, *half_angle, &to_target) {
                            next = parent.inverse() * roll * parent * next;
                        }
                    }
                    project(next, c, bone)
                }
                None => next,
            }
        }
    }
}
