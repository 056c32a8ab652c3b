use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{ConstraintError, JointConstraint};
use crate::geometry::{is_finite, remap_axes, vec3_from_array, Rotation, Vec3};

#[derive(Debug, Error)]
pub enum RigError {
    #[error("cannot read rig file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed rig document: {0}")]
    Parse(String),
    #[error("rig must have exactly one root joint, found {0}")]
    RootCount(usize),
    #[error("duplicate joint name {0:?}")]
    DuplicateJoint(String),
    #[error("joint {joint:?} names unknown parent {parent:?}")]
    UnknownParent { joint: String, parent: String },
    #[error("joints {0:?} form a cycle or are detached from the root")]
    Cycle(Vec<String>),
    #[error("joint {joint:?} has bone length {length}; must be > 0")]
    BadLength { joint: String, length: f64 },
    #[error("joint {0:?} needs a non-zero finite rest direction")]
    BadRestDirection(String),
    #[error("joint {joint:?}: {source}")]
    BadConstraint { joint: String, source: ConstraintError },
    #[error("constrained joint {joint:?} must have exactly one child, has {children}")]
    ConstrainedBranch { joint: String, children: usize },
    #[error("rest pose violates the constraint on joint {0:?}")]
    RestPoseViolation(String),
    #[error("end effector {0:?} is not a leaf joint of the rig")]
    BadEndEffector(String),
}

/// Axis the rig document treats as "up".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpAxis {
    #[default]
    Y,
    Z,
}

/// Construction input for one joint; see [`AvatarRig::new`].
#[derive(Debug, Clone)]
pub struct JointSpec {
    pub name: String,
    pub parent: Option<String>,
    pub bone_length: f64,
    pub rest_direction: Vec3,
    pub constraint: Option<JointConstraint>,
}

impl JointSpec {
    pub fn root(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            parent: None,
            bone_length: 0.0,
            rest_direction: Vec3::y(),
            constraint: None,
        }
    }

    pub fn child(name: impl Into<String>, parent: impl Into<String>, bone_length: f64, rest_direction: Vec3) -> Self {
        Self {
            name: name.into(),
            parent: Some(parent.into()),
            bone_length,
            rest_direction,
            constraint: None,
        }
    }

    pub fn with_constraint(mut self, c: JointConstraint) -> Self {
        self.constraint = Some(c);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigJoint {
    pub name: String,
    pub parent: Option<usize>,
    /// Length of the bone from the parent to this joint (0 for the root).
    pub bone_length: f64,
    /// Direction of that bone in the parent's frame at rest; unit length.
    pub rest_direction: Vec3,
    /// Limit on this joint's own rotation, which steers its single child bone.
    pub constraint: Option<JointConstraint>,
    pub children: Vec<usize>,
}

/// Avatar joint hierarchy. Joints are stored so that every parent precedes
/// its children; indices into [`AvatarRig::joints`] are the joint ids used by
/// [`super::JointConfiguration`] and the wire format.
#[derive(Debug, Clone, PartialEq)]
pub struct AvatarRig {
    name: String,
    origin: Vec3,
    joints: Vec<RigJoint>,
    by_name: HashMap<String, usize>,
    end_effectors: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RigDoc {
    name: String,
    #[serde(default)]
    up_axis: UpAxis,
    #[serde(default)]
    origin: Option<[f64; 3]>,
    #[serde(default)]
    end_effectors: Vec<String>,
    joints: Vec<JointDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    parent: Option<String>,
    length: Option<f64>,
    rest_direction: Option<[f64; 3]>,
    constraint: Option<ConstraintDoc>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ConstraintDoc {
    Ball {
        cone_axis: [f64; 3],
        half_angle: f64,
    },
    Hinge {
        hinge_axis: [f64; 3],
        min_angle: f64,
        max_angle: f64,
    },
}

impl AvatarRig {
    /// Validates and builds a rig. Rest directions are normalized; bone
    /// lengths of non-root joints must be strictly positive.
    pub fn new(
        name: impl Into<String>,
        origin: Vec3,
        specs: Vec<JointSpec>,
        end_effectors: &[&str],
    ) -> Result<Self, RigError> {
        let mut index = HashMap::with_capacity(specs.len());
        for (i, s) in specs.iter().enumerate() {
            if index.insert(s.name.clone(), i).is_some() {
                return Err(RigError::DuplicateJoint(s.name.clone()));
            }
        }
        let roots: Vec<usize> = (0..specs.len()).filter(|&i| specs[i].parent.is_none()).collect();
        if roots.len() != 1 {
            return Err(RigError::RootCount(roots.len()));
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); specs.len()];
        for (i, s) in specs.iter().enumerate() {
            if let Some(p) = &s.parent {
                let pi = *index.get(p).ok_or_else(|| RigError::UnknownParent {
                    joint: s.name.clone(),
                    parent: p.clone(),
                })?;
                kids[pi].push(i);
            }
        }

        // depth-first from the root, siblings in document order
        let mut order = Vec::with_capacity(specs.len());
        let mut stack = vec![roots[0]];
        while let Some(i) = stack.pop() {
            order.push(i);
            stack.extend(kids[i].iter().rev());
        }
        if order.len() != specs.len() {
            let mut seen = vec![false; specs.len()];
            order.iter().for_each(|&i| seen[i] = true);
            let detached = (0..specs.len())
                .filter(|&i| !seen[i])
                .map(|i| specs[i].name.clone())
                .collect();
            return Err(RigError::Cycle(detached));
        }

        let mut new_id = vec![0usize; specs.len()];
        for (new, &old) in order.iter().enumerate() {
            new_id[old] = new;
        }
        let mut joints = Vec::with_capacity(specs.len());
        for &old in &order {
            let s = &specs[old];
            let parent = s.parent.as_ref().map(|p| new_id[index[p]]);
            let rest = s.rest_direction;
            let n = rest.norm();
            if !is_finite(&rest) || n < 1e-12 {
                return Err(RigError::BadRestDirection(s.name.clone()));
            }
            if parent.is_some() && !(s.bone_length > 0.0 && s.bone_length.is_finite()) {
                return Err(RigError::BadLength {
                    joint: s.name.clone(),
                    length: s.bone_length,
                });
            }
            joints.push(RigJoint {
                name: s.name.clone(),
                parent,
                bone_length: if parent.is_some() { s.bone_length } else { 0.0 },
                rest_direction: rest / n,
                constraint: s.constraint,
                children: kids[old].iter().map(|&k| new_id[k]).collect(),
            });
        }

        for j in &joints {
            if let Some(c) = &j.constraint {
                if j.children.len() != 1 {
                    return Err(RigError::ConstrainedBranch {
                        joint: j.name.clone(),
                        children: j.children.len(),
                    });
                }
                let bone = joints[j.children[0]].rest_direction;
                if c.violation(&Rotation::identity(), &bone) > 1e-9 {
                    return Err(RigError::RestPoseViolation(j.name.clone()));
                }
            }
        }

        let by_name: HashMap<String, usize> = joints.iter().enumerate().map(|(i, j)| (j.name.clone(), i)).collect();
        let end_effectors = if end_effectors.is_empty() {
            (0..joints.len()).filter(|&i| joints[i].children.is_empty()).collect()
        } else {
            end_effectors
                .iter()
                .map(|n| match by_name.get(*n) {
                    Some(&i) if joints[i].children.is_empty() => Ok(i),
                    _ => Err(RigError::BadEndEffector(n.to_string())),
                })
                .collect::<Result<_, _>>()?
        };

        Ok(Self {
            name: name.into(),
            origin,
            joints,
            by_name,
            end_effectors,
        })
    }

    /// Parses a rig document. A `z` up-axis is converted to the engine's
    /// y-up frame here, once.
    pub fn from_toml_str(doc: &str) -> Result<Self, RigError> {
        let doc: RigDoc = toml::from_str(doc).map_err(|e| RigError::Parse(e.to_string()))?;
        let up = doc.up_axis;
        let conv = |v: [f64; 3]| {
            let v = vec3_from_array(v);
            match up {
                UpAxis::Y => v,
                UpAxis::Z => remap_axes(v),
            }
        };
        let mut specs = Vec::with_capacity(doc.joints.len());
        for j in doc.joints {
            let constraint = match j.constraint {
                None => None,
                Some(ConstraintDoc::Ball { cone_axis, half_angle }) => {
                    Some(JointConstraint::ball(conv(cone_axis), half_angle))
                }
                // the axis swap is a reflection: keep the angle range and flip
                // the axis so positive angles keep their physical sense
                Some(ConstraintDoc::Hinge {
                    hinge_axis,
                    min_angle,
                    max_angle,
                }) => {
                    let axis = match up {
                        UpAxis::Y => conv(hinge_axis),
                        UpAxis::Z => -conv(hinge_axis),
                    };
                    Some(JointConstraint::hinge(axis, min_angle, max_angle))
                }
            }
            .transpose()
            .map_err(|source| RigError::BadConstraint {
                joint: j.name.clone(),
                source,
            })?;
            specs.push(JointSpec {
                name: j.name,
                parent: j.parent,
                bone_length: j.length.unwrap_or(0.0),
                rest_direction: j.rest_direction.map(conv).unwrap_or_else(Vec3::y),
                constraint,
            });
        }
        let effectors: Vec<&str> = doc.end_effectors.iter().map(String::as_str).collect();
        let origin = doc.origin.map(conv).unwrap_or_else(Vec3::zeros);
        Self::new(doc.name, origin, specs, &effectors)
    }

    pub fn load(path: &Path) -> Result<Self, RigError> {
        let text = std::fs::read_to_string(path).map_err(|source| RigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The shipped humanoid rig.
    pub fn default_humanoid() -> Self {
        Self::from_toml_str(crate::data::DEFAULT_RIG).expect("embedded rig is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn joints(&self) -> &[RigJoint] {
        &self.joints
    }

    pub fn joint(&self, id: usize) -> &RigJoint {
        &self.joints[id]
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn end_effectors(&self) -> &[usize] {
        &self.end_effectors
    }

    /// Rest direction of the bone steered by a constrained joint.
    pub fn constrained_bone(&self, id: usize) -> Option<Vec3> {
        let j = &self.joints[id];
        match j.children.as_slice() {
            [only] => Some(self.joints[*only].rest_direction),
            _ => None,
        }
    }

    /// Joint ids from `anchor` down to `effector`, inclusive, if `anchor` is
    /// a strict ancestor of `effector`.
    pub fn path(&self, anchor: usize, effector: usize) -> Option<Vec<usize>> {
        let mut path = vec![effector];
        let mut cur = effector;
        while cur != anchor {
            cur = self.joints[cur].parent?;
            path.push(cur);
        }
        if path.len() < 2 {
            return None;
        }
        path.reverse();
        Some(path)
    }
}
