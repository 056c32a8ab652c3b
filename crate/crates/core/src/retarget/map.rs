use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{basis_frame, denormalize_joint, normalize_joint, RetargetError, DEFAULT_EPSILON_BASIS};
use crate::geometry::Vec3;
use crate::skeleton::{AvatarRig, KeypointFrame, LandmarkScheme, DEFAULT_CONFIDENCE_THRESHOLD};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read retarget map {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed retarget map: {0}")]
    Parse(String),
    #[error("limb {limb:?}: landmark {name:?} is not in scheme {scheme:?}")]
    UnknownLandmark { limb: String, name: String, scheme: String },
    #[error("limb {limb:?}: joint {name:?} is not in the rig")]
    UnknownJoint { limb: String, name: String },
    #[error("limb {limb:?}: {anchor:?} is not an ancestor of {effector:?}")]
    NotAChain {
        limb: String,
        anchor: String,
        effector: String,
    },
    #[error("duplicate limb name {0:?}")]
    DuplicateLimb(String),
    #[error("limb {0:?} has an empty landmark endpoint")]
    EmptyEndpoint(String),
}

/// A source-side point: one landmark, or the centroid of several.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint(pub Vec<usize>);

impl Endpoint {
    /// Centroid position and weakest confidence, or the first landmark below
    /// `threshold`.
    fn resolve(&self, frame: &KeypointFrame, threshold: f64) -> Result<Vec3, usize> {
        let mut sum = Vec3::zeros();
        for &id in &self.0 {
            let kp = &frame.points[id];
            if kp.confidence < threshold {
                return Err(id);
            }
            sum += kp.position;
        }
        Ok(sum / self.0.len() as f64)
    }
}

/// One limb: which source vectors drive which rig chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbEntry {
    pub name: String,
    pub basis_source: [Endpoint; 2],
    pub basis_rig: [usize; 2],
    pub joint_source: [Endpoint; 2],
    pub anchor: usize,
    pub effector: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetMap {
    pub name: String,
    pub entries: Vec<LimbEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    name: String,
    limbs: Vec<LimbDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LimbDoc {
    name: String,
    basis: PairDoc,
    joint: PairDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairDoc {
    source: [EndpointDoc; 2],
    rig: [String; 2],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EndpointDoc {
    One(String),
    Many(Vec<String>),
}

impl RetargetMap {
    /// Parses a map and checks it against `scheme` and `rig`.
    pub fn from_toml_str(doc: &str, scheme: &LandmarkScheme, rig: &AvatarRig) -> Result<Self, MapError> {
        let doc: MapDoc = toml::from_str(doc).map_err(|e| MapError::Parse(e.to_string()))?;
        let mut seen = HashSet::new();
        let mut entries = Vec::with_capacity(doc.limbs.len());
        for limb in doc.limbs {
            if !seen.insert(limb.name.clone()) {
                return Err(MapError::DuplicateLimb(limb.name));
            }
            let name = &limb.name;
            let endpoint = |e: &EndpointDoc| -> Result<Endpoint, MapError> {
                let names: Vec<&String> = match e {
                    EndpointDoc::One(n) => vec![n],
                    EndpointDoc::Many(ns) => ns.iter().collect(),
                };
                if names.is_empty() {
                    return Err(MapError::EmptyEndpoint(name.clone()));
                }
                names
                    .into_iter()
                    .map(|n| {
                        scheme.id_of(n).ok_or_else(|| MapError::UnknownLandmark {
                            limb: name.clone(),
                            name: n.clone(),
                            scheme: scheme.name().to_owned(),
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Endpoint)
            };
            let joint = |n: &String| {
                rig.id_of(n).ok_or_else(|| MapError::UnknownJoint {
                    limb: name.clone(),
                    name: n.clone(),
                })
            };
            let anchor = joint(&limb.joint.rig[0])?;
            let effector = joint(&limb.joint.rig[1])?;
            if rig.path(anchor, effector).is_none() {
                return Err(MapError::NotAChain {
                    limb: name.clone(),
                    anchor: limb.joint.rig[0].clone(),
                    effector: limb.joint.rig[1].clone(),
                });
            }
            entries.push(LimbEntry {
                name: name.clone(),
                basis_source: [endpoint(&limb.basis.source[0])?, endpoint(&limb.basis.source[1])?],
                basis_rig: [joint(&limb.basis.rig[0])?, joint(&limb.basis.rig[1])?],
                joint_source: [endpoint(&limb.joint.source[0])?, endpoint(&limb.joint.source[1])?],
                anchor,
                effector,
            });
        }
        Ok(Self {
            name: doc.name,
            entries,
        })
    }

    pub fn load(path: &Path, scheme: &LandmarkScheme, rig: &AvatarRig) -> Result<Self, MapError> {
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, scheme, rig)
    }

    /// The shipped arms/legs/spine map.
    pub fn default_for(scheme: &LandmarkScheme, rig: &AvatarRig) -> Result<Self, MapError> {
        Self::from_toml_str(crate::data::DEFAULT_MAP, scheme, rig)
    }
}

/// Target for one limb's rig chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LimbTarget {
    /// Index into [`RetargetMap::entries`].
    pub limb: usize,
    pub anchor: usize,
    pub effector: usize,
    /// Retargeted limb vector, anchor to effector.
    pub offset: Vec3,
    /// `rig_pose[anchor] + offset`.
    pub target: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    LowConfidence { landmark: usize },
    DegenerateSourceBasis,
    DegenerateRigBasis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetargetOutcome {
    pub targets: Vec<LimbTarget>,
    /// Limbs left out of this frame, by map index.
    pub skipped: Vec<(usize, SkipReason)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetargetOptions {
    pub confidence_threshold: f64,
    pub epsilon_basis: f64,
}

impl Default for RetargetOptions {
    fn default() -> Self {
        Self {
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
            epsilon_basis: DEFAULT_EPSILON_BASIS,
        }
    }
}

/// Maps every limb of `map` from the tracked body onto the rig.
///
/// `rig_pose` holds world positions of all rig joints (as returned by
/// forward kinematics). Limbs whose landmarks are not confident enough or
/// whose basis is degenerate are skipped and listed; the call fails only if
/// every limb is skipped.
pub fn retarget_frame(
    frame: &KeypointFrame,
    map: &RetargetMap,
    rig_pose: &[Vec3],
    opts: &RetargetOptions,
) -> Result<RetargetOutcome, RetargetError> {
    let mut out = RetargetOutcome {
        targets: Vec::with_capacity(map.entries.len()),
        skipped: Vec::new(),
    };
    for (i, e) in map.entries.iter().enumerate() {
        match retarget_limb(frame, e, rig_pose, opts) {
            Ok(offset) => out.targets.push(LimbTarget {
                limb: i,
                anchor: e.anchor,
                effector: e.effector,
                offset,
                target: rig_pose[e.anchor] + offset,
            }),
            Err(reason) => out.skipped.push((i, reason)),
        }
    }
    if out.targets.is_empty() {
        return Err(RetargetError::EmptyResult);
    }
    Ok(out)
}

fn retarget_limb(
    frame: &KeypointFrame,
    e: &LimbEntry,
    rig_pose: &[Vec3],
    opts: &RetargetOptions,
) -> Result<Vec3, SkipReason> {
    let th = opts.confidence_threshold;
    let point = |ep: &Endpoint| {
        ep.resolve(frame, th)
            .map_err(|landmark| SkipReason::LowConfidence { landmark })
    };
    let b = point(&e.basis_source[1])? - point(&e.basis_source[0])?;
    let j = point(&e.joint_source[1])? - point(&e.joint_source[0])?;
    let b_rig = rig_pose[e.basis_rig[1]] - rig_pose[e.basis_rig[0]];
    let source = basis_frame(b, opts.epsilon_basis).map_err(|_| SkipReason::DegenerateSourceBasis)?;
    let engine = basis_frame(b_rig, opts.epsilon_basis).map_err(|_| SkipReason::DegenerateRigBasis)?;
    Ok(denormalize_joint(&normalize_joint(j, &source), &engine))
}
