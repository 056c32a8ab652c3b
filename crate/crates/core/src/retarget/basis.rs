use super::RetargetError;
use crate::geometry::Vec3;

/// Smallest accepted horizontal basis length, in meters.
pub const DEFAULT_EPSILON_BASIS: f64 = 1e-6;

/// Rotation by `theta` in the `(x, z)` plane acting on column vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarRotation {
    pub theta: f64,
    cos: f64,
    sin: f64,
}

impl PlanarRotation {
    pub fn new(theta: f64) -> Self {
        let (sin, cos) = theta.sin_cos();
        Self { theta, cos, sin }
    }

    pub fn inverse(&self) -> Self {
        Self {
            theta: -self.theta,
            cos: self.cos,
            sin: -self.sin,
        }
    }

    /// `[cos -sin; sin cos] · (x, z)`.
    #[inline]
    pub fn apply(&self, x: f64, z: f64) -> (f64, f64) {
        (self.cos * x - self.sin * z, self.sin * x + self.cos * z)
    }
}

/// Heading and horizontal scale of a reference vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisFrame {
    /// Angle from `+x` to `(B_x, B_z)`, full quadrant.
    pub theta: f64,
    /// `sqrt(B_x² + B_z²)`.
    pub scale: f64,
    pub source_basis: Vec3,
    rotation: PlanarRotation,
}

impl BasisFrame {
    pub fn rotation(&self) -> PlanarRotation {
        self.rotation
    }
}

/// Dimensionless limb vector expressed against a basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedJoint(pub Vec3);

pub fn basis_frame(basis: Vec3, epsilon: f64) -> Result<BasisFrame, RetargetError> {
    let scale = basis.x.hypot(basis.z);
    if !(scale >= epsilon) {
        return Err(RetargetError::DegenerateBasis {
            planar_norm: scale,
            epsilon,
        });
    }
    let theta = basis.z.atan2(basis.x);
    // built from the exact direction cosines rather than sin_cos(theta)
    let rotation = PlanarRotation {
        theta,
        cos: basis.x / scale,
        sin: basis.z / scale,
    };
    Ok(BasisFrame {
        theta,
        scale,
        source_basis: basis,
        rotation,
    })
}

pub fn normalize_joint(joint: Vec3, frame: &BasisFrame) -> NormalizedJoint {
    let (x, z) = frame.rotation.inverse().apply(joint.x, joint.z);
    NormalizedJoint(Vec3::new(x, joint.y, z) / frame.scale)
}

pub fn denormalize_joint(normalized: &NormalizedJoint, frame: &BasisFrame) -> Vec3 {
    let n = normalized.0;
    let (x, z) = frame.rotation.apply(n.x, n.z);
    Vec3::new(x, n.y, z) * frame.scale
}
