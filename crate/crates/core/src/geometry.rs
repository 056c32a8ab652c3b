//! Small geometric vocabulary shared by every module.
//!
//! The engine works internally in a y-up right-handed frame: `x` and `z`
//! span the horizontal ("bird's-eye") plane and `y` is height.

use nalgebra::{UnitQuaternion, Vector3};

pub type Vec3 = Vector3<f64>;

/// Rotation of a joint relative to its parent frame.
pub type Rotation = UnitQuaternion<f64>;

/// Swaps the second and third components: `(x, y, z) -> (x, z, y)`.
///
/// Converts between a y-up and a z-up convention. The map is its own
/// inverse and preserves length. Note that it is a reflection, so it flips
/// the handedness of rotations expressed in the remapped frame.
#[inline]
pub fn remap_axes(p: Vec3) -> Vec3 {
    Vec3::new(p.x, p.z, p.y)
}

#[inline]
pub fn is_finite(p: &Vec3) -> bool {
    p.iter().all(|c| c.is_finite())
}

/// Unsigned angle between two non-zero vectors, stable near 0 and π.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Some unit vector orthogonal to `v` (`v` must be non-zero).
pub fn any_orthogonal(v: &Vec3) -> Vec3 {
    let pick = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::x()
    } else if v.y.abs() <= v.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    v.cross(&pick).normalize()
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Parses a `[x, y, z]` array from a structured document.
pub(crate) fn vec3_from_array(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}
