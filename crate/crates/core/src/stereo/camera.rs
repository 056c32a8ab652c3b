use std::path::Path;

use nalgebra::{Matrix3, Vector2};
use serde::Deserialize;

use super::StereoError;
use crate::geometry::Vec3;

/// Camera centres closer than this (metres) make a pair unusable.
pub const DEFAULT_MIN_BASELINE: f64 = 1e-3;

const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint {
    pub u: f64,
    pub v: f64,
    pub confidence: f64,
}

impl PixelPoint {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v, confidence: 1.0 }
    }
}

/// Pinhole camera with a world→camera pose.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl CameraModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        rotation: Matrix3<f64>,
        translation: Vec3,
    ) -> Result<Self, StereoError> {
        let bad = |reason: &str| StereoError::BadIntrinsics {
            camera: name.to_owned(),
            reason: reason.to_owned(),
        };
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(bad("focal lengths must be positive"));
        }
        if !(cx.is_finite() && cy.is_finite()) || !translation.iter().all(|c| c.is_finite()) {
            return Err(bad("principal point and translation must be finite"));
        }
        if width == 0 || height == 0 {
            return Err(bad("image size must be non-zero"));
        }
        let deviation = if rotation.iter().all(|c| c.is_finite()) {
            (rotation.transpose() * rotation - Matrix3::identity()).amax()
        } else {
            f64::INFINITY
        };
        if deviation > ORTHONORMAL_TOLERANCE || rotation.determinant() <= 0.0 {
            return Err(StereoError::NonOrthonormalRotation {
                camera: name.to_owned(),
                deviation,
            });
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            rotation,
            translation,
        })
    }

    /// Camera at `eye` looking at `target`, with `up` pointing toward the
    /// top of the image.
    pub fn look_at(
        fx: f64,
        fy: f64,
        width: u32,
        height: u32,
        eye: Vec3,
        target: Vec3,
        up: Vec3,
    ) -> Result<Self, StereoError> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up).normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        Self::new(
            "look_at",
            fx,
            fy,
            width as f64 / 2.0,
            height as f64 / 2.0,
            width,
            height,
            rotation,
            translation,
        )
    }

    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, world: &Vec3) -> Vec3 {
        self.rotation * world + self.translation
    }

    /// Pixel coordinates of a world point; meaningless for points at or
    /// behind the camera plane.
    pub fn project(&self, world: &Vec3) -> Vector2<f64> {
        let c = self.to_camera(world);
        Vector2::new(self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy)
    }

    /// Whether `world` is in front of the camera and inside the image.
    pub fn sees(&self, world: &Vec3) -> bool {
        if self.to_camera(world).z <= 0.0 {
            return false;
        }
        let p = self.project(world);
        (0.0..self.width as f64).contains(&p.x) && (0.0..self.height as f64).contains(&p.y)
    }

    /// World-frame direction of the ray through a pixel.
    pub fn ray(&self, pixel: &PixelPoint) -> Vec3 {
        let n = Vec3::new((pixel.u - self.cx) / self.fx, (pixel.v - self.cy) / self.fy, 1.0);
        self.rotation.transpose() * n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraPair {
    pub cam_a: CameraModel,
    pub cam_b: CameraModel,
    pub baseline: f64,
}

impl CameraPair {
    pub fn new(cam_a: CameraModel, cam_b: CameraModel, min_baseline: f64) -> Result<Self, StereoError> {
        let baseline = (cam_a.center() - cam_b.center()).norm();
        if !(baseline > min_baseline) {
            return Err(StereoError::DegenerateGeometry {
                baseline,
                epsilon: min_baseline,
            });
        }
        Ok(Self { cam_a, cam_b, baseline })
    }

    pub fn swapped(&self) -> Self {
        Self {
            cam_a: self.cam_b.clone(),
            cam_b: self.cam_a.clone(),
            baseline: self.baseline,
        }
    }

    pub fn from_toml_str(doc: &str) -> Result<Self, StereoError> {
        let doc: CalibrationDoc = toml::from_str(doc).map_err(|e| StereoError::Parse(e.to_string()))?;
        let a = doc.cam_a.build("cam_a")?;
        let b = doc.cam_b.build("cam_b")?;
        Self::new(a, b, doc.min_baseline.unwrap_or(DEFAULT_MIN_BASELINE))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StereoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| StereoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationDoc {
    min_baseline: Option<f64>,
    cam_a: CameraDoc,
    cam_b: CameraDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraDoc {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: u32,
    height: u32,
    /// Row-major world→camera rotation.
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
}

impl CameraDoc {
    fn build(&self, name: &str) -> Result<CameraModel, StereoError> {
        let r = &self.rotation;
        CameraModel::new(
            name,
            self.fx,
            self.fy,
            self.cx,
            self.cy,
            self.width,
            self.height,
            Matrix3::new(
                r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2],
            ),
            Vec3::from(self.translation),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tb: [f64; 3], row0: [f64; 3]) -> String {
        format!(
            r#"
            [cam_a]
            fx = 1.0
            fy = 1.0
            cx = 0.0
            cy = 0.0
            width = 640
            height = 480
            rotation = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            translation = [0.0, 0.0, 0.0]

            [cam_b]
            fx = 1.0
            fy = 1.0
            cx = 0.0
            cy = 0.0
            width = 640
            height = 480
            rotation = [{row0:?}, [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            translation = {tb:?}
            "#
        )
    }

    #[test]
    fn unit_baseline_pair() {
        let pair = CameraPair::from_toml_str(&doc([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0])).unwrap();
        assert!((pair.baseline - 1.0).abs() < 1e-15);
        assert_eq!(pair.cam_b.center(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn coincident_cameras_are_degenerate() {
        let err = CameraPair::from_toml_str(&doc([0.0; 3], [1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, StereoError::DegenerateGeometry { .. }));
    }

    #[test]
    fn stretched_row_is_not_a_rotation() {
        let err = CameraPair::from_toml_str(&doc([-1.0, 0.0, 0.0], [1.2, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, StereoError::NonOrthonormalRotation { .. }));
    }

    #[test]
    fn reflection_is_not_a_rotation() {
        let err = CameraPair::from_toml_str(&doc([-1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, StereoError::NonOrthonormalRotation { .. }));
    }

    #[test]
    fn unknown_field_is_parse_error() {
        let text = doc([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]) + "\nskew = 0.0\n";
        assert!(matches!(CameraPair::from_toml_str(&text), Err(StereoError::Parse(_))));
    }

    #[test]
    fn look_at_projects_target_to_principal_point() {
        let cam = CameraModel::look_at(
            500.0,
            500.0,
            640,
            480,
            Vec3::new(0.3, 1.2, -2.5),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::y(),
        )
        .unwrap();
        let p = cam.project(&Vec3::new(0.0, 1.0, 0.0));
        assert!((p.x - 320.0).abs() < 1e-9 && (p.y - 240.0).abs() < 1e-9);
        // higher in the world is higher in the image
        assert!(cam.project(&Vec3::new(0.0, 1.5, 0.0)).y < 240.0);
        assert!((cam.center() - Vec3::new(0.3, 1.2, -2.5)).norm() < 1e-12);
    }
}
