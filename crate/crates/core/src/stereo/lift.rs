use nalgebra::{Matrix3x4, Matrix4, RowVector4, Vector4};

use super::{CameraModel, CameraPair, PixelPoint, StereoError};
use crate::geometry::Vec3;
use crate::skeleton::{Keypoint, KeypointFrame, SpaceTag, DEFAULT_CONFIDENCE_THRESHOLD};

/// Largest timestamp gap between two views of one instant.
pub const DEFAULT_SYNC_WINDOW_US: u64 = 20_000;

const PARALLEL_RAYS: f64 = 1e-9;
const REFINE_STEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    pub point: Vec3,
    /// Root-mean-square pixel residual over the two views.
    pub reprojection_error: f64,
}

/// World point best explaining a pixel in each camera.
///
/// A linear (DLT) solution in normalized image coordinates seeds a few
/// Gauss-Newton steps on the pixel residuals, so that noisy observations
/// land on the least-squares reprojection optimum.
pub fn triangulate(pa: &PixelPoint, pb: &PixelPoint, pair: &CameraPair) -> Result<Triangulation, StereoError> {
    if ![pa.u, pa.v, pb.u, pb.v].iter().all(|c| c.is_finite()) {
        return Err(StereoError::NonFinite);
    }
    let (ra, rb) = (pair.cam_a.ray(pa), pair.cam_b.ray(pb));
    if ra.cross(&rb).norm() / (ra.norm() * rb.norm()) < PARALLEL_RAYS {
        return Err(StereoError::DegenerateRays);
    }

    let mut rows = Matrix4::zeros();
    for (k, (cam, p)) in [(&pair.cam_a, pa), (&pair.cam_b, pb)].into_iter().enumerate() {
        let m = extrinsic(cam);
        let x = (p.u - cam.cx) / cam.fx;
        let y = (p.v - cam.cy) / cam.fy;
        for (j, row) in [x * m.row(2) - m.row(0), y * m.row(2) - m.row(1)].iter().enumerate() {
            let r = RowVector4::new(row[0], row[1], row[2], row[3]);
            rows.set_row(2 * k + j, &(r / r.norm()));
        }
    }
    let svd = rows.svd(false, true);
    let v_t = svd.v_t.ok_or(StereoError::DegenerateRays)?;
    let smallest = svd.singular_values.imin();
    let h: Vector4<f64> = v_t.row(smallest).transpose();
    if h.w.abs() < f64::EPSILON * h.norm() {
        return Err(StereoError::DegenerateRays);
    }
    let mut point = h.xyz() / h.w;

    let mut cost = sum_sq(pa, pb, pair, &point);
    for _ in 0..REFINE_STEPS {
        let Some(next) = gauss_newton_step(pa, pb, pair, &point) else {
            break;
        };
        let c = sum_sq(pa, pb, pair, &next);
        // cost differences near the optimum are below rounding, so only
        // guard against genuine divergence
        if !(c <= cost * (1.0 + 1e-9) + 1e-300) {
            break;
        }
        let step = (next - point).norm();
        point = next;
        cost = c;
        if step <= 1e-14 * (1.0 + point.norm()) {
            break;
        }
    }
    Ok(Triangulation {
        point,
        reprojection_error: (cost / 2.0).sqrt(),
    })
}

fn extrinsic(cam: &CameraModel) -> Matrix3x4<f64> {
    let mut m = Matrix3x4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&cam.rotation);
    m.set_column(3, &cam.translation);
    m
}

fn residual(cam: &CameraModel, p: &PixelPoint, x: &Vec3) -> (f64, f64) {
    let q = cam.project(x);
    (q.x - p.u, q.y - p.v)
}

fn sum_sq(pa: &PixelPoint, pb: &PixelPoint, pair: &CameraPair, x: &Vec3) -> f64 {
    let (a0, a1) = residual(&pair.cam_a, pa, x);
    let (b0, b1) = residual(&pair.cam_b, pb, x);
    a0 * a0 + a1 * a1 + b0 * b0 + b1 * b1
}

fn gauss_newton_step(pa: &PixelPoint, pb: &PixelPoint, pair: &CameraPair, x: &Vec3) -> Option<Vec3> {
    let mut jtj = nalgebra::Matrix3::zeros();
    let mut jtr = Vec3::zeros();
    for (cam, p) in [(&pair.cam_a, pa), (&pair.cam_b, pb)] {
        let c = cam.to_camera(x);
        if c.z.abs() < f64::EPSILON {
            return None;
        }
        let (ru, rv) = residual(cam, p, x);
        // d(pixel)/d(camera point), chained through the rotation
        let du = Vec3::new(cam.fx / c.z, 0.0, -cam.fx * c.x / (c.z * c.z));
        let dv = Vec3::new(0.0, cam.fy / c.z, -cam.fy * c.y / (c.z * c.z));
        for (d, r) in [(du, ru), (dv, rv)] {
            let g = cam.rotation.transpose() * d;
            jtj += g * g.transpose();
            jtr += g * r;
        }
    }
    jtj.cholesky().map(|ch| x - ch.solve(&jtr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftOptions {
    pub sync_window_us: u64,
    pub confidence_threshold: f64,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self {
            sync_window_us: DEFAULT_SYNC_WINDOW_US,
            confidence_threshold: DEFAULT_CONFIDENCE_THRESHOLD,
        }
    }
}

/// Triangulates every landmark of two synchronized pixel frames.
///
/// Landmarks below the confidence threshold in either view, or whose rays
/// are parallel, come out with zero confidence at the origin. The result
/// carries the first view's sequence number and the mean timestamp.
pub fn lift_frame(
    fa: &KeypointFrame,
    fb: &KeypointFrame,
    pair: &CameraPair,
    opts: &LiftOptions,
) -> Result<KeypointFrame, StereoError> {
    if fa.space != SpaceTag::Camera2d || fb.space != SpaceTag::Camera2d {
        return Err(StereoError::NotPixelFrame);
    }
    if fa.scheme != fb.scheme || fa.points.len() != fb.points.len() {
        return Err(StereoError::SchemeMismatch {
            a: fa.scheme.name().to_owned(),
            b: fb.scheme.name().to_owned(),
        });
    }
    let delta_us = fa.timestamp_us.abs_diff(fb.timestamp_us);
    if delta_us > opts.sync_window_us {
        return Err(StereoError::SyncWindowExceeded {
            delta_us,
            window_us: opts.sync_window_us,
        });
    }
    let points = fa
        .points
        .iter()
        .zip(&fb.points)
        .map(|(a, b)| {
            let confidence = a.confidence.min(b.confidence);
            if !(confidence >= opts.confidence_threshold) {
                return Keypoint::occluded();
            }
            let pa = PixelPoint {
                u: a.position.x,
                v: a.position.y,
                confidence: a.confidence,
            };
            let pb = PixelPoint {
                u: b.position.x,
                v: b.position.y,
                confidence: b.confidence,
            };
            match triangulate(&pa, &pb, pair) {
                Ok(t) => Keypoint::new(t.point, confidence),
                Err(_) => Keypoint::occluded(),
            }
        })
        .collect();
    let (ta, tb) = (fa.timestamp_us, fb.timestamp_us);
    Ok(KeypointFrame {
        timestamp_us: ta / 2 + tb / 2 + (ta % 2 + tb % 2) / 2,
        sequence: fa.sequence,
        scheme: fa.scheme.clone(),
        points,
        space: SpaceTag::World3d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn rectified() -> CameraPair {
        let cam = |tx: f64| {
            CameraModel::new(
                "c",
                1.0,
                1.0,
                0.0,
                0.0,
                640,
                480,
                Matrix3::identity(),
                Vec3::new(tx, 0.0, 0.0),
            )
            .unwrap()
        };
        CameraPair::new(cam(0.0), cam(-1.0), 1e-3).unwrap()
    }

    #[test]
    fn point_on_axis_at_depth_five() {
        let t = triangulate(&PixelPoint::new(0.0, 0.0), &PixelPoint::new(-0.2, 0.0), &rectified()).unwrap();
        assert!((t.point - Vec3::new(0.0, 0.0, 5.0)).norm() < 1e-9);
        assert!(t.reprojection_error < 1e-12);
    }

    #[test]
    fn parallel_rays_rejected() {
        let p = PixelPoint::new(0.1, 0.1);
        assert!(matches!(
            triangulate(&p, &p, &rectified()),
            Err(StereoError::DegenerateRays)
        ));
    }

    #[test]
    fn non_finite_pixel_rejected() {
        let p = PixelPoint::new(f64::NAN, 0.0);
        assert!(matches!(
            triangulate(&p, &PixelPoint::new(0.0, 0.0), &rectified()),
            Err(StereoError::NonFinite)
        ));
    }
}
