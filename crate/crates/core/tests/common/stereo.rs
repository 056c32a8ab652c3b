//! Synthetic camera rigs and the Monte-Carlo noise reference.

use nalgebra::Matrix3;
use posekit_core::{CameraModel, CameraPair, PixelPoint, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Two cameras 0.4 m apart, 3 m in front of a standing person, converging
/// slightly on the torso.
pub fn desk_pair() -> CameraPair {
    let target = Vec3::new(0.0, 1.1, 0.0);
    let a = CameraModel::look_at(900.0, 900.0, 1280, 720, Vec3::new(-0.2, 1.3, 3.0), target, Vec3::y()).unwrap();
    let b = CameraModel::look_at(900.0, 900.0, 1280, 720, Vec3::new(0.2, 1.3, 3.0), target, Vec3::y()).unwrap();
    CameraPair::new(a, b, 1e-3).unwrap()
}

/// fx = fy = 1, A at the origin, B one unit along +x, both looking along +z.
pub fn unit_rig() -> CameraPair {
    let cam = |tx: f64| {
        CameraModel::new(
            "c",
            1.0,
            1.0,
            0.0,
            0.0,
            2,
            2,
            Matrix3::identity(),
            Vec3::new(tx, 0.0, 0.0),
        )
        .unwrap()
    };
    CameraPair::new(cam(0.0), cam(-1.0), 1e-3).unwrap()
}

pub fn pixel(cam: &CameraModel, x: &Vec3) -> PixelPoint {
    let p = cam.project(x);
    PixelPoint::new(p.x, p.y)
}

pub fn random_visible(rng: &mut ChaCha8Rng, pair: &CameraPair) -> Vec3 {
    loop {
        let x = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..2.2),
            rng.gen_range(-0.8..0.8),
        );
        if pair.cam_a.sees(&x) && pair.cam_b.sees(&x) {
            return x;
        }
    }
}

pub fn rms_residual(pair: &CameraPair, pa: &PixelPoint, pb: &PixelPoint, x: &Vec3) -> f64 {
    let ra = pair.cam_a.project(x) - nalgebra::Vector2::new(pa.u, pa.v);
    let rb = pair.cam_b.project(x) - nalgebra::Vector2::new(pb.u, pb.v);
    ((ra.norm_squared() + rb.norm_squared()) / 2.0).sqrt()
}

/// Mean 3D error for uniform ±1e-3 pixel noise on the unit rig at depth 5,
/// from a 2,000,000-sample Monte-Carlo run of the rectified closed form
/// z = b·f / (u_a − u_b).
pub const MONTE_CARLO_MEAN_ERROR: f64 = 0.017_320_6;

/// Mean 3D error of `triangulate` and of the rectified closed form over `n`
/// noisy observations of the point at depth 5 on the unit rig.
pub fn mean_noisy_errors(n: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let pair = unit_rig();
    let truth = Vec3::new(0.0, 0.0, 5.0);
    let (mut ours, mut closed) = (0.0, 0.0);
    for _ in 0..n {
        let mut noise = || rng.gen_range(-1e-3..1e-3);
        let pa = PixelPoint::new(noise(), noise());
        let pb = PixelPoint::new(-0.2 + noise(), noise());
        ours += (posekit_core::triangulate(&pa, &pb, &pair).unwrap().point - truth).norm();
        let z = 1.0 / (pa.u - pb.u);
        let oracle = Vec3::new(pa.u * z, (pa.v + pb.v) / 2.0 * z, z);
        closed += (oracle - truth).norm();
    }
    (ours / n as f64, closed / n as f64)
}
