use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use posekit_core::retarget::DEFAULT_EPSILON_BASIS;
use posekit_core::stereo::{triangulate, CameraPair, PixelPoint};
use posekit_core::{basis_frame, denormalize_joint, normalize_joint, Vec3};

use crate::{CmdResult, Failure};

fn parse_numbers<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0f64; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|e| format!("{p:?}: {e}"))?;
        if !slot.is_finite() {
            return Err(format!("{p:?} is not finite"));
        }
    }
    Ok(out)
}

fn parse_pixel(s: &str) -> Result<[f64; 2], String> {
    parse_numbers::<2>(s)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    parse_numbers::<3>(s).map(Vec3::from)
}

#[derive(Args, Debug)]
pub struct TriangulateArgs {
    /// Stereo calibration document (default: the built-in desk pair).
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Pixel U,V in camera A.
    #[arg(long, value_parser = parse_pixel, allow_hyphen_values = true)]
    pub a: [f64; 2],
    /// Pixel U,V in camera B.
    #[arg(long, value_parser = parse_pixel, allow_hyphen_values = true)]
    pub b: [f64; 2],
}

pub fn cmd_triangulate(args: TriangulateArgs) -> CmdResult {
    let pair = match &args.calibration {
        Some(p) => CameraPair::load(p).map_err(|e| Failure::Config(e.into()))?,
        None => {
            CameraPair::from_toml_str(posekit_core::data::DESK_CALIBRATION).map_err(|e| Failure::Config(e.into()))?
        }
    };
    let t = triangulate(
        &PixelPoint::new(args.a[0], args.a[1]),
        &PixelPoint::new(args.b[0], args.b[1]),
        &pair,
    )
    .map_err(|e| Failure::Runtime(e.into()))?;
    let p = t.point;
    println!("point {:.9} {:.9} {:.9}", p.x, p.y, p.z);
    println!("reprojection_error_px {:.9}", t.reprojection_error);
    Ok(())
}

#[derive(Args, Debug)]
pub struct RetargetArgs {
    /// Limb vector X,Y,Z on the tracked body.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub joint: Vec3,
    /// Basis vector X,Y,Z on the tracked body.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub basis: Vec3,
    /// Matching basis vector X,Y,Z on the rig.
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub target_basis: Vec3,
    /// Basis vectors shorter than this in the x-z plane are rejected.
    #[arg(long, default_value_t = DEFAULT_EPSILON_BASIS)]
    pub epsilon: f64,
}

pub fn cmd_retarget(args: RetargetArgs) -> CmdResult {
    let frame = |b: Vec3, which: &str| {
        basis_frame(b, args.epsilon).map_err(|e| Failure::Runtime(anyhow!("{which} basis: {e}")))
    };
    let source = frame(args.basis, "source")?;
    let target = frame(args.target_basis, "target")?;
    let n = normalize_joint(args.joint, &source);
    let out = denormalize_joint(&n, &target);
    println!("source_basis theta {:.12} scale {:.12}", source.theta, source.scale);
    println!("target_basis theta {:.12} scale {:.12}", target.theta, target.scale);
    println!("normalized {:.12} {:.12} {:.12}", n.0.x, n.0.y, n.0.z);
    println!("retargeted {:.12} {:.12} {:.12}", out.x, out.y, out.z);
    Ok(())
}
