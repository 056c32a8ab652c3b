//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

pub mod ik;
pub mod pipeline;
pub mod stereo;
pub mod wire;

use std::path::Path;
use std::sync::Arc;

use posekit_core::pipeline::transport::write_recording;
use posekit_core::pipeline::WireFrame;
use posekit_core::synth::performer_stream;
use posekit_core::LandmarkScheme;

/// Records `frames` frames of the synthetic performer at 30 fps.
pub fn record_3d(path: &Path, frames: usize) {
    let scheme = Arc::new(LandmarkScheme::full_body_33());
    let wire: Vec<WireFrame> = performer_stream(&scheme, 30.0, frames)
        .iter()
        .map(|f| WireFrame::from_keypoints(f).unwrap())
        .collect();
    write_recording(path, &wire).unwrap();
}
