//! End-to-end runs through recorded files.

use std::path::Path;
use std::sync::Arc;

use posekit_core::engine::{Engine, EngineConfig, InputSpec, OutputSpec};
use posekit_core::pipeline::transport::{read_recording, write_recording};
use posekit_core::pipeline::{Status, WireFrame};
use posekit_core::synth::{desk_camera_pair, performer_stream, project_views};
mod common;
use common::record_3d;

use posekit_core::{forward_kinematics, AvatarRig, LandmarkScheme, Vec3};

fn step_config(input: InputSpec, output: &Path) -> EngineConfig {
    EngineConfig {
        input: Some(input),
        output: OutputSpec::File(output.into()),
        step: true,
        ..Default::default()
    }
}

fn joints(path: &Path) -> Vec<(posekit_core::JointConfiguration, Status)> {
    let rig = AvatarRig::default_humanoid();
    read_recording(path)
        .unwrap()
        .iter()
        .map(|f| f.to_joints(&rig).unwrap())
        .collect()
}

#[test]
fn recorded_stream_drives_rig_within_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let output = dir.path().join("out.bin");
    record_3d(&input, 45);
    let engine = Engine::new(step_config(InputSpec::File(input), &output)).unwrap();
    let report = engine.run().unwrap();
    assert!(report.source_error.is_none() && report.sink_error.is_none());
    assert!(report.metrics.failures.is_empty());

    let out = joints(&output);
    assert!(out.len() >= 44);
    assert!(out.iter().all(|(_, s)| *s == Status::Fresh));
    assert!(out.windows(2).all(|w| w[0].0.sequence <= w[1].0.sequence));
    assert_eq!(out.last().unwrap().0.sequence, 44);
    let rig = AvatarRig::default_humanoid();
    for (c, _) in &out {
        // rotations went through f32 on the wire
        assert!(c.max_violation(&rig) <= 1e-5, "{}", c.max_violation(&rig));
    }
    // the arms actually move
    let elbow = rig.id_of("left_elbow").unwrap();
    let angles: Vec<f64> = out.iter().map(|(c, _)| c.rotations[elbow].angle()).collect();
    let spread = angles.iter().cloned().fold(f64::MIN, f64::max) - angles.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 0.2, "elbow barely moves: {spread}");

    // both arm limbs share the shoulder basis, so the bend at each elbow is
    // carried over unchanged whenever the hinge can reach it
    let scheme = Arc::new(LandmarkScheme::full_body_33());
    let source = performer_stream(&scheme, 30.0, 45);
    let bend = |a: Vec3, b: Vec3, c: Vec3| (b - a).angle(&(c - b));
    for side in ["left", "right"] {
        let ids = |s: &LandmarkScheme| ["shoulder", "elbow", "wrist"].map(|j| s.id_of(&format!("{side}_{j}")).unwrap());
        let lm = ids(&scheme);
        let rj = ["shoulder", "elbow", "wrist"].map(|j| rig.id_of(&format!("{side}_{j}")).unwrap());
        for (c, _) in &out {
            let f = &source[c.sequence as usize];
            let want = bend(
                f.points[lm[0]].position,
                f.points[lm[1]].position,
                f.points[lm[2]].position,
            );
            let pose = forward_kinematics(&rig, c).unwrap();
            let got = bend(pose[rj[0]], pose[rj[1]], pose[rj[2]]);
            assert!(
                (got - want).abs() < 1e-3,
                "{side} elbow frame {}: {got} vs {want}",
                c.sequence
            );
        }
    }
}

#[test]
fn step_mode_output_is_byte_identical_and_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    record_3d(&input, 30);
    let run = |name: &str, input: InputSpec, passthrough: bool| {
        let out = dir.path().join(name);
        let mut c = step_config(input, &out);
        c.sink.passthrough = passthrough;
        Engine::new(c).unwrap().run().unwrap();
        std::fs::read(out).unwrap()
    };
    let first = run("a.bin", InputSpec::File(input.clone()), false);
    let second = run("b.bin", InputSpec::File(input), false);
    assert!(!first.is_empty());
    assert_eq!(first, second);

    let replayed = run("c.bin", InputSpec::File(dir.path().join("a.bin")), true);
    assert_eq!(first, replayed);
}

#[test]
fn dual_camera_recordings_go_through_lift() {
    let dir = tempfile::tempdir().unwrap();
    let scheme = Arc::new(LandmarkScheme::full_body_33());
    let pair = desk_camera_pair();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for f in performer_stream(&scheme, 30.0, 20) {
        let (va, mut vb) = project_views(&f, &pair);
        vb.timestamp_us += 4_000;
        a.push(WireFrame::from_keypoints(&va).unwrap());
        b.push(WireFrame::from_keypoints(&vb).unwrap());
    }
    write_recording(dir.path().join("a.bin"), &a).unwrap();
    write_recording(dir.path().join("b.bin"), &b).unwrap();
    let calibration = dir.path().join("cal.toml");
    std::fs::write(&calibration, calibration_doc(&pair)).unwrap();

    let output = dir.path().join("out.bin");
    let mut c = step_config(
        InputSpec::DualFile(dir.path().join("a.bin"), dir.path().join("b.bin")),
        &output,
    );
    c.calibration = Some(calibration);
    let report = Engine::new(c).unwrap().run().unwrap();
    assert!(report.metrics.failures.is_empty());
    assert_eq!(report.metrics.stages[1].name, "lift");
    assert_eq!(report.metrics.stages[1].frames_out, 20);
    let out = joints(&output);
    assert!(out.len() >= 19 && out.iter().all(|(_, s)| *s == Status::Fresh));

    // same motion as the native 3D path, up to f32 pixel rounding
    let direct = dir.path().join("direct.bin");
    let wire3d: Vec<WireFrame> = performer_stream(&scheme, 30.0, 20)
        .iter()
        .map(|f| WireFrame::from_keypoints(f).unwrap())
        .collect();
    write_recording(&direct, &wire3d).unwrap();
    let direct_out = dir.path().join("direct_out.bin");
    Engine::new(step_config(InputSpec::File(direct), &direct_out))
        .unwrap()
        .run()
        .unwrap();
    let reference = joints(&direct_out);
    let (last, last_ref) = (&out.last().unwrap().0, &reference.last().unwrap().0);
    for (r, q) in last.rotations.iter().zip(&last_ref.rotations) {
        assert!(r.angle_to(q) < 0.05, "{}", r.angle_to(q));
    }
}

fn calibration_doc(pair: &posekit_core::CameraPair) -> String {
    let cam = |name: &str, c: &posekit_core::CameraModel| {
        let r = c.rotation;
        format!(
            "[{name}]\nfx = {:?}\nfy = {:?}\ncx = {:?}\ncy = {:?}\nwidth = {}\nheight = {}\n\
             rotation = [[{:?}, {:?}, {:?}], [{:?}, {:?}, {:?}], [{:?}, {:?}, {:?}]]\n\
             translation = [{:?}, {:?}, {:?}]\n",
            c.fx,
            c.fy,
            c.cx,
            c.cy,
            c.width,
            c.height,
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            c.translation.x,
            c.translation.y,
            c.translation.z
        )
    };
    format!("{}\n{}", cam("cam_a", &pair.cam_a), cam("cam_b", &pair.cam_b))
}

#[test]
fn corrupt_tail_reports_source_error_after_delivering_frames() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    record_3d(&input, 10);
    let mut bytes = std::fs::read(&input).unwrap();
    bytes.extend_from_slice(&[40, 0, 0, 0, 0x45, 0x53]);
    std::fs::write(&input, bytes).unwrap();
    let output = dir.path().join("out.bin");
    let report = Engine::new(step_config(InputSpec::File(input), &output))
        .unwrap()
        .run()
        .unwrap();
    assert!(report.source_error.is_some());
    assert_eq!(joints(&output).last().unwrap().0.sequence, 9);
}
