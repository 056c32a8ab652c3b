//! A two-stage test pipeline and the status timeline its scheduling rules imply.

use std::sync::{mpsc, Arc};
use std::time::Duration;

use posekit_core::pipeline::io::{MemorySink, SinkFrame, VecSource};
use posekit_core::pipeline::stage::{IdentityStage, StageError};
use posekit_core::pipeline::{
    Body, Fault, FaultKind, Packet, Pipeline, PipelineConfig, RunReport, SinkCadence, Stage, StalePolicy, Status,
};
use posekit_core::{JointConfiguration, Keypoint, KeypointFrame, LandmarkScheme, Rotation, SpaceTag, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const PERIOD: u64 = 33_333;
pub const TICK: u64 = 1_000;
pub const FRAME_GAP: u64 = 33_333;

/// Turns any keypoint packet into a joint packet carrying its sequence.
pub struct ToJoints;

impl Stage for ToJoints {
    fn name(&self) -> &str {
        "ik"
    }

    fn process(&mut self, mut p: Packet) -> Result<Packet, StageError> {
        let config = JointConfiguration {
            rotations: vec![Rotation::from_scaled_axis(Vec3::new(0.0, p.sequence as f64 * 1e-3, 0.0)); 3],
            timestamp_us: p.timestamp_us,
            sequence: p.sequence,
            stale: false,
        };
        p.body = Body::Joints(config, Status::Fresh);
        Ok(p)
    }
}

pub fn neutral() -> JointConfiguration {
    JointConfiguration {
        rotations: vec![Rotation::identity(); 3],
        timestamp_us: 0,
        sequence: 0,
        stale: false,
    }
}

pub fn packets(n: u32) -> Vec<Packet> {
    let scheme = Arc::new(LandmarkScheme::coco_17());
    (0..n)
        .map(|i| Packet {
            sequence: i,
            timestamp_us: i as u64 * FRAME_GAP,
            origin_us: 0,
            body: Body::Keypoints(KeypointFrame {
                timestamp_us: i as u64 * FRAME_GAP,
                sequence: i,
                scheme: scheme.clone(),
                points: vec![Keypoint::new(Vec3::zeros(), 1.0); 17],
                space: SpaceTag::World3d,
            }),
        })
        .collect()
}

pub fn config(faults: Vec<Fault>) -> PipelineConfig {
    let mut c = PipelineConfig::new(StalePolicy::with_defaults(neutral()));
    c.cadence = SinkCadence::Period(PERIOD);
    c.tick_us = TICK;
    c.faults = faults;
    c
}

pub fn pipeline(n: u32, faults: Vec<Fault>) -> (Pipeline, MemorySink) {
    let sink = MemorySink::default();
    let p = Pipeline::new(
        Box::new(VecSource::new(packets(n))),
        vec![Box::new(IdentityStage::new("estimator")), Box::new(ToJoints)],
        Box::new(sink.clone()),
        config(faults),
    )
    .unwrap();
    (p, sink)
}

pub fn fault(stage: &str, kind: FaultKind) -> Fault {
    Fault {
        stage: stage.into(),
        kind,
    }
}

pub fn ceil_tick(t: u64) -> u64 {
    t.div_ceil(TICK) * TICK
}

/// Status sequence the sink must produce when `estimator` is stalled over
/// `[from, end)`, derived from the scheduling rules alone.
pub fn expected_statuses(n: u32, from: u64, end: u64) -> Vec<Status> {
    let emitted: Vec<u64> = (0..n as u64).map(|i| ceil_tick(i * FRAME_GAP)).collect();
    let mut arrivals: Vec<u64> = emitted.iter().copied().filter(|&e| e < from || e >= end).collect();
    if emitted.iter().any(|&e| e >= from && e < end) {
        arrivals.push(end);
    }
    arrivals.sort_unstable();
    arrivals.dedup();
    let last_tick = *emitted.last().unwrap().max(&end);
    let status_at = |t: u64| {
        let Some(a) = arrivals.iter().rev().find(|&&a| a <= t) else {
            return Status::Starved;
        };
        match t - a {
            age if age <= 100_000 => Status::Fresh,
            age if age <= 1_000_000 => Status::Stale,
            _ => Status::Starved,
        }
    };
    let periodic: Vec<u64> = (0..)
        .map(|k| ceil_tick(k * PERIOD))
        .take_while(|&t| t <= last_tick)
        .collect();
    let mut out: Vec<Status> = periodic.iter().map(|&t| status_at(t)).collect();
    if arrivals.last() > periodic.last() {
        out.push(status_at(last_tick));
    }
    out
}

pub fn compress(s: &[Status]) -> Vec<Status> {
    let mut v = s.to_vec();
    v.dedup();
    v
}

pub fn check_invariants(report: &RunReport, frames: &[SinkFrame]) {
    for m in &report.metrics.stages {
        assert!(m.frames_out + m.drops <= m.frames_in, "{m:?}");
    }
    assert!(frames
        .windows(2)
        .all(|w| w[0].configuration.sequence <= w[1].configuration.sequence));
    assert_eq!(report.metrics.sink.emitted as usize, frames.len());
}

pub fn random_faults(rng: &mut ChaCha8Rng, horizon: u64) -> Vec<Fault> {
    let stages = ["source", "estimator", "ik", "sink"];
    (0..rng.gen_range(0..4))
        .map(|_| {
            let stage = stages[rng.gen_range(0..stages.len())];
            let at = rng.gen_range(0..horizon);
            let kind = match rng.gen_range(0..3) {
                0 => FaultKind::Stall {
                    from_us: at,
                    duration_us: rng.gen_range(1..horizon / 2),
                },
                1 => FaultKind::Kill { at_us: at },
                _ => FaultKind::Panic { at_us: at },
            };
            fault(stage, kind)
        })
        .collect()
}

/// Runs `f` on another thread, failing if it does not finish in time.
pub fn within<T: Send + 'static>(limit: Duration, f: impl FnOnce() -> T + Send + 'static) -> T {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let _ = tx.send(f());
    });
    rx.recv_timeout(limit).expect("pipeline did not finish: deadlock")
}
