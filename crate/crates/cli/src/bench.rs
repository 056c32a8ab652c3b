use anyhow::anyhow;
use clap::Args;
use posekit_core::engine::Engine;
use posekit_core::pipeline::io::{NullSink, VecSource};
use posekit_core::pipeline::stage::IdentityStage;
use posekit_core::pipeline::{Body, Packet, Pipeline, Stage, Status};
use posekit_core::synth::{performer_stream, project_views};
use posekit_core::JointConfiguration;

use crate::run::EngineArgs;
use crate::{CmdResult, Failure};

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Length of the synthetic performance in seconds.
    #[arg(long, default_value_t = 10.0)]
    pub duration_s: f64,
    /// Frame rate of the synthetic performance.
    #[arg(long, default_value_t = 60.0)]
    pub fps: f64,
    /// Pass frames through stages that do no work.
    #[arg(long)]
    pub identity: bool,
    /// Per-frame budget in ms for end-to-end p99 (default: one frame period).
    #[arg(long)]
    pub budget_ms: Option<f64>,
}

pub fn cmd_bench(args: BenchArgs) -> CmdResult {
    if !(args.duration_s.is_finite() && args.duration_s >= 0.0) {
        return Err(Failure::Config(anyhow!("duration must be non-negative")));
    }
    if !(args.fps.is_finite() && args.fps > 0.0) {
        return Err(Failure::Config(anyhow!("fps must be positive")));
    }
    let mut config = args.engine.resolve()?;
    config.input = None;
    let engine = Engine::new(config)?;
    let count = (args.duration_s * args.fps).round() as usize;
    let frames = performer_stream(&engine.scheme, args.fps, count);

    let (packets, stages): (Vec<Packet>, Vec<Box<dyn Stage>>) = if args.identity {
        let neutral = JointConfiguration::neutral(&engine.rig);
        let packets = frames
            .iter()
            .map(|f| {
                let mut c = neutral.clone();
                c.sequence = f.sequence;
                c.timestamp_us = f.timestamp_us;
                packet(f.sequence, f.timestamp_us, Body::Joints(c, Status::Fresh))
            })
            .collect();
        let stages = ["lift", "retarget", "ik"]
            .into_iter()
            .map(|n| Box::new(IdentityStage::new(n)) as Box<dyn Stage>)
            .collect();
        (packets, stages)
    } else {
        let packets = frames
            .into_iter()
            .map(|f| {
                let (seq, ts) = (f.sequence, f.timestamp_us);
                let body = match &engine.calibration {
                    Some(pair) => {
                        let (a, b) = project_views(&f, pair);
                        Body::Stereo(a, b)
                    }
                    None => Body::Keypoints(f),
                };
                packet(seq, ts, body)
            })
            .collect();
        (packets, engine.stages()?)
    };

    let pipeline = Pipeline::new(
        Box::new(VecSource::new(packets)),
        stages,
        Box::new(NullSink),
        engine.pipeline_config()?,
    )
    .map_err(|e| Failure::Config(e.into()))?;
    let report = pipeline.run_threaded();
    let m = &report.metrics;
    print!("{}", m.report());

    let budget_ms = args.budget_ms.unwrap_or(1e3 / args.fps);
    if let Some(p99) = m.sink.end_to_end.quantile(0.99) {
        let p99_ms = p99.as_secs_f64() * 1e3;
        if p99_ms > budget_ms {
            eprintln!("warning: end-to-end p99 {p99_ms:.3} ms exceeds the {budget_ms:.3} ms frame budget");
        } else {
            println!("end_to_end p99 {p99_ms:.3} ms within the {budget_ms:.3} ms frame budget");
        }
    }
    Ok(())
}

fn packet(sequence: u32, timestamp_us: u64, body: Body) -> Packet {
    Packet {
        sequence,
        timestamp_us,
        origin_us: 0,
        body,
    }
}
