use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use posekit_core::engine::{Engine, EngineConfig, InputSpec, OutputSpec};

use crate::{CmdResult, Failure};

/// Engine settings. Each flag overrides the same key of `--config`, which
/// overrides the built-in defaults.
#[derive(Args, Debug, Default)]
pub struct EngineArgs {
    /// TOML configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Landmark scheme document (default: built-in 33-landmark body).
    #[arg(long)]
    pub scheme: Option<PathBuf>,
    /// Avatar rig document (default: built-in humanoid).
    #[arg(long)]
    pub rig: Option<PathBuf>,
    /// Retarget map document (default: built-in limb map).
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Stereo calibration document; enables the lift stage.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Age in ms up to which output counts as fresh.
    #[arg(long)]
    pub fresh_ms: Option<u64>,
    /// Age in ms up to which the last good output is held.
    #[arg(long)]
    pub hold_ms: Option<u64>,
    /// IK iteration cap per limb.
    #[arg(long)]
    pub ik_max_iterations: Option<usize>,
    /// IK position tolerance in metres.
    #[arg(long)]
    pub ik_tolerance: Option<f64>,
    /// Sink emission period in microseconds.
    #[arg(long)]
    pub sink_period_us: Option<u64>,
    /// Emit every arriving frame instead of on a period.
    #[arg(long)]
    pub passthrough: bool,
    /// Maximum timestamp gap in ms between paired camera frames.
    #[arg(long)]
    pub sync_window_ms: Option<f64>,
    /// Landmarks below this confidence are ignored.
    #[arg(long)]
    pub confidence_threshold: Option<f64>,
}

impl EngineArgs {
    pub fn resolve(&self) -> Result<EngineConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => EngineConfig::load(path)?,
            None => EngineConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        set(&mut c.scheme, &self.scheme);
        set(&mut c.rig, &self.rig);
        set(&mut c.map, &self.map);
        set(&mut c.calibration, &self.calibration);
        if let Some(v) = self.fresh_ms {
            c.stale.fresh_ms = v;
        }
        if let Some(v) = self.hold_ms {
            c.stale.hold_ms = v;
        }
        if let Some(v) = self.ik_max_iterations {
            c.ik.max_iterations = v;
        }
        if self.ik_tolerance.is_some() {
            c.ik.tolerance = self.ik_tolerance;
        }
        if let Some(v) = self.sink_period_us {
            c.sink.period_us = v;
        }
        if self.passthrough {
            c.sink.passthrough = true;
        }
        if let Some(v) = self.sync_window_ms {
            c.sync_window_ms = v;
        }
        if let Some(v) = self.confidence_threshold {
            c.confidence_threshold = v;
        }
        Ok(c)
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// file:PATH, listen:HOST:PORT, dual-file:A,B or dual-listen:A,B.
    #[arg(long, short)]
    pub input: Option<InputSpec>,
    /// stdout, text:PATH, file:PATH or connect:HOST:PORT.
    #[arg(long, short)]
    pub output: Option<OutputSpec>,
    /// Deterministic single-threaded scheduling on a virtual clock.
    #[arg(long)]
    pub step: bool,
    /// Playback speed of recorded input.
    #[arg(long)]
    pub speed: Option<f64>,
    /// Do not print metrics at exit.
    #[arg(long, short)]
    pub quiet: bool,
}

pub fn cmd_run(args: RunArgs) -> CmdResult {
    let mut config = args.engine.resolve()?;
    if let Some(i) = args.input {
        config.input = Some(i);
    }
    if let Some(o) = args.output {
        config.output = o;
    }
    if args.step {
        config.step = true;
    }
    if let Some(s) = args.speed {
        config.speed = s;
    }
    let engine = Engine::new(config)?;
    log::info!("rig {} with {} joints", engine.rig.name(), engine.rig.len());
    let report = engine.run()?;
    if !args.quiet {
        eprint!("{}", report.metrics.report());
    }
    if let Some(e) = report.source_error {
        return Err(Failure::Runtime(anyhow!("input ended with an error: {e}")));
    }
    if let Some(e) = report.sink_error {
        return Err(Failure::Runtime(anyhow!("output failed: {e}")));
    }
    Ok(())
}
