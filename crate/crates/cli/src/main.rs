//! `posekit`: run, replay, benchmark and probe the pose-retargeting engine.

mod bench;
mod probe;
mod replay;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use posekit_core::engine::EngineError;

/// How a command failed; decides the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Runtime(e) => e,
        }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Config(_) => Failure::Config(e.into()),
            EngineError::Bind { .. } | EngineError::Runtime(_) => Failure::Runtime(e.into()),
        }
    }
}

pub type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "posekit", version, about = "Real-time pose retargeting onto an avatar rig")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the engine from a recorded file or socket to an output.
    Run(run::RunArgs),
    /// Send a recording at its recorded cadence.
    Replay(replay::ReplayArgs),
    /// Measure stage latency and throughput on a synthetic performer.
    Bench(bench::BenchArgs),
    /// Triangulate one point from a pixel in each camera.
    Triangulate(probe::TriangulateArgs),
    /// Map one limb vector from a source basis onto a target basis.
    Retarget(probe::RetargetArgs),
    /// Print version information.
    Version,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POSEKIT_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run::cmd_run(args),
        Command::Replay(args) => replay::cmd_replay(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Triangulate(args) => probe::cmd_triangulate(args),
        Command::Retarget(args) => probe::cmd_retarget(args),
        Command::Version => {
            println!(
                "posekit {} (wire protocol v{})",
                env!("CARGO_PKG_VERSION"),
                posekit_core::pipeline::wire::VERSION
            );
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
