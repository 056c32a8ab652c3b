use std::io::{BufWriter, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context};
use clap::Args;
use posekit_core::pipeline::transport::{open_recording, write_frame};

use crate::{CmdResult, Failure};

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Recorded frame file.
    pub input: PathBuf,
    /// Send to HOST:PORT instead of standard output.
    #[arg(long)]
    pub to: Option<String>,
    /// Playback speed; gaps between frames are divided by it.
    #[arg(long, default_value_t = 1.0)]
    pub speed: f64,
}

pub fn cmd_replay(args: ReplayArgs) -> CmdResult {
    if !(args.speed.is_finite() && args.speed > 0.0) {
        return Err(Failure::Config(anyhow!("speed must be positive, got {}", args.speed)));
    }
    let mut frames = open_recording(&args.input)
        .with_context(|| format!("cannot open recording {}", args.input.display()))
        .map_err(Failure::Config)?;
    let mut out: Box<dyn Write> = match &args.to {
        Some(addr) => {
            let stream = TcpStream::connect(addr)
                .with_context(|| format!("cannot connect {addr}"))
                .map_err(Failure::Runtime)?;
            Box::new(BufWriter::new(stream))
        }
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    };
    let start = Instant::now();
    let mut first_ts = None;
    let mut sent = 0u64;
    loop {
        let frame = match frames.next_frame() {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => {
                let _ = out.flush();
                return Err(Failure::Runtime(anyhow!("after {sent} frames: {e}")));
            }
        };
        let ts0 = *first_ts.get_or_insert(frame.timestamp_us);
        let due = Duration::from_secs_f64(frame.timestamp_us.saturating_sub(ts0) as f64 / 1e6 / args.speed);
        if let Some(wait) = due.checked_sub(start.elapsed()) {
            std::thread::sleep(wait);
        }
        write_frame(&mut out, &frame)
            .and_then(|()| out.flush().map_err(Into::into))
            .map_err(|e| Failure::Runtime(anyhow!("send failed after {sent} frames: {e}")))?;
        sent += 1;
    }
    log::info!("replayed {sent} frames in {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}
