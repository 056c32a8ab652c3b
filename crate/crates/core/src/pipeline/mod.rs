//! Staged streaming: source, optional stereo lift, retarget, IK, sink.
//!
//! Stages are connected by depth-one mailboxes, so a slow stage only ever
//! sees the newest frame and memory stays bounded. The sink emits on its
//! own cadence and falls back to the last good pose, then to a neutral
//! pose, when upstream stops delivering. Frames cross process boundaries as
//! length-prefixed binary frames over a stream socket or in a recorded
//! file.

pub mod io;
pub mod mailbox;
pub mod metrics;
pub mod runner;
pub mod stage;
pub mod stale;
pub mod transport;
pub mod wire;

pub use io::{Sink, SinkFrame, Source};
pub use mailbox::{mailbox, Disconnected, MailboxReader, MailboxWriter};
pub use metrics::{PipelineMetrics, StageMetrics};
pub use runner::{Fault, FaultKind, Pipeline, PipelineConfig, PipelineError, RunReport, SinkCadence};
pub use stage::{Body, Packet, Stage};
pub use stale::{apply_stale_policy, StalePolicy, Status};
pub use wire::{decode_frame, encode_frame, FrameType, WireEntry, WireError, WireFrame};
