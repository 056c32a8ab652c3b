//! Pipeline endpoints: frame sources and joint-configuration sinks.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex};

use super::stage::{Body, Packet};
use super::transport::{write_frame, FrameReader};
use super::wire::{FrameType, WireError, WireFrame};
use super::Status;
use crate::skeleton::{AvatarRig, JointConfiguration, LandmarkScheme};

/// Produces packets in order. `origin_us` of returned packets is ignored.
pub trait Source: Send {
    fn next_packet(&mut self) -> Result<Option<Packet>, WireError>;

    /// Whether packets are released at their recorded timestamps (files) or
    /// as soon as they are read (live sockets).
    fn paced(&self) -> bool {
        true
    }
}

pub struct VecSource {
    packets: VecDeque<Packet>,
}

impl VecSource {
    pub fn new(packets: impl IntoIterator<Item = Packet>) -> Self {
        Self {
            packets: packets.into_iter().collect(),
        }
    }
}

impl Source for VecSource {
    fn next_packet(&mut self) -> Result<Option<Packet>, WireError> {
        Ok(self.packets.pop_front())
    }
}

/// Turns wire frames into packet bodies.
#[derive(Clone)]
pub struct FrameDecoder {
    pub scheme: Arc<LandmarkScheme>,
    pub rig: Arc<AvatarRig>,
}

impl FrameDecoder {
    pub fn body(&self, frame: &WireFrame) -> Result<Body, WireError> {
        match frame.frame_type {
            FrameType::Keypoints3d => Ok(Body::Keypoints(frame.to_keypoints(&self.scheme)?)),
            FrameType::JointConfig => {
                let (config, status) = frame.to_joints(&self.rig)?;
                Ok(Body::Joints(config, status))
            }
            FrameType::Keypoints2d => Err(WireError::WrongFrameType {
                expected: FrameType::Keypoints3d,
                got: FrameType::Keypoints2d,
            }),
        }
    }
}

/// A single stream of 3D keypoint or joint frames.
pub struct WireSource<R> {
    reader: FrameReader<R>,
    decoder: FrameDecoder,
    paced: bool,
}

impl<R: Read> WireSource<R> {
    pub fn new(reader: R, decoder: FrameDecoder, paced: bool) -> Self {
        Self {
            reader: FrameReader::new(reader),
            decoder,
            paced,
        }
    }
}

impl<R: Read + Send> Source for WireSource<R> {
    fn next_packet(&mut self) -> Result<Option<Packet>, WireError> {
        let Some(frame) = self.reader.next_frame()? else {
            return Ok(None);
        };
        Ok(Some(Packet {
            sequence: frame.sequence,
            timestamp_us: frame.timestamp_us,
            origin_us: 0,
            body: self.decoder.body(&frame)?,
        }))
    }

    fn paced(&self) -> bool {
        self.paced
    }
}

/// Two pixel-frame streams paired by timestamp. When the heads of the two
/// streams are further apart than the window, the older one is discarded.
pub struct DualWireSource<R> {
    a: FrameReader<R>,
    b: FrameReader<R>,
    scheme: Arc<LandmarkScheme>,
    window_us: u64,
    paced: bool,
}

impl<R: Read> DualWireSource<R> {
    pub fn new(a: R, b: R, scheme: Arc<LandmarkScheme>, window_us: u64, paced: bool) -> Self {
        Self {
            a: FrameReader::new(a),
            b: FrameReader::new(b),
            scheme,
            window_us,
            paced,
        }
    }

    fn next_2d(reader: &mut FrameReader<R>) -> Result<Option<WireFrame>, WireError> {
        let frame = reader.next_frame()?;
        if let Some(f) = &frame {
            if f.frame_type != FrameType::Keypoints2d {
                return Err(WireError::WrongFrameType {
                    expected: FrameType::Keypoints2d,
                    got: f.frame_type,
                });
            }
        }
        Ok(frame)
    }
}

impl<R: Read + Send> Source for DualWireSource<R> {
    fn next_packet(&mut self) -> Result<Option<Packet>, WireError> {
        let (Some(mut fa), Some(mut fb)) = (Self::next_2d(&mut self.a)?, Self::next_2d(&mut self.b)?) else {
            return Ok(None);
        };
        while fa.timestamp_us.abs_diff(fb.timestamp_us) > self.window_us {
            let (older, reader) = if fa.timestamp_us < fb.timestamp_us {
                (&mut fa, &mut self.a)
            } else {
                (&mut fb, &mut self.b)
            };
            log::debug!("unpaired view frame {} dropped", older.sequence);
            match Self::next_2d(reader)? {
                Some(f) => *older = f,
                None => return Ok(None),
            }
        }
        let ka = fa.to_keypoints(&self.scheme)?;
        let kb = fb.to_keypoints(&self.scheme)?;
        let (ta, tb) = (ka.timestamp_us, kb.timestamp_us);
        Ok(Some(Packet {
            sequence: ka.sequence,
            timestamp_us: ta / 2 + tb / 2 + (ta % 2 + tb % 2) / 2,
            origin_us: 0,
            body: Body::Stereo(ka, kb),
        }))
    }

    fn paced(&self) -> bool {
        self.paced
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkFrame {
    pub configuration: JointConfiguration,
    pub status: Status,
}

pub trait Sink: Send {
    fn emit(&mut self, frame: &SinkFrame) -> std::io::Result<()>;

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// One line per frame:
/// `<sequence> <timestamp_us> <status> <joint>=<rx>,<ry>,<rz> ...`
/// with axis-angle rotation vectors in rig joint order.
pub struct TextSink<W> {
    out: W,
    names: Vec<String>,
}

impl<W: Write> TextSink<W> {
    pub fn new(out: W, rig: &AvatarRig) -> Self {
        Self {
            out,
            names: rig.joints().iter().map(|j| j.name.clone()).collect(),
        }
    }
}

pub fn format_text_line(frame: &SinkFrame, names: &[String]) -> String {
    let c = &frame.configuration;
    let mut line = format!("{} {} {}", c.sequence, c.timestamp_us, frame.status);
    for (name, r) in names.iter().zip(&c.rotations) {
        let v = r.scaled_axis();
        line.push_str(&format!(" {name}={:.6},{:.6},{:.6}", v.x, v.y, v.z));
    }
    line
}

impl<W: Write + Send> Sink for TextSink<W> {
    fn emit(&mut self, frame: &SinkFrame) -> std::io::Result<()> {
        writeln!(self.out, "{}", format_text_line(frame, &self.names))
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Length-prefixed joint-configuration frames.
pub struct WireSink<W> {
    out: W,
}

impl<W: Write> WireSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }
}

impl<W: Write + Send> Sink for WireSink<W> {
    fn emit(&mut self, frame: &SinkFrame) -> std::io::Result<()> {
        let wire = WireFrame::from_joints(&frame.configuration, frame.status).map_err(std::io::Error::other)?;
        write_frame(&mut self.out, &wire).map_err(|e| match e {
            WireError::Io(io) => io,
            other => std::io::Error::other(other),
        })
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Keeps emitted frames in memory; clones share the same buffer.
#[derive(Clone, Default)]
pub struct MemorySink {
    frames: Arc<Mutex<Vec<SinkFrame>>>,
}

impl MemorySink {
    pub fn frames(&self) -> Vec<SinkFrame> {
        self.frames.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl Sink for MemorySink {
    fn emit(&mut self, frame: &SinkFrame) -> std::io::Result<()> {
        self.frames
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(frame.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl Sink for NullSink {
    fn emit(&mut self, _: &SinkFrame) -> std::io::Result<()> {
        Ok(())
    }
}
