//! Length-delimited framing shared by sockets and recorded files: each frame
//! is preceded by its byte length as a little-endian `u32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use super::wire::{decode_frame, encode_frame, WireError, WireFrame, ENTRY_LEN, HEADER_LEN};

/// Longest frame the header's 16-bit count allows.
pub const MAX_FRAME_LEN: u32 = (HEADER_LEN + ENTRY_LEN * u16::MAX as usize) as u32;

pub fn write_frame<W: Write>(out: &mut W, frame: &WireFrame) -> Result<(), WireError> {
    let bytes = encode_frame(frame)?;
    out.write_all(&(bytes.len() as u32).to_le_bytes())?;
    out.write_all(&bytes)?;
    Ok(())
}

/// Reads consecutive length-prefixed frames until a clean end of stream.
pub struct FrameReader<R> {
    inner: R,
    failed: bool,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, failed: false }
    }

    /// Next frame, `None` at end of stream on a frame boundary.
    pub fn next_frame(&mut self) -> Result<Option<WireFrame>, WireError> {
        let mut prefix = [0u8; 4];
        match read_full(&mut self.inner, &mut prefix)? {
            0 => return Ok(None),
            4 => {}
            got => return Err(WireError::TruncatedFrame { needed: 4, got }),
        }
        let len = u32::from_le_bytes(prefix);
        if len > MAX_FRAME_LEN {
            return Err(WireError::FrameTooLarge(len));
        }
        let mut body = vec![0u8; len as usize];
        let got = read_full(&mut self.inner, &mut body)?;
        if got < body.len() {
            return Err(WireError::TruncatedFrame {
                needed: body.len(),
                got,
            });
        }
        decode_frame(&body).map(Some)
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<WireFrame, WireError>;

    /// Stops after the first error.
    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.next_frame().transpose();
        self.failed = matches!(item, Some(Err(_)));
        item
    }
}

/// Fills `buf` as far as the stream allows; returns the bytes read.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn open_recording(path: impl AsRef<Path>) -> std::io::Result<FrameReader<BufReader<File>>> {
    Ok(FrameReader::new(BufReader::new(File::open(path)?)))
}

/// Reads a whole recording. On a decode error, returns the frames before it
/// alongside the error.
pub fn read_recording(path: impl AsRef<Path>) -> Result<Vec<WireFrame>, (Vec<WireFrame>, WireError)> {
    let reader = open_recording(path).map_err(|e| (Vec::new(), e.into()))?;
    let mut frames = Vec::new();
    for item in reader {
        match item {
            Ok(f) => frames.push(f),
            Err(e) => return Err((frames, e)),
        }
    }
    Ok(frames)
}

pub fn write_recording<'a>(
    path: impl AsRef<Path>,
    frames: impl IntoIterator<Item = &'a WireFrame>,
) -> Result<(), WireError> {
    let mut out = BufWriter::new(File::create(path)?);
    for f in frames {
        write_frame(&mut out, f)?;
    }
    out.flush()?;
    Ok(())
}
