//! RVT1 raw tensor format.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `"RVT1"`                |
//! | 4      | 2    | version `u16 = 1`             |
//! | 6      | 1    | dtype `u8` (`0` = f32)        |
//! | 7      | 1    | reserved `u8 = 0`             |
//! | 8      | 16   | `T, H, W, C` as `u32`         |
//! | 24     | ...  | `T*H*W*C` payload values      |
//!
//! Payload order is t-major, then h, then w, then c.

use std::path::Path;

use super::{ClipShape, VideoClip, CHANNELS};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RVT1";
pub const VERSION: u16 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 24;

pub fn encode(clip: &VideoClip) -> Vec<u8> {
    let shape = clip.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * shape.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F32);
    out.push(0);
    for dim in [shape.frames, shape.height, shape.width, CHANNELS] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for v in clip.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn bad_header(path: &Path, reason: impl Into<String>) -> Error {
    Error::BadHeader {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Decodes an RVT1 buffer into its shape and payload. `path` is only used for
/// error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<(ClipShape, Vec<f32>)> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(bad_header(path, format!("truncated header ({} bytes)", bytes.len())));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad_header(path, format!("unsupported version {version}")));
    }
    if bytes[6] != DTYPE_F32 {
        return Err(bad_header(path, format!("unsupported dtype {}", bytes[6])));
    }
    if bytes[7] != 0 {
        return Err(bad_header(path, "reserved byte must be 0"));
    }
    let dim = |i: usize| {
        let o = 8 + 4 * i;
        u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as usize
    };
    let (t, h, w, c) = (dim(0), dim(1), dim(2), dim(3));
    if t == 0 || h == 0 || w == 0 {
        return Err(bad_header(path, format!("zero dimension in {t}x{h}x{w}x{c}")));
    }
    if c != CHANNELS {
        return Err(Error::UnsupportedChannelCount(c));
    }
    let count = t
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .and_then(|n| n.checked_mul(c))
        .ok_or_else(|| bad_header(path, "dimensions overflow"))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != count * 4 {
        return Err(bad_header(
            path,
            format!("payload is {} bytes, header implies {}", payload.len(), count * 4),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((ClipShape::new(t, h, w), data))
}
