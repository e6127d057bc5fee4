use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("frame directory {0} contains no PNG/JPEG frames")]
    NoFrames(PathBuf),

    #[error("frame {path} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    InconsistentFrameDimensions {
        path: PathBuf,
        expected_w: u32,
        expected_h: u32,
        found_w: u32,
        found_h: u32,
    },

    #[error("bad magic bytes in {0}: not an RVT1 tensor")]
    BadMagic(PathBuf),

    #[error("bad RVT1 header in {path}: {reason}")]
    BadHeader { path: PathBuf, reason: String },

    #[error("unsupported channel count {0}; clips must have exactly 3 channels")]
    UnsupportedChannelCount(usize),

    #[error("pixel value {value} at flat index {index} is outside [0,1]")]
    PixelOutOfRange { index: usize, value: f32 },

    #[error("image decode failed for {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("duplicate clip id {id:?} on manifest line {line}")]
    DuplicateClipId { id: String, line: usize },

    #[error("malformed manifest line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("clip id {0:?} is not in the manifest")]
    UnknownClip(String),

    #[error("class {label:?} contains only clip {id:?}; no intra-class partner exists")]
    SingletonClass { id: String, label: String },

    #[error("motion map needs at least 2 frames (T >= 2), clip has 1")]
    SingleFrameClip,

    #[error("block size {block} is invalid for a {height}x{width} map (need 1 <= b0 <= max(H, W))")]
    InvalidBlockSize {
        block: usize,
        height: usize,
        width: usize,
    },

    #[error("patch motion must be normalized before deriving selection weights")]
    NotNormalized,

    #[error("budget of {requested} patches exceeds the {available} patches with positive weight")]
    InsufficientPositiveWeight { requested: usize, available: usize },

    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch { left: String, right: String },

    #[error("labels differ: {left:?} vs {right:?}; mixing is intra-class only")]
    LabelMismatch { left: String, right: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("exact sampling oracle supports at most 6 patches, grid has {0}")]
    OracleTooLarge(usize),

    #[error("malformed grid spec: {0}")]
    GridSpec(String),

    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem or stored data rather than by
    /// the caller's arguments.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::MissingPath(_)
                | Error::NoFrames(_)
                | Error::InconsistentFrameDimensions { .. }
                | Error::BadMagic(_)
                | Error::BadHeader { .. }
                | Error::UnsupportedChannelCount(_)
                | Error::PixelOutOfRange { .. }
                | Error::Image { .. }
                | Error::Io { .. }
                | Error::DuplicateClipId { .. }
                | Error::MalformedLine { .. }
                | Error::Json(_)
        )
    }
}
