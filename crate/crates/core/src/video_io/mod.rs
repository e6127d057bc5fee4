//! Clip and manifest I/O.
//!
//! A [`VideoClip`] is a dense `T x H x W x 3` block of `f32` intensities in
//! `[0, 1]`, stored frame-major (t, then h, then w, then c). Clips are read
//! either from a directory of image frames or from the little-endian RVT1
//! raw tensor format; see [`rvt`].

mod frames;
mod manifest;
pub mod rvt;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use manifest::{load_manifest, DatasetManifest, ManifestEntry};

/// Every clip carries exactly three colour channels.
pub const CHANNELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClipShape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl ClipShape {
    pub fn new(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
        }
    }

    /// Pixels in one frame (`H * W`).
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Values in one frame (`H * W * C`).
    pub fn frame_len(&self) -> usize {
        self.pixels() * CHANNELS
    }

    /// Total number of stored values.
    pub fn len(&self) -> usize {
        self.frames * self.frame_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for ClipShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{}x{}x{}",
            self.frames, self.height, self.width, CHANNELS
        )
    }
}

/// An immutable video clip.
#[derive(Clone, Debug, PartialEq)]
pub struct VideoClip {
    id: String,
    label: Option<String>,
    shape: ClipShape,
    data: Vec<f32>,
}

impl VideoClip {
    /// Builds a clip, checking dimensions and that every value is a finite
    /// number in `[0, 1]`.
    pub fn new(
        id: impl Into<String>,
        label: Option<String>,
        shape: ClipShape,
        data: Vec<f32>,
    ) -> Result<Self> {
        if shape.frames == 0 || shape.height == 0 || shape.width == 0 {
            return Err(Error::InvalidConfig(format!(
                "clip dimensions must be positive, got {shape}"
            )));
        }
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                left: format!("{shape} ({} values)", shape.len()),
                right: format!("{} values", data.len()),
            });
        }
        if let Some((index, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::PixelOutOfRange { index, value });
        }
        Ok(Self::from_parts(id.into(), label, shape, data))
    }

    /// Constant-valued clip.
    pub fn filled(id: impl Into<String>, label: Option<String>, shape: ClipShape, value: f32) -> Result<Self> {
        Self::new(id, label, shape, vec![value; shape.len()])
    }

    /// Internal constructor for data already known to satisfy the invariants.
    pub(crate) fn from_parts(
        id: String,
        label: Option<String>,
        shape: ClipShape,
        data: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(data.len(), shape.len());
        Self {
            id,
            label,
            shape,
            data,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn shape(&self) -> ClipShape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.shape.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn at(&self, t: usize, h: usize, w: usize, c: usize) -> f32 {
        let s = self.shape;
        self.data[((t * s.height + h) * s.width + w) * CHANNELS + c]
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// On-disk clip encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipFormat {
    /// Directory of lexically ordered PNG/JPEG frames.
    FrameDir,
    /// Single RVT1 file.
    RawTensor,
}

impl ClipFormat {
    /// Directories are frame directories; everything else is treated as RVT1.
    pub fn infer(path: &Path) -> Self {
        if path.is_dir() {
            ClipFormat::FrameDir
        } else {
            ClipFormat::RawTensor
        }
    }
}

/// Location of the JSON sidecar that accompanies a clip (`clip.rvt` ->
/// `clip.meta.json`, `frames/` -> `frames.meta.json`).
pub fn sidecar_path(path: &Path) -> PathBuf {
    let trimmed: PathBuf = path.components().collect();
    trimmed.with_extension("meta.json")
}

/// Loads a clip. The clip id is the file (or directory) stem; the label is
/// read from the `label` key of the sidecar when one exists.
pub fn load_clip(path: &Path, format: ClipFormat) -> Result<VideoClip> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    let (shape, data) = match format {
        ClipFormat::FrameDir => frames::read_frame_dir(path)?,
        ClipFormat::RawTensor => {
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            rvt::decode(&bytes, path)?
        }
    };
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let label = read_sidecar_label(path)?;
    VideoClip::new(id, label, shape, data)
}

fn read_sidecar_label(path: &Path) -> Result<Option<String>> {
    let sidecar = sidecar_path(path);
    if !sidecar.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    Ok(value
        .get("label")
        .and_then(|l| l.as_str())
        .map(str::to_owned))
}

/// Writes a clip. RVT1 output is lossless; frame directories are quantized to
/// 8-bit PNG and created if missing (the parent must exist).
pub fn write_clip(clip: &VideoClip, path: &Path, format: ClipFormat) -> Result<()> {
    match format {
        ClipFormat::RawTensor => {
            fs::write(path, rvt::encode(clip)).map_err(|e| Error::io(path, e))
        }
        ClipFormat::FrameDir => frames::write_frame_dir(clip, path),
    }
}

/// Source frame indices chosen by the segment-center rule
/// `floor((t + 0.5) * n / t_out)`, evaluated in exact integer arithmetic.
pub fn segment_center_indices(n: usize, t_out: usize) -> Vec<usize> {
    (0..t_out).map(|t| (2 * t + 1) * n / (2 * t_out)).collect()
}

/// Uniformly resamples a clip to `t_out` frames. Short clips repeat frames.
pub fn sample_frames(clip: &VideoClip, t_out: usize) -> Result<VideoClip> {
    if t_out == 0 {
        return Err(Error::InvalidConfig("frame count must be >= 1".into()));
    }
    let shape = clip.shape();
    if t_out == shape.frames {
        return Ok(clip.clone());
    }
    let mut data = Vec::with_capacity(t_out * shape.frame_len());
    for src in segment_center_indices(shape.frames, t_out) {
        data.extend_from_slice(clip.frame(src));
    }
    Ok(VideoClip::from_parts(
        clip.id.clone(),
        clip.label.clone(),
        ClipShape::new(t_out, shape.height, shape.width),
        data,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn segment_center_examples() {
        assert_eq!(segment_center_indices(8, 4), vec![1, 3, 5, 7]);
        assert_eq!(segment_center_indices(5, 5), vec![0, 1, 2, 3, 4]);
        assert_eq!(segment_center_indices(2, 4), vec![0, 0, 1, 1]);
    }

    #[test]
    fn sample_frames_preserves_metadata() {
        let shape = ClipShape::new(8, 1, 1);
        let data: Vec<f32> = (0..8).flat_map(|t| [t as f32 / 8.0; 3]).collect();
        let clip = VideoClip::new("c", Some("smile".into()), shape, data).unwrap();
        let out = sample_frames(&clip, 4).unwrap();
        assert_eq!(out.shape(), ClipShape::new(4, 1, 1));
        assert_eq!(out.label(), Some("smile"));
        assert_eq!(out.id(), "c");
        let firsts: Vec<f32> = (0..4).map(|t| out.at(t, 0, 0, 0)).collect();
        assert_eq!(firsts, vec![1.0 / 8.0, 3.0 / 8.0, 5.0 / 8.0, 7.0 / 8.0]);
        assert!(sample_frames(&clip, 0).is_err());
    }

    #[test]
    fn clip_rejects_out_of_range() {
        let shape = ClipShape::new(1, 1, 1);
        assert!(matches!(
            VideoClip::new("x", None, shape, vec![0.0, 1.5, 0.0]),
            Err(Error::PixelOutOfRange { index: 1, .. })
        ));
        assert!(VideoClip::new("x", None, shape, vec![0.0, f32::NAN, 0.0]).is_err());
        assert!(VideoClip::new("x", None, shape, vec![0.0; 2]).is_err());
    }

    #[test]
    fn sidecar_naming() {
        assert_eq!(sidecar_path(Path::new("a/clip.rvt")), PathBuf::from("a/clip.meta.json"));
        assert_eq!(sidecar_path(Path::new("a/frames/")), PathBuf::from("a/frames.meta.json"));
    }

    proptest! {
        #[test]
        fn indices_monotone_and_in_range(n in 1usize..200, t_out in 1usize..200) {
            let idx = segment_center_indices(n, t_out);
            prop_assert_eq!(idx.len(), t_out);
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(idx.iter().all(|&i| i < n));
        }
    }
}
