use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, RgbImage};

use super::{ClipShape, VideoClip, CHANNELS};
use crate::error::{Error, Result};

fn is_frame_file(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
            .unwrap_or(false)
}

fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if is_frame_file(&path) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn push_pixels(img: DynamicImage, path: &Path, out: &mut Vec<f32>) -> Result<()> {
    match img {
        DynamicImage::ImageRgb8(buf) => {
            out.extend(buf.into_raw().into_iter().map(|v| f32::from(v) / 255.0))
        }
        DynamicImage::ImageRgb16(buf) => {
            out.extend(buf.into_raw().into_iter().map(|v| f32::from(v) / 65535.0))
        }
        other => {
            log::debug!("{} has colour type {:?}", path.display(), other.color());
            return Err(Error::UnsupportedChannelCount(
                other.color().channel_count() as usize,
            ));
        }
    }
    Ok(())
}

pub(super) fn read_frame_dir(dir: &Path) -> Result<(ClipShape, Vec<f32>)> {
    let files = list_frames(dir)?;
    if files.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    let mut data = Vec::new();
    let mut dims: Option<(u32, u32)> = None;
    for path in &files {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.clone(),
            source,
        })?;
        let (w, h) = (img.width(), img.height());
        match dims {
            None => dims = Some((w, h)),
            Some((ew, eh)) if (ew, eh) != (w, h) => {
                return Err(Error::InconsistentFrameDimensions {
                    path: path.clone(),
                    expected_w: ew,
                    expected_h: eh,
                    found_w: w,
                    found_h: h,
                })
            }
            Some(_) => {}
        }
        push_pixels(img, path, &mut data)?;
    }
    let (w, h) = dims.unwrap_or_default();
    Ok((ClipShape::new(files.len(), h as usize, w as usize), data))
}

/// `v -> round(255 v)`; exact for values of the form `k / 255`.
fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub(super) fn write_frame_dir(clip: &VideoClip, dir: &Path) -> Result<()> {
    if !dir.is_dir() {
        fs::create_dir(dir).map_err(|e| Error::io(dir, e))?;
    }
    let shape = clip.shape();
    for t in 0..shape.frames {
        let bytes: Vec<u8> = clip.frame(t).iter().copied().map(quantize).collect();
        debug_assert_eq!(bytes.len(), shape.pixels() * CHANNELS);
        let img = RgbImage::from_raw(shape.width as u32, shape.height as u32, bytes)
            .expect("buffer length matches frame dimensions");
        let path = dir.join(format!("frame_{t:05}.png"));
        img.save(&path).map_err(|source| Error::Image { path, source })?;
    }
    Ok(())
}
