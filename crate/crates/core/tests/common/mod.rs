//! Test-only reference implementations, written independently of the
//! engine's module structure.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::distr::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rema_core::video_io::{write_clip, ClipFormat, ClipShape, VideoClip};

/// Straight-line tube-mask augmentation for one pair of already-resampled
/// `T x H x W x 3` buffers. Draws its exponential keys from
/// `ChaCha8Rng::seed_from_u64(seed)`, one `(0, 1]` uniform per patch in
/// row-major order. Returns the mixed buffer and the mask coverage.
#[allow(clippy::too_many_arguments)]
pub fn reference_tube_mix(
    xi: &[f32],
    xj: &[f32],
    t_len: usize,
    h_len: usize,
    w_len: usize,
    b0: usize,
    r: f64,
    seed: u64,
) -> (Vec<f32>, f64) {
    let idx = |t: usize, h: usize, w: usize, c: usize| ((t * h_len + h) * w_len + w) * 3 + c;

    let mut motion = vec![vec![0.0f64; w_len]; h_len];
    for h in 0..h_len {
        for w in 0..w_len {
            let mut acc = 0.0f64;
            for t in 0..t_len - 1 {
                for c in 0..3 {
                    acc += (xi[idx(t + 1, h, w, c)] as f64 - xi[idx(t, h, w, c)] as f64).abs();
                }
            }
            motion[h][w] = acc / (3.0 * (t_len as f64 - 1.0));
        }
    }

    let rows = h_len.div_ceil(b0);
    let cols = w_len.div_ceil(b0);
    let mut patch = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let mut sum = 0.0;
            let mut count = 0usize;
            for h in i * b0..((i + 1) * b0).min(h_len) {
                for w in j * b0..((j + 1) * b0).min(w_len) {
                    sum += motion[h][w];
                    count += 1;
                }
            }
            patch.push(sum / count as f64);
        }
    }

    let lo = patch.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = patch.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let normalized: Vec<f64> = if hi > lo {
        patch.iter().map(|p| (p - lo) / (hi - lo)).collect()
    } else {
        vec![0.0; patch.len()]
    };
    let mut weights: Vec<f64> = normalized.iter().map(|p| 1.0 - p).collect();
    if weights.iter().all(|w| *w == 0.0) {
        weights = vec![1.0; weights.len()];
    }

    let n = rows * cols;
    let k = if r == 0.0 {
        0
    } else {
        (((r * n as f64) + 0.5).floor() as usize).clamp(1, n)
    };
    if weights.iter().filter(|w| **w > 0.0).count() < k {
        weights = vec![1.0; n];
    }

    let mut mask = vec![false; h_len * w_len];
    if k > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut keyed: Vec<(f64, usize)> = Vec::new();
        for (cell, w) in weights.iter().enumerate() {
            let u: f64 = rng.sample(OpenClosed01);
            keyed.push((if *w > 0.0 { -u.ln() / w } else { f64::INFINITY }, cell));
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, cell) in keyed.iter().take(k) {
            let (i, j) = (cell / cols, cell % cols);
            for h in i * b0..((i + 1) * b0).min(h_len) {
                for w in j * b0..((j + 1) * b0).min(w_len) {
                    mask[h * w_len + w] = true;
                }
            }
        }
    }

    let mut out = xi.to_vec();
    for t in 0..t_len {
        for h in 0..h_len {
            for w in 0..w_len {
                if mask[h * w_len + w] {
                    for c in 0..3 {
                        out[idx(t, h, w, c)] = xj[idx(t, h, w, c)];
                    }
                }
            }
        }
    }
    let coverage = mask.iter().filter(|m| **m).count() as f64 / mask.len() as f64;
    (out, coverage)
}

/// Scalar motion map, `(h, w, t, c)` loop order.
pub fn reference_motion(clip: &VideoClip) -> Vec<f64> {
    let s = clip.shape();
    let mut out = Vec::with_capacity(s.height * s.width);
    for h in 0..s.height {
        for w in 0..s.width {
            let mut acc = 0.0;
            for t in 0..s.frames - 1 {
                for c in 0..3 {
                    acc += (clip.at(t + 1, h, w, c) as f64 - clip.at(t, h, w, c) as f64).abs();
                }
            }
            out.push(acc / (3 * (s.frames - 1)) as f64);
        }
    }
    out
}

pub fn random_clip(shape: ClipShape, rng: &mut ChaCha8Rng, id: &str, label: Option<&str>) -> VideoClip {
    let data = (0..shape.len()).map(|_| rng.random::<f32>()).collect();
    VideoClip::new(id, label.map(str::to_owned), shape, data).unwrap()
}

/// Writes a dataset of random RVT1 clips and its JSONL manifest. `classes`
/// maps label -> member count.
pub fn write_dataset(dir: &Path, classes: &[(&str, usize)], shape: ClipShape, seed: u64) -> std::path::PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fs::create_dir_all(dir.join("clips")).unwrap();
    let mut lines = String::new();
    for (label, count) in classes {
        for n in 0..*count {
            let id = format!("{label}_{n}");
            let clip = random_clip(shape, &mut rng, &id, None);
            write_clip(&clip, &dir.join("clips").join(format!("{id}.rvt")), ClipFormat::RawTensor).unwrap();
            lines.push_str(&format!(
                "{{\"id\":\"{id}\",\"path\":\"clips/{id}.rvt\",\"label\":\"{label}\"}}\n"
            ));
        }
    }
    let manifest = dir.join("manifest.jsonl");
    fs::write(&manifest, lines).unwrap();
    manifest
}

/// File name -> contents for every file directly inside `dir`.
pub fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}
