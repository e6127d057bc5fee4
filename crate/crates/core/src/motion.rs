//! Motion intensity, patch pooling and inverse-motion selection weights.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::video_io::{VideoClip, CHANNELS};

/// Per-pixel mean absolute temporal difference, `H x W`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MotionMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

impl MotionMap {
    pub fn get(&self, h: usize, w: usize) -> f64 {
        self.values[h * self.width + w]
    }
}

/// Computes `A(h,w) = 1/(3(T-1)) * sum_t sum_c |x_{t+1}^c(h,w) - x_t^c(h,w)|`.
///
/// Each pixel accumulates its differences in `(t, c)` order into an `f64`.
pub fn motion_map(clip: &VideoClip) -> Result<MotionMap> {
    let shape = clip.shape();
    if shape.frames < 2 {
        return Err(Error::SingleFrameClip);
    }
    let pixels = shape.pixels();
    let mut sums = vec![0.0f64; pixels];
    for t in 0..shape.frames - 1 {
        let cur = clip.frame(t);
        let next = clip.frame(t + 1);
        for (p, acc) in sums.iter_mut().enumerate() {
            let base = p * CHANNELS;
            for c in 0..CHANNELS {
                *acc += (f64::from(next[base + c]) - f64::from(cur[base + c])).abs();
            }
        }
    }
    let denom = (CHANNELS * (shape.frames - 1)) as f64;
    for v in &mut sums {
        *v /= denom;
    }
    Ok(MotionMap {
        height: shape.height,
        width: shape.width,
        values: sums,
    })
}

/// Patch-level motion on a `ceil(H/b0) x ceil(W/b0)` grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchMotion {
    pub rows: usize,
    pub cols: usize,
    /// Nominal patch edge `b0`. Patches in the last row/column may be smaller.
    pub block: usize,
    pub height: usize,
    pub width: usize,
    pub grid: Vec<f64>,
    pub normalized: bool,
}

/// Pixel footprint of one patch, half-open ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Footprint {
    pub rows: std::ops::Range<usize>,
    pub cols: std::ops::Range<usize>,
}

impl Footprint {
    pub fn area(&self) -> usize {
        self.rows.len() * self.cols.len()
    }
}

impl PatchMotion {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.grid[i * self.cols + j]
    }

    pub fn footprint(&self, i: usize, j: usize) -> Footprint {
        patch_footprint(self.block, self.height, self.width, i, j)
    }

    /// Actual `(height, width)` of patch `(i, j)`; smaller than `b0` on ragged borders.
    pub fn patch_size(&self, i: usize, j: usize) -> (usize, usize) {
        let f = self.footprint(i, j);
        (f.rows.len(), f.cols.len())
    }

    pub fn divides_evenly(&self) -> bool {
        self.height.is_multiple_of(self.block) && self.width.is_multiple_of(self.block)
    }
}

pub(crate) fn patch_footprint(block: usize, height: usize, width: usize, i: usize, j: usize) -> Footprint {
    Footprint {
        rows: i * block..((i + 1) * block).min(height),
        cols: j * block..((j + 1) * block).min(width),
    }
}

/// Averages the motion map over `b0 x b0` patches. Border patches average over
/// the pixels they actually contain.
pub fn pool_to_patches(map: &MotionMap, block: usize) -> Result<PatchMotion> {
    if block == 0 || block > map.height.max(map.width) {
        return Err(Error::InvalidBlockSize {
            block,
            height: map.height,
            width: map.width,
        });
    }
    let rows = map.height.div_ceil(block);
    let cols = map.width.div_ceil(block);
    let mut grid = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let f = patch_footprint(block, map.height, map.width, i, j);
            let mut sum = 0.0;
            for h in f.rows.clone() {
                for w in f.cols.clone() {
                    sum += map.values[h * map.width + w];
                }
            }
            grid.push(sum / f.area() as f64);
        }
    }
    Ok(PatchMotion {
        rows,
        cols,
        block,
        height: map.height,
        width: map.width,
        grid,
        normalized: false,
    })
}

/// Per-clip min-max normalization; a constant grid maps to all zeros.
pub fn normalize_patch_motion(pm: &PatchMotion) -> PatchMotion {
    let min = pm.grid.iter().copied().fold(f64::INFINITY, f64::min);
    let max = pm.grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let grid = if range > 0.0 {
        pm.grid.iter().map(|v| (v - min) / range).collect()
    } else {
        vec![0.0; pm.grid.len()]
    };
    PatchMotion {
        grid,
        normalized: true,
        ..pm.clone()
    }
}

/// Unnormalized patch selection weights on the patch grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightGrid {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
}

impl WeightGrid {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>) -> Result<Self> {
        if rows * cols != weights.len() || weights.is_empty() {
            return Err(Error::ShapeMismatch {
                left: format!("{rows}x{cols} grid"),
                right: format!("{} weights", weights.len()),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidConfig(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            weights,
        })
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            weights: vec![1.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.cols + j]
    }

    pub fn positive_count(&self) -> usize {
        self.weights.iter().filter(|w| **w > 0.0).count()
    }

    /// Returns these weights if at least `k` patches are selectable, otherwise
    /// the uniform grid.
    pub fn or_uniform_for(&self, k: usize) -> std::borrow::Cow<'_, WeightGrid> {
        if self.positive_count() >= k {
            std::borrow::Cow::Borrowed(self)
        } else {
            std::borrow::Cow::Owned(WeightGrid::uniform(self.rows, self.cols))
        }
    }
}

/// Inverse-motion weights `1 - P`. A fully saturated grid (every weight 0)
/// is replaced by uniform weights.
pub fn selection_weights(pm: &PatchMotion) -> Result<WeightGrid> {
    if !pm.normalized {
        return Err(Error::NotNormalized);
    }
    let weights: Vec<f64> = pm.grid.iter().map(|p| 1.0 - p).collect();
    if weights.iter().all(|w| *w == 0.0) {
        return Ok(WeightGrid::uniform(pm.rows, pm.cols));
    }
    Ok(WeightGrid {
        rows: pm.rows,
        cols: pm.cols,
        weights,
    })
}
