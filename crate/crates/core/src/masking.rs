//! Budgeted patch selection and spatiotemporal mask construction.
//!
//! Three mask families are supported:
//!
//! * [`MaskStrategy::Tube`]: one weighted patch set shared by every frame.
//! * [`MaskStrategy::RandomPatches`]: an independent weighted patch set per frame.
//! * [`MaskStrategy::SpatialRect`]: one axis-aligned rectangle per frame at an
//!   independent uniform position; motion weights are ignored.

use std::fmt;
use std::str::FromStr;

use rand::distr::OpenClosed01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{patch_footprint, PatchMotion, WeightGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskStrategy {
    /// Strategy A.
    SpatialRect,
    /// Strategy B.
    RandomPatches,
    /// Strategy C.
    Tube,
}

impl fmt::Display for MaskStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskStrategy::SpatialRect => "A",
            MaskStrategy::RandomPatches => "B",
            MaskStrategy::Tube => "C",
        })
    }
}

impl FromStr for MaskStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" | "spatial-rect" | "spatial_rect" => Ok(MaskStrategy::SpatialRect),
            "b" | "random-patches" | "random_patches" => Ok(MaskStrategy::RandomPatches),
            "c" | "tube" => Ok(MaskStrategy::Tube),
            other => Err(Error::InvalidConfig(format!("unknown mask strategy {other:?}"))),
        }
    }
}

pub(crate) fn check_ratio(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("coverage ratio {r} is outside [0,1]")))
    }
}

/// Number of patches to replace: `round(r * n)` (half-up), at least 1 for any
/// positive `r`, and 0 only for `r == 0`.
pub fn budget_patches(r: f64, n_patches: usize) -> Result<usize> {
    check_ratio(r)?;
    if r == 0.0 || n_patches == 0 {
        return Ok(0);
    }
    let k = (r * n_patches as f64 + 0.5).floor() as usize;
    Ok(k.clamp(1, n_patches))
}

/// Selected grid cells, in increasing key order (draw order).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatchIndexSet {
    pub indices: Vec<(usize, usize)>,
    pub k: usize,
}

impl PatchIndexSet {
    pub fn empty() -> Self {
        Self {
            indices: Vec::new(),
            k: 0,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.indices.contains(&(i, j))
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// One exponential key `-ln(u) / w` per cell in row-major order, `u` drawn
/// from `(0, 1]`. Zero-weight cells get `+inf` but still consume a draw, so a
/// call always advances the stream by exactly `weights.len()` samples.
pub fn exponential_keys<R: Rng + ?Sized>(weights: &WeightGrid, rng: &mut R) -> Vec<f64> {
    weights
        .weights
        .iter()
        .map(|&w| {
            let u: f64 = rng.sample(OpenClosed01);
            if w > 0.0 {
                -u.ln() / w
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Flat indices of the `k` smallest keys, ties broken by index.
pub(crate) fn smallest_keys(keys: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Weighted sampling of `k` distinct cells without replacement. Equivalent
/// to `k` successive draws with probability proportional to the remaining
/// weights.
pub fn sample_patches<R: Rng + ?Sized>(
    weights: &WeightGrid,
    k: usize,
    rng: &mut R,
) -> Result<PatchIndexSet> {
    if k == 0 {
        return Ok(PatchIndexSet::empty());
    }
    let available = weights.positive_count();
    if k > available {
        return Err(Error::InsufficientPositiveWeight {
            requested: k,
            available,
        });
    }
    let keys = exponential_keys(weights, rng);
    let indices = smallest_keys(&keys, k)
        .into_iter()
        .map(|f| (f / weights.cols, f % weights.cols))
        .collect();
    Ok(PatchIndexSet { indices, k })
}

/// A single spatial mask applied to every frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TubeMask {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// `H x W`, row-major, `true` = replaced.
    pub spatial: Vec<bool>,
}

impl TubeMask {
    pub fn coverage(&self) -> f64 {
        self.spatial.iter().filter(|b| **b).count() as f64 / self.spatial.len() as f64
    }
}

fn paint_patches(
    spatial: &mut [bool],
    patches: &PatchIndexSet,
    block: usize,
    height: usize,
    width: usize,
) {
    for &(i, j) in &patches.indices {
        let f = patch_footprint(block, height, width, i, j);
        for h in f.rows {
            spatial[h * width + f.cols.start..h * width + f.cols.end].fill(true);
        }
    }
}

/// Paints the footprints of `patches` (ragged at borders) into an `H x W`
/// mask shared by `frames` frames.
pub fn build_tube_mask(patches: &PatchIndexSet, pm: &PatchMotion, frames: usize) -> TubeMask {
    let mut spatial = vec![false; pm.height * pm.width];
    paint_patches(&mut spatial, patches, pm.block, pm.height, pm.width);
    TubeMask {
        frames,
        height: pm.height,
        width: pm.width,
        spatial,
    }
}

/// Full `T x H x W` boolean mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask4D {
    pub strategy: MaskStrategy,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<bool>,
}

impl Mask4D {
    pub fn filled(strategy: MaskStrategy, frames: usize, height: usize, width: usize, value: bool) -> Self {
        Self {
            strategy,
            frames,
            height,
            width,
            data: vec![value; frames * height * width],
        }
    }

    pub fn from_tube(tube: &TubeMask) -> Self {
        Self {
            strategy: MaskStrategy::Tube,
            frames: tube.frames,
            height: tube.height,
            width: tube.width,
            data: tube.spatial.repeat(tube.frames),
        }
    }

    pub fn frame(&self, t: usize) -> &[bool] {
        let n = self.height * self.width;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn is_tube_consistent(&self) -> bool {
        (1..self.frames).all(|t| self.frame(t) == self.frame(0))
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }
}

/// Mean of the boolean mask over all `T * H * W` positions.
pub fn coverage_ratio(mask: &Mask4D) -> f64 {
    if mask.data.is_empty() {
        return 0.0;
    }
    mask.count() as f64 / mask.data.len() as f64
}

/// Pixel geometry that a mask is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaskGeometry {
    pub block: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl MaskGeometry {
    pub fn grid(&self) -> (usize, usize) {
        (self.height.div_ceil(self.block), self.width.div_ceil(self.block))
    }
}

/// Rectangle `(rows, cols)` with area as close as possible to `area` that
/// fits in `height x width`; ties prefer the aspect ratio of the frame, then
/// fewer rows.
pub fn rect_dims(area: usize, height: usize, width: usize) -> (usize, usize) {
    if area == 0 {
        return (0, 0);
    }
    let target_aspect = (height as f64 / width as f64).ln();
    let mut best = (1, 1);
    let mut best_score = (usize::MAX, f64::INFINITY);
    for rh in 1..=height {
        let rw = ((area as f64 / rh as f64).round() as usize).clamp(1, width);
        let err = (rh * rw).abs_diff(area);
        let aspect = ((rh as f64 / rw as f64).ln() - target_aspect).abs();
        if err < best_score.0 || (err == best_score.0 && aspect < best_score.1 - 1e-12) {
            best = (rh, rw);
            best_score = (err, aspect);
        }
    }
    best
}

/// Builds a mask for one of the three spatiotemporal strategies.
///
/// Random stream use: `Tube` draws one key per grid cell; `RandomPatches`
/// draws one key per cell for each frame in turn; `SpatialRect` draws a row
/// offset then a column offset per frame.
pub fn build_mask_variant<R: Rng + ?Sized>(
    strategy: MaskStrategy,
    weights: &WeightGrid,
    r: f64,
    geom: MaskGeometry,
    rng: &mut R,
) -> Result<Mask4D> {
    check_ratio(r)?;
    let (rows, cols) = geom.grid();
    if (weights.rows, weights.cols) != (rows, cols) {
        return Err(Error::ShapeMismatch {
            left: format!("{}x{} weight grid", weights.rows, weights.cols),
            right: format!("{rows}x{cols} patch grid for block {}", geom.block),
        });
    }
    let MaskGeometry {
        block,
        frames,
        height,
        width,
    } = geom;
    let plane = height * width;
    match strategy {
        MaskStrategy::Tube => {
            let k = budget_patches(r, rows * cols)?;
            let patches = sample_patches(weights, k, rng)?;
            let mut spatial = vec![false; plane];
            paint_patches(&mut spatial, &patches, block, height, width);
            Ok(Mask4D::from_tube(&TubeMask {
                frames,
                height,
                width,
                spatial,
            }))
        }
        MaskStrategy::RandomPatches => {
            let k = budget_patches(r, rows * cols)?;
            let mut mask = Mask4D::filled(strategy, frames, height, width, false);
            for t in 0..frames {
                let patches = sample_patches(weights, k, rng)?;
                paint_patches(
                    &mut mask.data[t * plane..(t + 1) * plane],
                    &patches,
                    block,
                    height,
                    width,
                );
            }
            Ok(mask)
        }
        MaskStrategy::SpatialRect => {
            let mut area = (r * plane as f64 + 0.5).floor() as usize;
            if r > 0.0 {
                area = area.clamp(1, plane);
            }
            let (rh, rw) = rect_dims(area, height, width);
            let mut mask = Mask4D::filled(strategy, frames, height, width, false);
            if rh == 0 {
                return Ok(mask);
            }
            for t in 0..frames {
                let y0 = rng.random_range(0..=height - rh);
                let x0 = rng.random_range(0..=width - rw);
                let frame = &mut mask.data[t * plane..(t + 1) * plane];
                for h in y0..y0 + rh {
                    frame[h * width + x0..h * width + x0 + rw].fill(true);
                }
            }
            Ok(mask)
        }
    }
}
