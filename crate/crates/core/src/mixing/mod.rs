//! Intra-class partner selection, mask-composited mixing and the end-to-end
//! augmentation pipeline.

mod batch;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{
    build_mask_variant, budget_patches, check_ratio, coverage_ratio, Mask4D, MaskGeometry,
    MaskStrategy,
};
use crate::motion::{motion_map, normalize_patch_motion, pool_to_patches, selection_weights, WeightGrid};
use crate::video_io::{sample_frames, DatasetManifest, VideoClip};

pub use batch::{augment_batch, write_augmented, BatchFailure, BatchReport};

/// How the augmented clip is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Per-frame random rectangle of partner content (A).
    #[serde(rename = "A")]
    SpatialRect,
    /// Per-frame independent motion-weighted patches (B).
    #[serde(rename = "B")]
    RandomPatches,
    /// Tube-consistent motion-weighted patches (C).
    #[serde(rename = "C")]
    Tube,
    /// Tube mask filled with a constant instead of partner content.
    #[serde(rename = "mask_only")]
    MaskOnly,
    /// Pixel-wise interpolation with the partner.
    #[serde(rename = "mixup")]
    Mixup,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::SpatialRect,
        Strategy::RandomPatches,
        Strategy::Tube,
        Strategy::MaskOnly,
        Strategy::Mixup,
    ];

    /// Mask family used by this strategy, if any.
    pub fn mask_strategy(self) -> Option<MaskStrategy> {
        match self {
            Strategy::SpatialRect => Some(MaskStrategy::SpatialRect),
            Strategy::RandomPatches => Some(MaskStrategy::RandomPatches),
            Strategy::Tube | Strategy::MaskOnly => Some(MaskStrategy::Tube),
            Strategy::Mixup => None,
        }
    }
}

impl From<MaskStrategy> for Strategy {
    fn from(m: MaskStrategy) -> Self {
        match m {
            MaskStrategy::SpatialRect => Strategy::SpatialRect,
            MaskStrategy::RandomPatches => Strategy::RandomPatches,
            MaskStrategy::Tube => Strategy::Tube,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SpatialRect => "A",
            Strategy::RandomPatches => "B",
            Strategy::Tube => "C",
            Strategy::MaskOnly => "mask_only",
            Strategy::Mixup => "mixup",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mask_only" | "mask-only" => Ok(Strategy::MaskOnly),
            "mixup" => Ok(Strategy::Mixup),
            other => other
                .parse::<MaskStrategy>()
                .map(Strategy::from)
                .map_err(|_| Error::InvalidConfig(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Augmentation hyperparameters. Together with the input clips this is the
/// full determinism key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugConfig {
    /// Coverage ratio in `[0, 1]`.
    pub ratio: f64,
    /// Patch edge `b0` in pixels.
    pub block: usize,
    /// Output frame count.
    pub frames: usize,
    pub strategy: Strategy,
    /// Fill value for [`Strategy::MaskOnly`].
    pub fill: f32,
    /// Interpolation weight of the source clip for [`Strategy::Mixup`].
    pub mixup_lambda: f32,
    pub seed: u64,
}

impl Default for AugConfig {
    fn default() -> Self {
        Self {
            ratio: 0.3,
            block: 16,
            frames: 16,
            strategy: Strategy::Tube,
            fill: 0.0,
            mixup_lambda: 0.5,
            seed: 42,
        }
    }
}

impl AugConfig {
    pub fn validate(&self) -> Result<()> {
        check_ratio(self.ratio)?;
        if self.block == 0 {
            return Err(Error::InvalidConfig("block size must be >= 1".into()));
        }
        if self.frames == 0 {
            return Err(Error::InvalidConfig("frame count must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.fill) {
            return Err(Error::InvalidConfig(format!("fill {} is outside [0,1]", self.fill)));
        }
        if !(0.0..=1.0).contains(&self.mixup_lambda) {
            return Err(Error::InvalidConfig(format!(
                "mixup lambda {} is outside [0,1]",
                self.mixup_lambda
            )));
        }
        Ok(())
    }
}

/// Record of how an augmented clip was made; serialized as the `.meta.json`
/// sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_id: String,
    pub partner_id: Option<String>,
    pub strategy: Strategy,
    pub seed: u64,
    pub r: f64,
    pub b0: usize,
    #[serde(rename = "T")]
    pub frames: usize,
    /// Coverage of the applied mask; `None` for mixup, which uses no mask.
    pub realized_coverage: Option<f64>,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedClip {
    pub clip: VideoClip,
    pub label: Option<String>,
    pub provenance: Provenance,
}

/// Wall time spent in each pipeline stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub resample: Duration,
    pub motion: Duration,
    pub pooling: Duration,
    pub sampling: Duration,
    pub mixing: Duration,
}

impl std::ops::AddAssign for StageTimings {
    fn add_assign(&mut self, o: Self) {
        self.resample += o.resample;
        self.motion += o.motion;
        self.pooling += o.pooling;
        self.sampling += o.sampling;
        self.mixing += o.mixing;
    }
}

/// Picks a uniformly random other member of `clip_id`'s class.
pub fn sample_partner<R: Rng + ?Sized>(
    manifest: &DatasetManifest,
    clip_id: &str,
    rng: &mut R,
) -> Result<String> {
    let members = manifest.class_members(clip_id)?;
    let others: Vec<&String> = members.iter().filter(|m| *m != clip_id).collect();
    if others.is_empty() {
        let label = manifest.get(clip_id).map(|e| e.label.clone()).unwrap_or_default();
        return Err(Error::SingletonClass {
            id: clip_id.to_owned(),
            label,
        });
    }
    Ok(others[rng.random_range(0..others.len())].clone())
}

fn check_same_shape(a: &VideoClip, b: &VideoClip) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape().to_string(),
            right: b.shape().to_string(),
        });
    }
    Ok(())
}

fn check_mask_shape(x: &VideoClip, mask: &Mask4D) -> Result<()> {
    let s = x.shape();
    if (s.frames, s.height, s.width) != (mask.frames, mask.height, mask.width) {
        return Err(Error::ShapeMismatch {
            left: s.to_string(),
            right: format!("{}x{}x{} mask", mask.frames, mask.height, mask.width),
        });
    }
    Ok(())
}

fn composite(x: &VideoClip, mask: &Mask4D, mut replace: impl FnMut(usize) -> f32) -> VideoClip {
    let mut data = x.data().to_vec();
    for (p, _) in mask.data.iter().enumerate().filter(|(_, m)| **m) {
        for c in 0..crate::video_io::CHANNELS {
            let i = p * crate::video_io::CHANNELS + c;
            data[i] = replace(i);
        }
    }
    VideoClip::from_parts(x.id().to_owned(), x.label().map(str::to_owned), x.shape(), data)
}

/// `x~ = (1 - M) * x_i + M * x_j` with a binary mask: partner values where
/// the mask is set, source values elsewhere.
pub fn mix(x_i: &VideoClip, x_j: &VideoClip, mask: &Mask4D) -> Result<VideoClip> {
    check_same_shape(x_i, x_j)?;
    check_mask_shape(x_i, mask)?;
    let partner = x_j.data();
    Ok(composite(x_i, mask, |i| partner[i]))
}

/// Erasing baseline: masked positions are overwritten with `fill`.
pub fn mask_only(x: &VideoClip, mask: &Mask4D, fill: f32) -> Result<VideoClip> {
    check_mask_shape(x, mask)?;
    if !(0.0..=1.0).contains(&fill) {
        return Err(Error::InvalidConfig(format!("fill {fill} is outside [0,1]")));
    }
    Ok(composite(x, mask, |_| fill))
}

/// `lambda * x_i + (1 - lambda) * x_j`, clamped to `[0, 1]`. Equal inputs
/// pass through unchanged.
pub fn mixup(x_i: &VideoClip, x_j: &VideoClip, lambda: f32) -> Result<VideoClip> {
    check_same_shape(x_i, x_j)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidConfig(format!("mixup lambda {lambda} is outside [0,1]")));
    }
    let data = x_i
        .data()
        .iter()
        .zip(x_j.data())
        .map(|(&a, &b)| {
            if a == b {
                a
            } else {
                (lambda * a + (1.0 - lambda) * b).clamp(0.0, 1.0)
            }
        })
        .collect();
    Ok(VideoClip::from_parts(
        x_i.id().to_owned(),
        x_i.label().map(str::to_owned),
        x_i.shape(),
        data,
    ))
}

/// Inverse-motion selection weights of `clip` on a `block`-sized patch grid:
/// motion map, pooling, per-clip min-max normalization, complement.
pub fn motion_weights(clip: &VideoClip, block: usize) -> Result<WeightGrid> {
    motion_weights_timed(clip, block, &mut StageTimings::default())
}

fn motion_weights_timed(clip: &VideoClip, block: usize, timings: &mut StageTimings) -> Result<WeightGrid> {
    let clock = Instant::now();
    let motion = motion_map(clip)?;
    timings.motion = clock.elapsed();
    let clock = Instant::now();
    let pm = normalize_patch_motion(&pool_to_patches(&motion, block)?);
    let weights = selection_weights(&pm)?;
    timings.pooling = clock.elapsed();
    Ok(weights)
}

/// Augments `x_i` with content from its intra-class partner `x_j`.
///
/// Both clips are resampled to `cfg.frames`. Motion is measured on `x_i`
/// only. With `cfg.ratio == 0` every masked strategy returns the resampled
/// `x_i` without touching `rng`.
pub fn augment_pair<R: Rng + ?Sized>(
    x_i: &VideoClip,
    x_j: &VideoClip,
    cfg: &AugConfig,
    rng: &mut R,
) -> Result<AugmentedClip> {
    augment_pair_timed(x_i, x_j, cfg, rng).map(|(a, _)| a)
}

/// [`augment_pair`] with a per-stage timing breakdown.
pub fn augment_pair_timed<R: Rng + ?Sized>(
    x_i: &VideoClip,
    x_j: &VideoClip,
    cfg: &AugConfig,
    rng: &mut R,
) -> Result<(AugmentedClip, StageTimings)> {
    cfg.validate()?;
    if let (Some(a), Some(b)) = (x_i.label(), x_j.label()) {
        if a != b {
            return Err(Error::LabelMismatch {
                left: a.to_owned(),
                right: b.to_owned(),
            });
        }
    }
    let mut timings = StageTimings::default();
    let clock = Instant::now();
    let source = sample_frames(x_i, cfg.frames)?;
    let partner = sample_frames(x_j, cfg.frames)?;
    timings.resample = clock.elapsed();
    check_same_shape(&source, &partner)?;

    let label = source.label().or(partner.label()).map(str::to_owned);
    let shape = source.shape();
    let provenance = |coverage: Option<f64>| Provenance {
        source_id: x_i.id().to_owned(),
        partner_id: Some(x_j.id().to_owned()),
        strategy: cfg.strategy,
        seed: cfg.seed,
        r: cfg.ratio,
        b0: cfg.block,
        frames: cfg.frames,
        realized_coverage: coverage,
        label: label.clone(),
    };

    let Some(mask_strategy) = cfg.strategy.mask_strategy() else {
        let clock = Instant::now();
        let clip = mixup(&source, &partner, cfg.mixup_lambda)?;
        timings.mixing = clock.elapsed();
        let clip = clip.with_label(label.clone());
        return Ok((
            AugmentedClip {
                clip,
                label: label.clone(),
                provenance: provenance(None),
            },
            timings,
        ));
    };

    if cfg.block > shape.height.max(shape.width) {
        return Err(Error::InvalidBlockSize {
            block: cfg.block,
            height: shape.height,
            width: shape.width,
        });
    }
    if cfg.ratio == 0.0 {
        let clip = source.with_label(label.clone());
        return Ok((
            AugmentedClip {
                clip,
                label: label.clone(),
                provenance: provenance(Some(0.0)),
            },
            timings,
        ));
    }

    let geom = MaskGeometry {
        block: cfg.block,
        frames: shape.frames,
        height: shape.height,
        width: shape.width,
    };
    let (rows, cols) = geom.grid();
    let weights = if mask_strategy == MaskStrategy::SpatialRect {
        WeightGrid::uniform(rows, cols)
    } else {
        motion_weights_timed(&source, cfg.block, &mut timings)?
    };

    let clock = Instant::now();
    let k = budget_patches(cfg.ratio, rows * cols)?;
    let weights = weights.or_uniform_for(k);
    let mask = build_mask_variant(mask_strategy, &weights, cfg.ratio, geom, rng)?;
    timings.sampling = clock.elapsed();

    let clock = Instant::now();
    let clip = match cfg.strategy {
        Strategy::MaskOnly => mask_only(&source, &mask, cfg.fill)?,
        _ => mix(&source, &partner, &mask)?,
    };
    timings.mixing = clock.elapsed();

    let clip = clip.with_label(label.clone());
    Ok((
        AugmentedClip {
            clip,
            label: label.clone(),
            provenance: provenance(Some(coverage_ratio(&mask))),
        },
        timings,
    ))
}
