//! Statistical harness for the augmentation's controllability properties:
//! coverage budget, inverse-motion sampling law, tube consistency and
//! class-conditional mean stability under a fixed feature map.

mod checks;
mod grid;
pub mod oracle;

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed::ClipRng;
use crate::video_io::{ClipShape, VideoClip, CHANNELS};

pub use checks::{
    check_class_mean_drift, check_coverage, check_sampling_law, check_tube_consistency,
    check_tube_consistency_with, sampling_fixtures, SamplingFixture, COVERAGE_MC_SLACK,
    DRIFT_SIGMAS, SAMPLING_SIGMAS,
};
pub use grid::{grid_runner, CheckKind, GridOptions, GridPoint, ParamGrid};

/// Outcome of one check at one parameter point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub check: String,
    pub samples: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b0: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    pub details: serde_json::Value,
}

impl ValidationReport {
    pub(crate) fn failed_with(check: &str, error: &Error) -> Self {
        Self {
            check: check.to_owned(),
            samples: 0,
            statistic: f64::NAN,
            threshold: f64::NAN,
            passed: false,
            r: None,
            b0: None,
            strategy: None,
            details: serde_json::json!({ "error": error.to_string() }),
        }
    }
}

/// Writes one JSON file per report plus `summary.csv`
/// (`check,r,b0,strategy,statistic,threshold,pass`).
pub fn write_reports(dir: &Path, reports: &[ValidationReport]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut csv = String::from("check,r,b0,strategy,statistic,threshold,pass\n");
    for (i, rep) in reports.iter().enumerate() {
        let name = format!("{i:03}_{}.json", rep.check.replace(['/', ' '], "_"));
        let path = dir.join(name);
        let json = serde_json::to_string_pretty(rep)?;
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            rep.check,
            rep.r.map(|v| v.to_string()).unwrap_or_default(),
            rep.b0.map(|v| v.to_string()).unwrap_or_default(),
            rep.strategy.clone().unwrap_or_default(),
            rep.statistic,
            rep.threshold,
            rep.passed
        ));
    }
    let path = dir.join("summary.csv");
    fs::write(&path, csv).map_err(|e| Error::io(&path, e))
}

/// Fixed, parameter-free clip features. Both kinds are averages and hence
/// linear in pixel values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMap {
    /// Mean over every value of the clip (length 1).
    GlobalMean,
    /// Mean over `T`, `C` and an adaptive 8x8 spatial grid of cells (length 64).
    Pooled8x8Mean,
}

impl FeatureMap {
    pub const ALL: [FeatureMap; 2] = [FeatureMap::GlobalMean, FeatureMap::Pooled8x8Mean];

    pub fn name(self) -> &'static str {
        match self {
            FeatureMap::GlobalMean => "global_mean",
            FeatureMap::Pooled8x8Mean => "pooled_8x8_mean",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            FeatureMap::GlobalMean => 1,
            FeatureMap::Pooled8x8Mean => 64,
        }
    }

    pub fn apply(self, clip: &VideoClip) -> Vec<f64> {
        match self {
            FeatureMap::GlobalMean => {
                let d = clip.data();
                vec![d.iter().map(|v| f64::from(*v)).sum::<f64>() / d.len() as f64]
            }
            FeatureMap::Pooled8x8Mean => pooled_means(clip, 8),
        }
    }
}

/// Cell `i` spans rows `floor(i*H/n) .. ceil((i+1)*H/n)`, so cells are never
/// empty and cover the frame even when `H < n`.
fn cell_range(i: usize, len: usize, cells: usize) -> std::ops::Range<usize> {
    (i * len / cells)..((i + 1) * len).div_ceil(cells)
}

fn pooled_means(clip: &VideoClip, cells: usize) -> Vec<f64> {
    let s = clip.shape();
    let mut out = Vec::with_capacity(cells * cells);
    for ci in 0..cells {
        let rows = cell_range(ci, s.height, cells);
        for cj in 0..cells {
            let cols = cell_range(cj, s.width, cells);
            let mut sum = 0.0f64;
            for t in 0..s.frames {
                let frame = clip.frame(t);
                for h in rows.clone() {
                    let row = &frame[(h * s.width + cols.start) * CHANNELS..(h * s.width + cols.end) * CHANNELS];
                    sum += row.iter().map(|v| f64::from(*v)).sum::<f64>();
                }
            }
            out.push(sum / (s.frames * rows.len() * cols.len() * CHANNELS) as f64);
        }
    }
    out
}

/// Source of synthetic clips for the Monte-Carlo checks.
pub trait ClipGenerator: Sync {
    fn shape(&self) -> ClipShape;
    fn label(&self) -> &str;
    fn generate(&self, id: String, rng: &mut ClipRng) -> VideoClip;
}

/// i.i.d. uniform pixels in `[0, 1)`; every clip has nonconstant motion.
#[derive(Clone, Debug)]
pub struct NoiseClips {
    pub shape: ClipShape,
    pub label: String,
}

impl NoiseClips {
    pub fn new(shape: ClipShape) -> Self {
        Self {
            shape,
            label: "noise".into(),
        }
    }
}

impl ClipGenerator for NoiseClips {
    fn shape(&self) -> ClipShape {
        self.shape
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn generate(&self, id: String, rng: &mut ClipRng) -> VideoClip {
        let data = (0..self.shape.len()).map(|_| rng.random::<f32>()).collect();
        VideoClip::from_parts(id, Some(self.label.clone()), self.shape, data)
    }
}

/// Exchangeable class: every pixel is `mean + U(-noise, noise)`, clamped to
/// `[0, 1]`. `noise == 0` yields identical constant clips.
#[derive(Clone, Debug)]
pub struct SyntheticClass {
    pub label: String,
    pub shape: ClipShape,
    pub mean: f32,
    pub noise: f32,
}

impl ClipGenerator for SyntheticClass {
    fn shape(&self) -> ClipShape {
        self.shape
    }

    fn label(&self) -> &str {
        &self.label
    }

    fn generate(&self, id: String, rng: &mut ClipRng) -> VideoClip {
        let data = if self.noise == 0.0 {
            vec![self.mean; self.shape.len()]
        } else {
            (0..self.shape.len())
                .map(|_| (self.mean + rng.random_range(-self.noise..=self.noise)).clamp(0.0, 1.0))
                .collect()
        };
        VideoClip::from_parts(id, Some(self.label.clone()), self.shape, data)
    }
}
