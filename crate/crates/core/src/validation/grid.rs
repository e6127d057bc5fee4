use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use super::checks::{
    check_class_mean_drift, check_coverage, check_sampling_law, check_tube_consistency_with,
    sampling_fixtures,
};
use super::{ClipGenerator, FeatureMap, NoiseClips, SyntheticClass, ValidationReport};
use crate::error::{Error, Result};
use crate::masking::MaskStrategy;
use crate::mixing::{AugConfig, Strategy};
use crate::seed::stream_for;
use crate::video_io::ClipShape;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Coverage,
    Sampling,
    Tube,
    Drift,
}

impl CheckKind {
    pub const ALL: [CheckKind; 4] = [CheckKind::Coverage, CheckKind::Sampling, CheckKind::Tube, CheckKind::Drift];
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(CheckKind::Coverage),
            "sampling" => Ok(CheckKind::Sampling),
            "tube" => Ok(CheckKind::Tube),
            "drift" => Ok(CheckKind::Drift),
            other => Err(Error::InvalidConfig(format!("unknown check {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub r: f64,
    pub b0: usize,
    pub strategy: Strategy,
}

/// Cartesian grid over coverage ratio, block size and strategy.
///
/// Parsed from `"r=0.1,0.3,0.5;b0=4,8,16;strategy=A,B,C"`; omitted axes keep
/// a single default value.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGrid {
    pub ratios: Vec<f64>,
    pub blocks: Vec<usize>,
    pub strategies: Vec<Strategy>,
}

impl ParamGrid {
    pub fn single(cfg: &AugConfig) -> Self {
        Self {
            ratios: vec![cfg.ratio],
            blocks: vec![cfg.block],
            strategies: vec![cfg.strategy],
        }
    }

    /// Parses a grid spec, filling missing axes from `base`.
    pub fn parse(spec: &str, base: &AugConfig) -> Result<Self> {
        let mut grid = Self::single(base);
        let mut seen = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part
                .split_once('=')
                .ok_or_else(|| Error::GridSpec(format!("expected key=values, got {part:?}")))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::GridSpec(format!("axis {key:?} given twice")));
            }
            seen.push(key);
            let items: Vec<&str> = values.split(',').map(str::trim).collect();
            if items.iter().any(|v| v.is_empty()) {
                return Err(Error::GridSpec(format!("empty value in axis {key:?}")));
            }
            let bad = |v: &str| Error::GridSpec(format!("bad value {v:?} for axis {key:?}"));
            match key {
                "r" => {
                    grid.ratios = items
                        .iter()
                        .map(|v| {
                            v.parse::<f64>()
                                .ok()
                                .filter(|r| (0.0..=1.0).contains(r))
                                .ok_or_else(|| bad(v))
                        })
                        .collect::<Result<_>>()?
                }
                "b0" => {
                    grid.blocks = items
                        .iter()
                        .map(|v| v.parse::<usize>().ok().filter(|b| *b > 0).ok_or_else(|| bad(v)))
                        .collect::<Result<_>>()?
                }
                "strategy" => {
                    grid.strategies = items
                        .iter()
                        .map(|v| v.parse::<Strategy>().map_err(|_| bad(v)))
                        .collect::<Result<_>>()?
                }
                other => return Err(Error::GridSpec(format!("unknown axis {other:?}"))),
            }
        }
        Ok(grid)
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &r in &self.ratios {
            for &b0 in &self.blocks {
                for &strategy in &self.strategies {
                    out.push(GridPoint { r, b0, strategy });
                }
            }
        }
        out
    }
}

/// Settings shared by every grid point.
#[derive(Clone, Debug)]
pub struct GridOptions {
    /// Trials per point for the coverage, tube and drift checks.
    pub trials: usize,
    /// Draws for the sampling-law check, which is cheap and compares many
    /// patches against narrow bands.
    pub sampling_trials: usize,
    pub seed: u64,
    /// Synthetic clip geometry; `frames` also sets the augmentation length.
    pub shape: ClipShape,
    /// Mask family substituted for the tube strategy in the tube check.
    /// Only used to exercise the check's failure path.
    pub tube_builder_override: Option<MaskStrategy>,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            trials: 2_000,
            sampling_trials: 200_000,
            seed: 42,
            shape: ClipShape::new(8, 32, 32),
            tube_builder_override: None,
        }
    }
}

enum Job {
    Sampling(usize),
    Point(CheckKind, GridPoint, Option<FeatureMap>),
}

fn run_job(job: &Job, base: &AugConfig, opts: &GridOptions) -> ValidationReport {
    match job {
        Job::Sampling(i) => {
            let fixture = &sampling_fixtures()[*i];
            let mut rng = stream_for(opts.seed, &format!("sampling|{}", fixture.name));
            let mut rep = check_sampling_law(&fixture.weights, fixture.k, opts.sampling_trials, &mut rng)
                .unwrap_or_else(|e| ValidationReport::failed_with("sampling_law", &e));
            rep.details["fixture"] = fixture.name.into();
            rep
        }
        Job::Point(kind, point, phi) => {
            let cfg = AugConfig {
                ratio: point.r,
                block: point.b0,
                frames: opts.shape.frames,
                strategy: point.strategy,
                ..base.clone()
            };
            let key = format!(
                "{kind:?}|{}|r={}|b0={}|s={}",
                phi.map(FeatureMap::name).unwrap_or(""),
                point.r,
                point.b0,
                point.strategy
            );
            let mut rng = stream_for(opts.seed, &key);
            let noise = NoiseClips::new(opts.shape);
            let result = match kind {
                CheckKind::Coverage => check_coverage(&cfg, opts.trials, &noise, &mut rng),
                CheckKind::Tube => cfg
                    .strategy
                    .mask_strategy()
                    .ok_or_else(|| Error::InvalidConfig(format!("strategy {} has no mask", cfg.strategy)))
                    .and_then(|declared| {
                        let builder = match (declared, opts.tube_builder_override) {
                            (MaskStrategy::Tube, Some(b)) => b,
                            _ => declared,
                        };
                        check_tube_consistency_with(&cfg, builder, opts.trials, &noise, &mut rng)
                    }),
                CheckKind::Drift => {
                    let classes = drift_classes(opts.shape);
                    let refs: Vec<&dyn ClipGenerator> = classes.iter().map(|c| c as &dyn ClipGenerator).collect();
                    check_class_mean_drift(&refs, &cfg, phi.expect("drift job has a feature map"), opts.trials, &mut rng)
                }
                CheckKind::Sampling => unreachable!("sampling runs per fixture"),
            };
            result.unwrap_or_else(|e| {
                let name = match kind {
                    CheckKind::Coverage => "coverage".to_owned(),
                    CheckKind::Tube => "tube_consistency".to_owned(),
                    _ => format!("class_mean_drift/{}", phi.map(FeatureMap::name).unwrap_or("")),
                };
                let mut rep = ValidationReport::failed_with(&name, &e);
                rep.r = Some(point.r);
                rep.b0 = Some(point.b0);
                rep.strategy = Some(point.strategy.to_string());
                rep
            })
        }
    }
}

/// Two exchangeable classes with distinct means and uniform +/-0.05 noise.
pub(crate) fn drift_classes(shape: ClipShape) -> [SyntheticClass; 2] {
    [
        SyntheticClass {
            label: "low".into(),
            shape,
            mean: 0.3,
            noise: 0.05,
        },
        SyntheticClass {
            label: "high".into(),
            shape,
            mean: 0.7,
            noise: 0.05,
        },
    ]
}

/// Runs `checks` at every grid point, in parallel, one report per
/// (check, point), in deterministic order. The sampling check does not
/// depend on the grid and runs once over the fixture set. Per-point errors
/// become failing reports.
pub fn grid_runner(
    grid: &ParamGrid,
    base: &AugConfig,
    checks: &[CheckKind],
    opts: &GridOptions,
) -> Vec<ValidationReport> {
    let mut jobs = Vec::new();
    for kind in checks {
        match kind {
            CheckKind::Sampling => {
                jobs.extend((0..sampling_fixtures().len()).map(Job::Sampling));
            }
            CheckKind::Drift => {
                for point in grid.points() {
                    for phi in FeatureMap::ALL {
                        jobs.push(Job::Point(*kind, point, Some(phi)));
                    }
                }
            }
            _ => jobs.extend(grid.points().into_iter().map(|p| Job::Point(*kind, p, None))),
        }
    }
    jobs.par_iter().map(|job| run_job(job, base, opts)).collect()
}
