use serde_json::json;

use super::oracle::inclusion_probabilities;
use super::{ClipGenerator, FeatureMap, ValidationReport};
use crate::error::{Error, Result};
use crate::masking::{
    budget_patches, build_mask_variant, rect_dims, sample_patches, MaskGeometry, MaskStrategy,
};
use crate::mixing::{augment_pair, motion_weights, AugConfig, Strategy};
use crate::motion::WeightGrid;
use crate::seed::ClipRng;
use crate::video_io::sample_frames;

/// Monte-Carlo slack added to the `1 / (2 n_patches)` rounding bound.
pub const COVERAGE_MC_SLACK: f64 = 0.01;
/// Width of the binomial band for empirical inclusion frequencies.
pub const SAMPLING_SIGMAS: f64 = 3.0;
/// Width of the band for the class-mean gap.
pub const DRIFT_SIGMAS: f64 = 4.0;
/// Minimum violation rate expected from a temporally inconsistent mask family.
const NEGATIVE_CONTROL_RATE: f64 = 0.99;

fn point_fields(rep: &mut ValidationReport, cfg: &AugConfig) {
    rep.r = Some(cfg.ratio);
    rep.b0 = Some(cfg.block);
    rep.strategy = Some(cfg.strategy.to_string());
}

fn mask_family(cfg: &AugConfig) -> Result<MaskStrategy> {
    cfg.strategy.mask_strategy().ok_or_else(|| {
        Error::InvalidConfig(format!("strategy {} does not produce a mask", cfg.strategy))
    })
}

/// Realized coverage over `n_trials` augmentations of generated pairs.
///
/// Passes when `|mean - r| <= 1/(2 n_patches) + COVERAGE_MC_SLACK` and, for
/// patch strategies on grids that `b0` divides, every trial realizes exactly
/// `k / n_patches`.
pub fn check_coverage(
    cfg: &AugConfig,
    n_trials: usize,
    generator: &dyn ClipGenerator,
    rng: &mut ClipRng,
) -> Result<ValidationReport> {
    let family = mask_family(cfg)?;
    let shape = generator.shape();
    let geom = MaskGeometry {
        block: cfg.block,
        frames: cfg.frames,
        height: shape.height,
        width: shape.width,
    };
    let (rows, cols) = geom.grid();
    let n_patches = rows * cols;
    let k = budget_patches(cfg.ratio, n_patches)?;
    let divisible = shape.height.is_multiple_of(cfg.block) && shape.width.is_multiple_of(cfg.block);
    let exact_required = divisible && family != MaskStrategy::SpatialRect;
    let exact_value = k as f64 / n_patches as f64;

    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut exact_hits = 0usize;
    for trial in 0..n_trials {
        let a = generator.generate(format!("a{trial}"), rng);
        let b = generator.generate(format!("b{trial}"), rng);
        let cov = augment_pair(&a, &b, cfg, rng)?
            .provenance
            .realized_coverage
            .unwrap_or(0.0);
        sum += cov;
        min = min.min(cov);
        max = max.max(cov);
        if cov == exact_value {
            exact_hits += 1;
        }
    }
    let mean = if n_trials > 0 { sum / n_trials as f64 } else { 0.0 };
    let statistic = (mean - cfg.ratio).abs();
    let threshold = 1.0 / (2.0 * n_patches as f64) + COVERAGE_MC_SLACK;
    let exact_ok = !exact_required || exact_hits == n_trials;

    let mut details = json!({
        "mean_coverage": mean,
        "min_coverage": if n_trials > 0 { min } else { 0.0 },
        "max_coverage": if n_trials > 0 { max } else { 0.0 },
        "k": k,
        "n_patches": n_patches,
        "exact_required": exact_required,
        "exact_value": exact_value,
        "exact_hits": exact_hits,
    });
    if family == MaskStrategy::SpatialRect {
        let plane = shape.height * shape.width;
        let mut area = (cfg.ratio * plane as f64 + 0.5).floor() as usize;
        if cfg.ratio > 0.0 {
            area = area.clamp(1, plane);
        }
        let (rh, rw) = rect_dims(area, shape.height, shape.width);
        details["rect"] = json!([rh, rw]);
    }
    let mut rep = ValidationReport {
        check: "coverage".into(),
        samples: n_trials,
        statistic,
        threshold,
        passed: statistic <= threshold && exact_ok,
        r: None,
        b0: None,
        strategy: None,
        details,
    };
    point_fields(&mut rep, cfg);
    Ok(rep)
}

/// Empirical inclusion frequencies of [`sample_patches`] against the exact
/// enumeration oracle. Passes when every patch lies within
/// `SAMPLING_SIGMAS * sqrt(p (1 - p) / n_trials)` of its exact marginal.
pub fn check_sampling_law(
    weights: &WeightGrid,
    k: usize,
    n_trials: usize,
    rng: &mut ClipRng,
) -> Result<ValidationReport> {
    let exact = inclusion_probabilities(&weights.weights, k)?;
    let mut counts = vec![0usize; weights.len()];
    for _ in 0..n_trials {
        for (i, j) in sample_patches(weights, k, rng)?.indices {
            counts[i * weights.cols + j] += 1;
        }
    }
    let n = n_trials.max(1) as f64;
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let mut max_abs = 0.0f64;
    let mut max_z = 0.0f64;
    let mut bands = Vec::with_capacity(exact.len());
    let mut within = true;
    for (p, e) in exact.iter().zip(&empirical) {
        let sigma = (p * (1.0 - p) / n).max(0.0).sqrt();
        let band = SAMPLING_SIGMAS * sigma;
        let dev = (e - p).abs();
        max_abs = max_abs.max(dev);
        let z = if sigma > 0.0 {
            dev / sigma
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_z = max_z.max(z);
        within &= dev <= band;
        bands.push(band);
    }
    let zero_weight_hits: usize = weights
        .weights
        .iter()
        .zip(&counts)
        .filter(|(w, _)| **w <= 0.0)
        .map(|(_, c)| *c)
        .sum();
    Ok(ValidationReport {
        check: "sampling_law".into(),
        samples: n_trials,
        statistic: max_z,
        threshold: SAMPLING_SIGMAS,
        passed: within && zero_weight_hits == 0,
        r: None,
        b0: None,
        strategy: None,
        details: json!({
            "weights": weights.weights,
            "grid": [weights.rows, weights.cols],
            "k": k,
            "exact": exact,
            "empirical": empirical,
            "band": bands,
            "max_abs_deviation": max_abs,
            "zero_weight_hits": zero_weight_hits,
        }),
    })
}

/// Tube consistency of masks built for `cfg.strategy`.
pub fn check_tube_consistency(
    cfg: &AugConfig,
    n_trials: usize,
    generator: &dyn ClipGenerator,
    rng: &mut ClipRng,
) -> Result<ValidationReport> {
    check_tube_consistency_with(cfg, mask_family(cfg)?, n_trials, generator, rng)
}

/// Like [`check_tube_consistency`], but masks are produced by `builder`
/// while expectations follow `cfg.strategy`. Substituting a temporally
/// inconsistent builder for the tube one must make the check fail.
///
/// Tube strategies must be consistent in every trial. Strategies A and B are
/// negative controls: whenever their masks are not forced to be static (more
/// than one frame, partial coverage) they must violate consistency in more
/// than 99% of trials.
pub fn check_tube_consistency_with(
    cfg: &AugConfig,
    builder: MaskStrategy,
    n_trials: usize,
    generator: &dyn ClipGenerator,
    rng: &mut ClipRng,
) -> Result<ValidationReport> {
    cfg.validate()?;
    let declared = mask_family(cfg)?;
    let shape = generator.shape();
    let geom = MaskGeometry {
        block: cfg.block,
        frames: cfg.frames,
        height: shape.height,
        width: shape.width,
    };
    let (rows, cols) = geom.grid();
    let n_patches = rows * cols;
    let k = budget_patches(cfg.ratio, n_patches)?;
    let plane = shape.height * shape.width;
    let full = match declared {
        MaskStrategy::SpatialRect => (cfg.ratio * plane as f64 + 0.5).floor() as usize >= plane,
        _ => k >= n_patches,
    };
    let negative_control = declared != MaskStrategy::Tube && cfg.frames > 1 && k > 0 && !full;

    let mut violations = 0usize;
    for trial in 0..n_trials {
        let clip = sample_frames(&generator.generate(format!("t{trial}"), rng), cfg.frames)?;
        let weights = if builder == MaskStrategy::SpatialRect || cfg.frames < 2 {
            WeightGrid::uniform(rows, cols)
        } else {
            motion_weights(&clip, cfg.block)?
        };
        let weights = weights.or_uniform_for(k);
        let mask = build_mask_variant(builder, &weights, cfg.ratio, geom, rng)?;
        if !mask.is_tube_consistent() {
            violations += 1;
        }
    }
    let rate = if n_trials > 0 {
        violations as f64 / n_trials as f64
    } else {
        0.0
    };
    let (threshold, passed, expectation) = if negative_control {
        (NEGATIVE_CONTROL_RATE, rate > NEGATIVE_CONTROL_RATE, "violations expected")
    } else {
        (0.0, violations == 0, "consistent")
    };
    let mut rep = ValidationReport {
        check: "tube_consistency".into(),
        samples: n_trials,
        statistic: rate,
        threshold,
        passed,
        r: None,
        b0: None,
        strategy: None,
        details: json!({
            "frames": cfg.frames,
            "violations": violations,
            "expectation": expectation,
            "mask_builder": builder.to_string(),
            "k": k,
            "n_patches": n_patches,
        }),
    };
    point_fields(&mut rep, cfg);
    Ok(rep)
}

#[derive(Clone, Debug)]
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let d = v - *m;
            *m += d / n;
            *s += d * (v - *m);
        }
    }

    fn std(&self, i: usize) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2[i] / (self.n - 1) as f64).sqrt()
        }
    }
}

/// Class-conditional mean stability under the fixed feature map `phi`.
///
/// For each class, `n_trials` i.i.d. pairs `(x_i, x_j)` are drawn and `x_i`
/// is augmented with `x_j`. The statistic is the largest per-coordinate gap
/// between the mean of `phi(x~)` and the mean of `phi(x_i)`, in units of
/// `sigma / sqrt(n_trials)` where `sigma` is the sample deviation of
/// `phi(x_i)`; it passes at `DRIFT_SIGMAS`.
pub fn check_class_mean_drift(
    classes: &[&dyn ClipGenerator],
    cfg: &AugConfig,
    phi: FeatureMap,
    n_trials: usize,
    rng: &mut ClipRng,
) -> Result<ValidationReport> {
    let dim = phi.dim();
    let mut max_z = 0.0f64;
    let mut max_gap = 0.0f64;
    let mut per_class = Vec::new();
    for class in classes {
        let mut source = Welford::new(dim);
        let mut augmented = Welford::new(dim);
        for trial in 0..n_trials {
            let a = class.generate(format!("{}-a{trial}", class.label()), rng);
            let b = class.generate(format!("{}-b{trial}", class.label()), rng);
            let aug = augment_pair(&a, &b, cfg, rng)?;
            source.push(&phi.apply(&a));
            augmented.push(&phi.apply(&aug.clip));
        }
        let n = n_trials.max(1) as f64;
        let mut class_gap = 0.0f64;
        let mut class_z = 0.0f64;
        for i in 0..dim {
            // both means use the same running update, so identical feature
            // streams give a gap of exactly zero
            let gap = (augmented.mean[i] - source.mean[i]).abs();
            let se = source.std(i) / n.sqrt();
            let z = if se > 0.0 {
                gap / se
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            class_gap = class_gap.max(gap);
            class_z = class_z.max(z);
        }
        max_gap = max_gap.max(class_gap);
        max_z = max_z.max(class_z);
        per_class.push(json!({
            "label": class.label(),
            "max_abs_gap": class_gap,
            "max_z": class_z,
        }));
    }
    let mut rep = ValidationReport {
        check: format!("class_mean_drift/{}", phi.name()),
        samples: n_trials,
        statistic: max_z,
        threshold: DRIFT_SIGMAS,
        passed: max_z <= DRIFT_SIGMAS,
        r: None,
        b0: None,
        strategy: None,
        details: json!({
            "feature_map": phi.name(),
            "max_abs_gap": max_gap,
            "classes": per_class,
            "scope": "exchangeable synthetic classes only; does not certify datasets where mask placement correlates with content",
        }),
    };
    point_fields(&mut rep, cfg);
    if cfg.strategy == Strategy::Mixup {
        rep.details["mixup_lambda"] = json!(cfg.mixup_lambda);
    }
    Ok(rep)
}

/// Weight grids (at most 6 patches) exercised by the sampling-law suite.
#[derive(Clone, Debug)]
pub struct SamplingFixture {
    pub name: &'static str,
    pub weights: WeightGrid,
    pub k: usize,
}

pub fn sampling_fixtures() -> Vec<SamplingFixture> {
    let grid = |rows, cols, w: &[f64]| WeightGrid::new(rows, cols, w.to_vec()).expect("fixture");
    vec![
        SamplingFixture {
            name: "symmetric_pair",
            weights: grid(1, 2, &[1.0, 1.0]),
            k: 1,
        },
        SamplingFixture {
            name: "excluded_pair",
            weights: grid(1, 2, &[1.0, 0.0]),
            k: 1,
        },
        SamplingFixture {
            name: "three_levels",
            weights: grid(1, 3, &[1.0, 2.0 / 3.0, 1.0 / 3.0]),
            k: 2,
        },
        SamplingFixture {
            name: "normalized_quadrants",
            weights: grid(2, 2, &[1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0]),
            k: 2,
        },
        SamplingFixture {
            name: "six_mixed",
            weights: grid(2, 3, &[0.9, 0.5, 0.1, 0.7, 0.3, 0.0]),
            k: 3,
        },
        SamplingFixture {
            name: "uniform_quad",
            weights: WeightGrid::uniform(2, 2),
            k: 2,
        },
    ]
}
