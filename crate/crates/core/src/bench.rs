//! Throughput measurement on synthetic in-memory clip pairs.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mixing::{augment_pair_timed, AugConfig, StageTimings};
use crate::seed::stream_for;
use crate::validation::{ClipGenerator, NoiseClips};
use crate::video_io::ClipShape;

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub frames: usize,
    pub size: usize,
    pub clips: usize,
    pub workers: usize,
    pub aug: AugConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            frames: 16,
            size: 224,
            clips: 500,
            workers: 1,
            aug: AugConfig::default(),
        }
    }
}

/// Stage totals in seconds, summed over all clips (and therefore over all
/// workers).
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct StageSeconds {
    pub resample: f64,
    pub motion: f64,
    pub pooling: f64,
    pub sampling: f64,
    pub mixing: f64,
}

impl From<StageTimings> for StageSeconds {
    fn from(t: StageTimings) -> Self {
        Self {
            resample: t.resample.as_secs_f64(),
            motion: t.motion.as_secs_f64(),
            pooling: t.pooling.as_secs_f64(),
            sampling: t.sampling.as_secs_f64(),
            mixing: t.mixing.as_secs_f64(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub clips: usize,
    pub workers: usize,
    pub frames: usize,
    pub size: usize,
    pub block: usize,
    pub ratio: f64,
    pub strategy: String,
    /// Wall time of the augmentation calls; clip generation is excluded.
    pub augment_seconds: f64,
    pub wall_seconds: f64,
    pub clips_per_second: f64,
    pub stages: StageSeconds,
}

/// Generates `clips` noise pairs of `frames x size x size` and times
/// `augment_pair` on each. The block size is clamped to the frame size.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.workers == 0 || cfg.size == 0 || cfg.frames == 0 {
        return Err(Error::InvalidConfig(
            "bench needs positive workers, size and frames".into(),
        ));
    }
    let aug = AugConfig {
        frames: cfg.frames,
        block: cfg.aug.block.min(cfg.size),
        ..cfg.aug.clone()
    };
    let generator = NoiseClips::new(ClipShape::new(cfg.frames, cfg.size, cfg.size));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;

    let wall = Instant::now();
    let per_clip: Vec<Result<(f64, StageTimings)>> = pool.install(|| {
        (0..cfg.clips)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_for(aug.seed, &format!("bench-{i}"));
                let a = generator.generate(format!("a{i}"), &mut rng);
                let b = generator.generate(format!("b{i}"), &mut rng);
                let clock = Instant::now();
                let (_, timings) = augment_pair_timed(&a, &b, &aug, &mut rng)?;
                Ok((clock.elapsed().as_secs_f64(), timings))
            })
            .collect()
    });
    let wall_seconds = wall.elapsed().as_secs_f64();

    let mut augment_seconds = 0.0;
    let mut stages = StageTimings::default();
    for r in per_clip {
        let (secs, t) = r?;
        augment_seconds += secs;
        stages += t;
    }
    // per-worker share of the augmentation time approximates its wall time
    let effective = augment_seconds / cfg.workers.min(cfg.clips.max(1)) as f64;
    let clips_per_second = if effective > 0.0 {
        cfg.clips as f64 / effective
    } else {
        0.0
    };
    Ok(BenchReport {
        clips: cfg.clips,
        workers: cfg.workers,
        frames: cfg.frames,
        size: cfg.size,
        block: aug.block,
        ratio: aug.ratio,
        strategy: aug.strategy.to_string(),
        augment_seconds,
        wall_seconds,
        clips_per_second,
        stages: stages.into(),
    })
}
