use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::{augment_pair, sample_partner, AugConfig, AugmentedClip, Provenance};
use crate::error::{Error, Result};
use crate::seed::stream_for;
use crate::video_io::{
    load_clip, sample_frames, sidecar_path, write_clip, ClipFormat, DatasetManifest, ManifestEntry,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BatchFailure {
    pub id: String,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BatchReport {
    pub augmented: usize,
    pub skipped: usize,
    pub failed: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<BatchFailure>,
}

enum Outcome {
    Augmented,
    Skipped,
}

/// Writes the clip and its provenance sidecar (`<stem>.meta.json`).
pub fn write_augmented(aug: &AugmentedClip, path: &Path, format: ClipFormat) -> Result<PathBuf> {
    write_clip(&aug.clip, path, format)?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(&aug.provenance)?;
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

fn output_stem(id: &str) -> String {
    id.chars()
        .map(|c| if matches!(c, '/' | '\\' | ':') { '_' } else { c })
        .collect()
}

fn load_entry(manifest: &DatasetManifest, entry: &ManifestEntry) -> Result<crate::video_io::VideoClip> {
    let path = manifest.resolve(entry);
    let clip = load_clip(&path, ClipFormat::infer(&path))?;
    Ok(clip.with_id(entry.id.clone()).with_label(Some(entry.label.clone())))
}

fn process(
    manifest: &DatasetManifest,
    entry: &ManifestEntry,
    cfg: &AugConfig,
    out_dir: &Path,
) -> Result<Outcome> {
    // Partner choice comes first on the clip's stream, then the mask draws.
    let mut rng = stream_for(cfg.seed, &entry.id);
    let source = load_entry(manifest, entry)?;
    let out_path = out_dir.join(format!("{}.rvt", output_stem(&entry.id)));

    let partner_id = match sample_partner(manifest, &entry.id, &mut rng) {
        Ok(id) => id,
        Err(Error::SingletonClass { id, label }) => {
            log::warn!("class {label:?} has a single clip; copying {id:?} unaugmented");
            let clip = sample_frames(&source, cfg.frames)?;
            let aug = AugmentedClip {
                label: Some(entry.label.clone()),
                provenance: Provenance {
                    source_id: entry.id.clone(),
                    partner_id: None,
                    strategy: cfg.strategy,
                    seed: cfg.seed,
                    r: cfg.ratio,
                    b0: cfg.block,
                    frames: cfg.frames,
                    realized_coverage: Some(0.0),
                    label: Some(entry.label.clone()),
                },
                clip,
            };
            write_augmented(&aug, &out_path, ClipFormat::RawTensor)?;
            return Ok(Outcome::Skipped);
        }
        Err(e) => return Err(e),
    };
    let partner_entry = manifest
        .get(&partner_id)
        .ok_or_else(|| Error::UnknownClip(partner_id.clone()))?;
    let partner = load_entry(manifest, partner_entry)?;
    let aug = augment_pair(&source, &partner, cfg, &mut rng)?;
    write_augmented(&aug, &out_path, ClipFormat::RawTensor)?;
    Ok(Outcome::Augmented)
}

/// Augments every manifest clip against a random intra-class partner and
/// writes `<id>.rvt` plus `<id>.meta.json` into `out_dir`.
///
/// Output is a pure function of `(manifest, cfg)`: each clip draws from its
/// own stream keyed by `(cfg.seed, clip id)`. Per-clip failures are counted
/// in the report and do not abort the batch.
pub fn augment_batch(
    manifest: &DatasetManifest,
    cfg: &AugConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<BatchReport> {
    cfg.validate()?;
    if workers == 0 {
        return Err(Error::InvalidConfig("workers must be >= 1".into()));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<(String, Result<Outcome>)> = pool.install(|| {
        manifest
            .entries()
            .par_iter()
            .map(|entry| (entry.id.clone(), process(manifest, entry, cfg, out_dir)))
            .collect()
    });

    let mut report = BatchReport::default();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(Outcome::Augmented) => report.augmented += 1,
            Ok(Outcome::Skipped) => report.skipped += 1,
            Err(e) => {
                log::error!("clip {id:?} failed: {e}");
                report.failed += 1;
                report.failures.push(BatchFailure {
                    id,
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}
