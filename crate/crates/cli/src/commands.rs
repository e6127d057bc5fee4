use std::fs;
use std::path::Path;

use image::{GrayImage, Luma};
use serde_json::json;

use rema_core::bench::{run_bench, BenchConfig};
use rema_core::masking::{budget_patches, build_mask_variant, MaskGeometry};
use rema_core::mixing::{augment_batch, augment_pair, write_augmented, AugConfig};
use rema_core::motion::{motion_map, normalize_patch_motion, pool_to_patches, selection_weights};
use rema_core::seed::stream_for;
use rema_core::validation::{grid_runner, write_reports, CheckKind, GridOptions, ParamGrid};
use rema_core::video_io::{load_clip, load_manifest, ClipFormat};
use rema_core::MaskStrategy;

use crate::{AugmentArgs, BatchArgs, BenchArgs, Failure, InspectArgs, OutFormat, Suite, ValidateArgs};

fn print_json(value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn load(path: &Path) -> Result<rema_core::VideoClip, Failure> {
    Ok(load_clip(path, ClipFormat::infer(path))?)
}

pub fn augment(args: &AugmentArgs, seed: u64) -> Result<(), Failure> {
    let cfg = args.hyper.config(seed);
    let a = load(&args.clip_a)?;
    let b = load(&args.clip_b)?;
    let mut rng = stream_for(seed, a.id());
    let aug = augment_pair(&a, &b, &cfg, &mut rng)?;
    let format = match args.format {
        OutFormat::Raw => ClipFormat::RawTensor,
        OutFormat::Frames => ClipFormat::FrameDir,
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::Io(format!("{}: {e}", parent.display())))?;
    }
    write_augmented(&aug, &args.out, format)?;
    print_json(&aug.provenance)
}

pub fn batch(args: &BatchArgs, seed: u64) -> Result<(), Failure> {
    let cfg = args.hyper.config(seed);
    let manifest = load_manifest(&args.manifest)?;
    let report = augment_batch(&manifest, &cfg, &args.out, args.workers as usize)?;
    print_json(&report)?;
    if report.failed > 0 {
        return Err(Failure::Check);
    }
    Ok(())
}

fn save_gray(path: &Path, width: usize, height: usize, pixel: impl Fn(usize, usize) -> u8) -> Result<(), Failure> {
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| Luma([pixel(y as usize, x as usize)]));
    img.save(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn inspect(args: &InspectArgs, seed: u64) -> Result<(), Failure> {
    let clip = load(&args.clip)?;
    let shape = clip.shape();
    let block = args.block as usize;
    let motion = motion_map(&clip)?;
    let pm = normalize_patch_motion(&pool_to_patches(&motion, block)?);
    let weights = selection_weights(&pm)?;
    let k = budget_patches(args.ratio, pm.len())?;
    let geom = MaskGeometry {
        block,
        frames: 1,
        height: shape.height,
        width: shape.width,
    };
    let mut rng = stream_for(seed, clip.id());
    let mask = build_mask_variant(MaskStrategy::Tube, &weights.or_uniform_for(k), args.ratio, geom, &mut rng)?;

    fs::create_dir_all(&args.out).map_err(|e| Failure::Io(format!("{}: {e}", args.out.display())))?;
    let (h, w) = (shape.height, shape.width);
    let lo = motion.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = motion.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let patch_of = |y: usize, x: usize| (y / block) * pm.cols + x / block;

    let files = [
        "motion_map.png",
        "patch_motion.png",
        "selection_weights.png",
        "tube_mask.png",
    ];
    save_gray(&args.out.join(files[0]), w, h, |y, x| {
        if hi > lo {
            to_u8((motion.get(y, x) - lo) / (hi - lo))
        } else {
            0
        }
    })?;
    save_gray(&args.out.join(files[1]), w, h, |y, x| to_u8(pm.grid[patch_of(y, x)]))?;
    save_gray(&args.out.join(files[2]), w, h, |y, x| to_u8(weights.weights[patch_of(y, x)]))?;
    let spatial = mask.frame(0);
    save_gray(&args.out.join(files[3]), w, h, |y, x| if spatial[y * w + x] { 255 } else { 0 })?;

    print_json(&json!({
        "clip": clip.id(),
        "shape": shape.to_string(),
        "grid": [pm.rows, pm.cols],
        "k": k,
        "coverage": mask.count() as f64 / (h * w) as f64,
        "files": files.iter().map(|f| args.out.join(f)).collect::<Vec<_>>(),
    }))
}

pub fn validate(args: &ValidateArgs, seed: u64) -> Result<(), Failure> {
    let base = AugConfig {
        seed,
        ..AugConfig::default()
    };
    let grid = ParamGrid::parse(&args.grid, &base)?;
    let checks: Vec<CheckKind> = match args.suite {
        Suite::Coverage => vec![CheckKind::Coverage],
        Suite::Sampling => vec![CheckKind::Sampling],
        Suite::Tube => vec![CheckKind::Tube],
        Suite::Drift => vec![CheckKind::Drift],
        Suite::All => CheckKind::ALL.to_vec(),
    };
    let defaults = GridOptions::default();
    let opts = GridOptions {
        trials: args.trials.map_or(defaults.trials, |t| t as usize),
        sampling_trials: args.trials.map_or(defaults.sampling_trials, |t| t as usize),
        seed,
        tube_builder_override: args.fault_tube_builder,
        ..defaults
    };
    let reports = grid_runner(&grid, &base, &checks, &opts);
    if let Some(dir) = &args.report {
        write_reports(dir, &reports)?;
    }
    let passed = reports.iter().all(|r| r.passed);
    print_json(&json!({
        "passed": passed,
        "trials": opts.trials,
        "sampling_trials": opts.sampling_trials,
        "seed": seed,
        "grid": args.grid,
        "reports": reports,
    }))?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

pub fn bench(args: &BenchArgs, seed: u64) -> Result<(), Failure> {
    let cfg = BenchConfig {
        frames: args.frames as usize,
        size: args.size as usize,
        clips: args.clips as usize,
        workers: args.workers as usize,
        aug: AugConfig {
            ratio: args.ratio,
            block: args.block as usize,
            strategy: args.strategy,
            seed,
            ..AugConfig::default()
        },
    };
    print_json(&run_bench(&cfg)?)
}
