//! `rema`: command-line front end for the rema augmentation engine.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rema_core::mixing::{AugConfig, Strategy};
use rema_core::MaskStrategy;

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;

const DEFAULTS_NOTE: &str = "Default hyperparameters (ratio 0.3, block 16, frames 16, strategy tube) \
are mid-range engineering choices, not tuned or published values.\n\
REMA_SEED, when set, overrides --seed.";

#[derive(Parser, Debug)]
#[command(name = "rema", version, about = "Motion-guided intra-class mixing augmentation for video clips")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Augment one clip with a same-class partner.
    #[command(after_help = DEFAULTS_NOTE)]
    Augment(AugmentArgs),
    /// Augment every clip of a JSONL manifest.
    #[command(after_help = DEFAULTS_NOTE)]
    Batch(BatchArgs),
    /// Render motion, patch motion, weights and a sampled tube mask as PNGs.
    #[command(after_help = DEFAULTS_NOTE)]
    Inspect(InspectArgs),
    /// Run the statistical checks over a parameter grid.
    #[command(after_help = DEFAULTS_NOTE)]
    Validate(ValidateArgs),
    /// Time augmentation on synthetic in-memory clips.
    #[command(after_help = DEFAULTS_NOTE)]
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct HyperArgs {
    /// Output frame count T.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    frames: u64,
    /// Coverage ratio r in [0, 1].
    #[arg(long, default_value_t = 0.3, value_parser = parse_ratio)]
    ratio: f64,
    /// Patch edge b0 in pixels.
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    block: u64,
    /// A | B | C (tube) | mask_only | mixup.
    #[arg(long, default_value = "tube", value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fill value used by mask_only.
    #[arg(long, default_value_t = 0.0, value_parser = parse_unit_f32)]
    fill: f32,
    /// Source weight used by mixup.
    #[arg(long, default_value_t = 0.5, value_parser = parse_unit_f32)]
    mixup_lambda: f32,
}

impl HyperArgs {
    fn config(&self, seed: u64) -> AugConfig {
        AugConfig {
            ratio: self.ratio,
            block: self.block as usize,
            frames: self.frames as usize,
            strategy: self.strategy,
            fill: self.fill,
            mixup_lambda: self.mixup_lambda,
            seed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    /// RVT1 tensor file.
    Raw,
    /// Directory of PNG frames.
    Frames,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    clip_a: PathBuf,
    #[arg(long)]
    clip_b: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Raw)]
    format: OutFormat,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct BatchArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[arg(long)]
    clip: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    block: u64,
    #[arg(long, default_value_t = 0.3, value_parser = parse_ratio)]
    ratio: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Coverage,
    Sampling,
    Tube,
    Drift,
    All,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Trials per check [default: 2000, and 200000 draws for sampling].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Parameter grid, e.g. "r=0.1,0.3,0.5;b0=4,8,16;strategy=A,B,C".
    #[arg(long, default_value = "r=0.3;b0=8;strategy=A,B,C")]
    grid: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Directory for per-check JSON reports and summary.csv.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Builds masks for the tube strategy with another family instead.
    #[arg(long, hide = true, value_parser = parse_mask_strategy)]
    fault_tube_builder: Option<MaskStrategy>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    frames: u64,
    #[arg(long, default_value_t = 224, value_parser = clap::value_parser!(u64).range(1..))]
    size: u64,
    #[arg(long, default_value_t = 500)]
    clips: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[arg(long, default_value_t = 0.3, value_parser = parse_ratio)]
    ratio: f64,
    #[arg(long, default_value_t = 16, value_parser = clap::value_parser!(u64).range(1..))]
    block: u64,
    #[arg(long, default_value = "tube", value_parser = parse_strategy)]
    strategy: Strategy,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

fn parse_ratio(s: &str) -> Result<f64, String> {
    let r: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(format!("{r} is outside [0, 1]"))
    }
}

fn parse_unit_f32(s: &str) -> Result<f32, String> {
    parse_ratio(s).map(|v| v as f32)
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|e| e.to_string())
}

fn parse_mask_strategy(s: &str) -> Result<MaskStrategy, String> {
    s.parse::<MaskStrategy>().map_err(|e| e.to_string())
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// A check ran and failed; its report is already on stdout.
    Check,
    Usage(String),
    Io(String),
}

impl From<rema_core::Error> for Failure {
    fn from(e: rema_core::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn effective_seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var("REMA_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("REMA_SEED={v:?} is not an unsigned 64-bit integer"))),
        Err(_) => Ok(flag),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Augment(a) => commands::augment(&a, effective_seed(a.hyper.seed)?),
        Command::Batch(a) => commands::batch(&a, effective_seed(a.hyper.seed)?),
        Command::Inspect(a) => commands::inspect(&a, effective_seed(a.seed)?),
        Command::Validate(a) => commands::validate(&a, effective_seed(a.seed)?),
        Command::Bench(a) => commands::bench(&a, effective_seed(a.seed)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(EXIT_CHECK_FAILED),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
