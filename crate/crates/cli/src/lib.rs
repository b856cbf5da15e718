//! Command-line front end for grouped evolutionary attacks on Gaussian
//! splat models.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gmea_core::evo::SelectionPolicy;
use gmea_core::objectives::ViewMode;
use gmea_core::watermark::{ToyWatermarkSpec, DEFAULT_VARIANCES};
use gmea_core::GmeaError;

use commands::{cmd_attack, cmd_lemma, cmd_metrics, cmd_render, cmd_synth, CameraSpec, MetricsRequest};
use config::{parse_resolution, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] GmeaError),
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(GmeaError::Argument(_)) => 2,
            CliError::Runtime(_) | CliError::Check(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gmea", version, about = "Grouped multi-objective evolutionary attacks on Gaussian splat watermarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attack a model and write the attacked PLY plus reports.
    Attack(AttackArgs),
    /// Render one orbit view of a model to PNG.
    Render(RenderArgs),
    /// Compare an attacked model against its original.
    Metrics(MetricsArgs),
    /// Numerically check the Gaussian maximum-entropy bound.
    Lemma(LemmaArgs),
    /// Write a seeded synthetic scene.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input PLY model.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub generations: Option<usize>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub views: Option<usize>,
    /// `N` or `WxH`.
    #[arg(long, value_parser = parse_resolution)]
    pub resolution: Option<(usize, usize)>,
    #[arg(long)]
    pub policy: Option<SelectionPolicy>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub view_mode: Option<ViewMode>,
    /// Mark the input with a toy watermark of this many bits before attacking.
    #[arg(long)]
    pub watermark_bits: Option<usize>,
    #[arg(long)]
    pub watermark_strength: Option<f64>,
}

impl AttackArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.input {
            cfg.input = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.pop {
            cfg.n_pop = v;
        }
        if let Some(v) = self.views {
            cfg.n_views = v;
        }
        if let Some((w, h)) = self.resolution {
            cfg.width = w;
            cfg.height = h;
        }
        if let Some(v) = self.policy {
            cfg.policy = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.view_mode {
            cfg.view_mode = v;
        }
        if self.watermark_bits.is_some() || self.watermark_strength.is_some() {
            let mut spec = cfg.watermark.take().unwrap_or_default();
            if let Some(b) = self.watermark_bits {
                spec.bits = b;
            }
            if let Some(s) = self.watermark_strength {
                spec.strength = s;
            }
            cfg.watermark = Some(spec);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// `azimuth,elevation[,distance]` in degrees; distance defaults to 2.5x
    /// the bounding radius.
    #[arg(long, default_value = "0,30")]
    pub camera: CameraSpec,
    #[arg(long, value_parser = parse_resolution, default_value = "128")]
    pub resolution: (usize, usize),
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub attacked: PathBuf,
    /// Toy watermark JSON written by `attack` or `synth`.
    #[arg(long)]
    pub watermark: Option<PathBuf>,
    /// Require bit metrics (BAR/WUS/IDS).
    #[arg(long)]
    pub bar: bool,
    #[arg(long, value_parser = parse_resolution, default_value = "128")]
    pub resolution: (usize, usize),
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LemmaArgs {
    /// Comma-separated variances.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub variances: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 500)]
    pub kernels: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a toy-watermarked copy with this many bits.
    #[arg(long)]
    pub watermark_bits: Option<usize>,
    /// Resolution of the watermark decode view.
    #[arg(long, default_value_t = 64)]
    pub watermark_resolution: usize,
}

/// Executes a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Attack(args) => {
            let outcome = cmd_attack(&args.resolve()?)?;
            println!("{}", serde_json::to_string_pretty(&outcome.evaluation).map_err(GmeaError::from)?);
        }
        Command::Render(args) => {
            let (w, h) = args.resolution;
            cmd_render(&args.model, args.camera, w, h, &args.out)?;
        }
        Command::Metrics(args) => {
            let (w, h) = args.resolution;
            let report = cmd_metrics(&MetricsRequest {
                original: &args.original,
                attacked: &args.attacked,
                watermark: args.watermark.as_deref(),
                want_bits: args.bar,
                width: w,
                height: h,
                out: args.out.as_deref(),
            })?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(GmeaError::from)?);
        }
        Command::Lemma(args) => {
            let variances = args.variances.unwrap_or_else(|| DEFAULT_VARIANCES.to_vec());
            let report = cmd_lemma(&variances, args.samples, args.seed, args.out.as_deref())?;
            for row in &report.rows {
                println!(
                    "{:>10} {:<8} estimate {:.6} bound {:.6} margin {:.6}",
                    row.variance, row.family, row.entropy_estimate, row.bound, row.margin
                );
            }
        }
        Command::Synth(args) => {
            let spec = args.watermark_bits.map(|bits| ToyWatermarkSpec {
                bits,
                seed: args.seed,
                ..Default::default()
            });
            let path = cmd_synth(
                args.kernels,
                args.seed,
                &args.out,
                spec.as_ref().map(|s| (s, args.watermark_resolution)),
            )?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
