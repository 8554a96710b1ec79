//! Command-line definitions and the defaults < config file < flags merge.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use shadowup::{ContrastSource, EnhanceConfig};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "shadowup", version, about = "Noise-aware shadow-up contrast enhancement")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enhance one or more images.
    Enhance(EnhanceArgs),
    /// Enhance with plain full-range AGCWD on V (comparison baseline).
    Baseline(EnhanceArgs),
    /// Write the tone curve designed for an image as `i,y` CSV.
    Curve(CurveArgs),
    /// Write the illumination and reflectance layers as 8-bit PGM.
    Decompose(DecomposeArgs),
    /// Run both methods on synthetic noisy scenes and print metrics CSV.
    Eval(EvalArgs),
}

/// Tunables. Unset flags fall back to `--config`, then to the built-in default.
#[derive(Debug, Args, Default, Clone)]
pub struct Tuning {
    /// key = value file of tunables, keyed by the long flag names below
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Illumination percentile that starts the bright tail [default: 75]
    #[arg(long)]
    pub percentile: Option<f64>,
    /// AGCWD weighting exponent [default: 0.5]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Smoothness weight of the illumination solve [default: 0.5]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Edge-weight regularizer of the illumination solve [default: 0.001]
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Gaussian scale of the local contrast, in pixels [default: 3]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Signal-dependent noise variance slope [default: 0.01]
    #[arg(long)]
    pub noise_a: Option<f64>,
    /// Constant noise variance [default: 0.0004]
    #[arg(long)]
    pub noise_b: Option<f64>,
    /// Relative residual at which the solver stops [default: 0.00001]
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Solver iteration cap [default: 500]
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Image the local contrast is measured on [default: value]
    #[arg(long, value_enum)]
    pub contrast_from: Option<ContrastArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ContrastArg {
    Value,
    Illumination,
}

impl From<ContrastArg> for ContrastSource {
    fn from(c: ContrastArg) -> Self {
        match c {
            ContrastArg::Value => ContrastSource::Value,
            ContrastArg::Illumination => ContrastSource::Illumination,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnhanceArgs {
    /// Input images (PNG or binary PPM/PGM)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Output file, only with a single input
    #[arg(short, long, conflicts_with = "out_dir")]
    pub output: Option<PathBuf>,
    /// Directory for `<stem>_enhanced.png` (or `<stem>_agcwd.png`)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Write the run report as JSON (an array when there are several inputs)
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Directory for illumination, reflectance and remapped illumination PGMs
    #[arg(long, value_name = "DIR")]
    pub dump_layers: Option<PathBuf>,
    /// Directory for `<stem>_histogram.csv` of the gated histogram
    #[arg(long, value_name = "DIR")]
    pub dump_histogram: Option<PathBuf>,
    /// Same as the `baseline` subcommand
    #[arg(long)]
    pub baseline: bool,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    pub input: PathBuf,
    /// CSV destination
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    pub input: PathBuf,
    /// Directory for `<stem>_illumination.pgm` and `<stem>_reflectance.pgm`
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub tuning: Tuning,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PatternArg {
    Ramp,
    TwoBand,
    CheckerInDark,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Synthetic scene
    #[arg(long, value_enum, default_value = "two-band")]
    pub pattern: PatternArg,
    /// Additive Gaussian noise standard deviation
    #[arg(long, default_value_t = 0.05)]
    pub noise_std: f64,
    /// Number of seeds, counted from --first-seed
    #[arg(long, default_value_t = 20)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Side length of the square scene
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    /// Replace the noise model by one matched to --noise-std
    #[arg(long)]
    pub matched_nlf: bool,
    /// CSV destination (stdout when absent)
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub tuning: Tuning,
}

impl Tuning {
    /// Resolves the effective configuration.
    pub fn resolve(&self) -> Result<EnhanceConfig, CliError> {
        let mut merged = match &self.config {
            Some(path) => parse_config_file(path)?,
            None => Tuning::default(),
        };
        merged.overlay(self);
        let mut cfg = EnhanceConfig::default();
        macro_rules! take {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = merged.$field {
                    cfg.$($target)+ = v.into();
                }
            };
        }
        take!(percentile => percentile);
        take!(alpha => alpha);
        take!(lambda => solver.lambda);
        take!(epsilon => solver.epsilon);
        take!(sigma => sigma);
        take!(noise_a => noise.a);
        take!(noise_b => noise.b);
        take!(tolerance => solver.tolerance);
        take!(max_iters => solver.max_iters);
        take!(contrast_from => contrast_source);
        cfg.validate()?;
        Ok(cfg)
    }

    fn overlay(&mut self, flags: &Tuning) {
        macro_rules! over {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f; } )* };
        }
        over!(percentile, alpha, lambda, epsilon, sigma, noise_a, noise_b, tolerance, max_iters, contrast_from);
    }
}

fn parse_config_file(path: &Path) -> Result<Tuning, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Core(shadowup::Error::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }))?;
    parse_config(&text).map_err(|reason| CliError::Config(format!("{}: {reason}", path.display())))
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Tuning, String> {
    let mut t = Tuning::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let bad = |e: &dyn std::fmt::Display| format!("line {}: {key}: {e}", n + 1);
        let float = || value.parse::<f64>().map_err(|e| bad(&e));
        match key.as_str() {
            "percentile" => t.percentile = Some(float()?),
            "alpha" => t.alpha = Some(float()?),
            "lambda" => t.lambda = Some(float()?),
            "epsilon" => t.epsilon = Some(float()?),
            "sigma" => t.sigma = Some(float()?),
            "noise-a" => t.noise_a = Some(float()?),
            "noise-b" => t.noise_b = Some(float()?),
            "tolerance" => t.tolerance = Some(float()?),
            "max-iters" => t.max_iters = Some(value.parse().map_err(|e| bad(&e))?),
            "contrast-from" => t.contrast_from = Some(ContrastArg::from_str(value, true).map_err(|e| bad(&e))?),
            _ => return Err(format!("line {}: unknown key `{key}`", n + 1)),
        }
    }
    Ok(t)
}
