use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rayon::prelude::*;
use shadowup::curve::export_curve;
use shadowup::eval::{evaluate, matched_config, metrics_csv, Pattern, SyntheticSpec};
use shadowup::noise::histogram_csv;
use shadowup::{
    decompose, enhance, enhance_value, hsv_to_rgb, load_image, rgb_to_hsv, save_image, EnhanceConfig, EnhanceReport,
    Error, Mode, PlanarImage,
};

mod args;

use args::{Cli, Command, CurveArgs, DecomposeArgs, EnhanceArgs, EvalArgs, PatternArg};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Config(String),
    /// Some batch inputs failed; each was reported as it was collected.
    Batch(u8),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Batch(_) => "batch",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NotConverged { .. }) => 2,
            CliError::Batch(code) => *code,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => e.fmt(f),
            CliError::Usage(m) | CliError::Config(m) => f.write_str(m),
            CliError::Batch(code) => write!(f, "batch failed with exit code {code}"),
        }
    }
}

fn report_error(context: Option<&Path>, err: &CliError) {
    match context {
        // io errors already carry their path
        Some(p) if !matches!(err, CliError::Core(Error::Io { .. })) => eprintln!("shadowup: error[{}]: {}: {err}", err.code(), p.display()),
        _ => eprintln!("shadowup: error[{}]: {err}", err.code()),
    }
}

fn io_error(path: &Path, e: impl ToString) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn gray_layer(dir: &Path, name: String, img: &PlanarImage) -> Result<(), CliError> {
    save_image(img, dir.join(name)).map_err(CliError::from)
}

/// Result of one input: the report when the solver got that far, and the error if any.
struct Outcome {
    input: PathBuf,
    report: Option<EnhanceReport>,
    error: Option<CliError>,
}

fn enhance_one(input: &Path, output: &Path, args: &EnhanceArgs, cfg: &EnhanceConfig) -> Result<EnhanceReport, CliError> {
    let img = load_image(input)?;
    let wants_layers = cfg.mode == Mode::Proposed && (args.dump_layers.is_some() || args.dump_histogram.is_some());
    let (out, report) = if wants_layers {
        let hsv = rgb_to_hsv(&img)?;
        let v = PlanarImage::gray(img.width(), img.height(), hsv.plane(2).to_vec())?;
        let (layers, report) = enhance_value(&v, cfg)?;
        let name = stem(input);
        if let Some(dir) = &args.dump_layers {
            create_dir(dir)?;
            gray_layer(dir, format!("{name}_illumination.pgm"), &layers.decomposition.illumination)?;
            gray_layer(dir, format!("{name}_reflectance.pgm"), &layers.decomposition.reflectance)?;
            gray_layer(dir, format!("{name}_enhanced_illumination.pgm"), &layers.enhanced_illumination)?;
        }
        if let Some(dir) = &args.dump_histogram {
            create_dir(dir)?;
            let path = dir.join(format!("{name}_histogram.csv"));
            fs::write(&path, histogram_csv(&layers.histogram)).map_err(|e| io_error(&path, e))?;
        }
        let out = hsv_to_rgb(&hsv.with_plane(2, layers.value.into_planes().remove(0))?)?;
        (out, report)
    } else {
        enhance(&img, cfg)?
    };
    save_image(&out, output)?;
    Ok(report)
}

fn run_enhance(args: EnhanceArgs, mode: Mode) -> Result<(), CliError> {
    let mode = if args.baseline { Mode::AgcwdPlain } else { mode };
    let cfg = EnhanceConfig {
        mode,
        ..args.tuning.resolve()?
    };
    let suffix = match mode {
        Mode::Proposed => "enhanced",
        Mode::AgcwdPlain => "agcwd",
    };
    let outputs: Vec<PathBuf> = match (&args.output, &args.out_dir) {
        (Some(o), None) if args.inputs.len() == 1 => vec![o.clone()],
        (Some(_), None) => return Err(CliError::Usage("-o takes a single input; use --out-dir for batches".into())),
        (None, Some(dir)) => {
            create_dir(dir)?;
            args.inputs.iter().map(|i| dir.join(format!("{}_{suffix}.png", stem(i)))).collect()
        }
        _ => return Err(CliError::Usage("one of -o or --out-dir is required".into())),
    };

    let outcomes: Vec<Outcome> = args
        .inputs
        .par_iter()
        .zip(outputs.par_iter())
        .map(|(input, output)| match enhance_one(input, output, &args, &cfg) {
            Ok(report) => Outcome {
                input: input.clone(),
                report: Some(report),
                error: None,
            },
            Err(CliError::Core(Error::NotConverged {
                residual,
                iterations,
                report,
            })) => Outcome {
                input: input.clone(),
                report: report.map(|r| *r),
                error: Some(CliError::Core(Error::NotConverged {
                    residual,
                    iterations,
                    report: None,
                })),
            },
            Err(e) => Outcome {
                input: input.clone(),
                report: None,
                error: Some(e),
            },
        })
        .collect();

    if let Some(path) = &args.report {
        let reports: Vec<String> = outcomes.iter().filter_map(|o| o.report.as_ref().map(EnhanceReport::to_json)).collect();
        let text = if args.inputs.len() == 1 {
            reports.into_iter().next().unwrap_or_else(|| "null".into())
        } else {
            format!("[\n{}\n]", reports.join(",\n"))
        };
        fs::write(path, text + "\n").map_err(|e| io_error(path, e))?;
    }

    let mut worst = 0;
    for o in outcomes {
        if let Some(err) = o.error {
            report_error(Some(&o.input), &err);
            worst = worst.max(err.exit_code());
        }
    }
    match worst {
        0 => Ok(()),
        code => Err(CliError::Batch(code)),
    }
}

fn run_curve(args: CurveArgs) -> Result<(), CliError> {
    let cfg = args.tuning.resolve()?;
    let hsv = rgb_to_hsv(&load_image(&args.input)?)?;
    let v = PlanarImage::gray(hsv.width(), hsv.height(), hsv.plane(2).to_vec())?;
    let (layers, _) = enhance_value(&v, &cfg)?;
    export_curve(&layers.curve, &args.output)?;
    Ok(())
}

fn run_decompose(args: DecomposeArgs) -> Result<(), CliError> {
    let cfg = args.tuning.resolve()?;
    let hsv = rgb_to_hsv(&load_image(&args.input)?)?;
    let v = PlanarImage::gray(hsv.width(), hsv.height(), hsv.plane(2).to_vec())?;
    let d = decompose(&v, &cfg.solver)?;
    create_dir(&args.out_dir)?;
    let name = stem(&args.input);
    gray_layer(&args.out_dir, format!("{name}_illumination.pgm"), &d.illumination)?;
    gray_layer(&args.out_dir, format!("{name}_reflectance.pgm"), &d.reflectance)
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let mut cfg = args.tuning.resolve()?;
    if args.matched_nlf {
        cfg = matched_config(&cfg, args.noise_std);
    }
    let pattern = match args.pattern {
        PatternArg::Ramp => Pattern::Ramp,
        PatternArg::TwoBand => Pattern::TwoBand,
        PatternArg::CheckerInDark => Pattern::CheckerInDark,
    };
    let seeds: Vec<u64> = (args.first_seed..args.first_seed + args.seeds).collect();
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let spec = SyntheticSpec {
                pattern,
                noise_std: args.noise_std,
                seed,
                size: args.size,
            };
            evaluate(&spec, &cfg)
        })
        .collect::<Result<Vec<_>, _>>()?
        .concat();
    let csv = metrics_csv(&rows);
    match &args.output {
        Some(path) => fs::write(path, csv).map_err(|e| io_error(path, e)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Enhance(a) => run_enhance(a, Mode::Proposed),
        Command::Baseline(a) => run_enhance(a, Mode::AgcwdPlain),
        Command::Curve(a) => run_curve(a),
        Command::Decompose(a) => run_decompose(a),
        Command::Eval(a) => run_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(e, CliError::Batch(_)) {
                report_error(None, &e);
            }
            ExitCode::from(e.exit_code())
        }
    }
}
