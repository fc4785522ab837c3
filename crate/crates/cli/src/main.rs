//! `rdlab`: codec runs, RD sweeps, BD-rate and scaling-law reports.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 bad arguments or invalid data,
//! 3 codec failure (corrupt bitstream or malformed image).

mod exit;
mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rdlab_core::codec::{self, CodecConfig, EncodedImage, ImageBuffer};
use rdlab_core::metrics::{self, BdMethod, RdCurve};
use rdlab_core::scaling::{self, PowerLawFit, ScalePoint, TrainingCurve};
use rdlab_core::svg::{LogLogPlot, Series};

use exit::Usage;
use output::{write_atomic, Manifest};

#[derive(Parser)]
#[command(name = "rdlab", version, about = "GGM image codec, BD-rate and scaling-law toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PPM/PGM image into a .gglc bitstream.
    Encode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
        /// Quantizer step (>= 0.25).
        #[arg(long, default_value_t = 4.0)]
        delta: f64,
    },
    /// Decode a bitstream back to PPM/PGM.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encode every image of a directory at several quantizer steps and
    /// write the averaged RD curve as "bpp,psnr" CSV.
    RdSweep {
        dir: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        deltas: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// BD-rate (percent) of TEST against ANCHOR, both "bpp,psnr" CSV files.
    Bdrate {
        anchor: PathBuf,
        test: PathBuf,
        /// Piecewise cubic Hermite interpolation instead of the cubic fit.
        #[arg(long)]
        pchip: bool,
        /// Report BD-PSNR (dB) instead.
        #[arg(long)]
        psnr: bool,
    },
    /// Scaling-law fits, frontiers and forecasts.
    Scaling {
        #[command(subcommand)]
        command: ScalingCommand,
    },
}

#[derive(Args, Clone, Copy)]
struct CodecArgs {
    #[arg(long, default_value_t = rdlab_core::ggm::DEFAULT_BETA)]
    beta: f64,
    /// Code RGB images in BT.601 YCbCr.
    #[arg(long)]
    ycbcr: bool,
    /// Two-pass checkerboard coding with neighbour-predicted locations.
    #[arg(long)]
    context: bool,
    /// Neighbour-mean weight used by --context, in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
}

impl CodecArgs {
    fn config(&self, delta: f64) -> CodecConfig {
        CodecConfig {
            delta,
            beta: self.beta,
            color_transform: self.ycbcr,
            context_enabled: self.context,
            context_rho: self.rho,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Axis {
    /// Loss against model size (billions of parameters).
    Size,
    /// Loss against compute-optimal training compute (PFLOPs).
    Compute,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Size => "size",
            Axis::Compute => "compute",
        }
    }
}

#[derive(Subcommand)]
enum ScalingCommand {
    /// Fit a power law to an "x,loss" CSV or to a training log.
    Fit {
        input: PathBuf,
        /// Fit an irreducible loss floor as well.
        #[arg(long)]
        floor: bool,
        /// For training logs: which relation to fit.
        #[arg(long, value_enum, default_value_t = Axis::Size)]
        axis: Axis,
        /// Write the points and fit (.svg plot or .csv points).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute-optimal frontier of a training log, printed as CSV.
    Frontier {
        input: PathBuf,
        /// Also write the frontier (.csv) or a plot of all curves (.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forecast the loss of larger models.
    Forecast {
        /// Training log to fit; omitted means the bundled published constants.
        input: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_values_t = [2.0, 10.0])]
        targets: Vec<f64>,
        #[arg(long)]
        floor: bool,
        /// Use a given size law instead of fitting (requires --alpha).
        #[arg(long, requires = "alpha", conflicts_with = "input")]
        gamma: Option<f64>,
        #[arg(long, requires = "gamma")]
        alpha: Option<f64>,
        /// Write the full report (.json) or a plot (.svg).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}

/// Applies `RDLAB_THREADS` (0 or unset = one thread per core).
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("RDLAB_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| Usage(format!("RDLAB_THREADS must be an integer, got '{v}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Encode { input, output, codec, delta } => encode(&input, &output, codec.config(delta)),
        Command::Decode { input, output } => decode(&input, &output),
        Command::RdSweep { dir, deltas, out, codec } => rd_sweep(&dir, &deltas, &out, codec),
        Command::Bdrate { anchor, test, pchip, psnr } => bdrate(&anchor, &test, pchip, psnr),
        Command::Scaling { command } => match command {
            ScalingCommand::Fit { input, floor, axis, out } => scaling_fit(&input, floor, axis, out.as_deref()),
            ScalingCommand::Frontier { input, out } => scaling_frontier(&input, out.as_deref()),
            ScalingCommand::Forecast { input, targets, floor, gamma, alpha, out } => {
                let given = gamma.zip(alpha).map(|(g, a)| PowerLawFit::from_constants(g, a));
                scaling_forecast(input.as_deref(), &targets, floor, given, out.as_deref())
            }
        },
    }
}

fn fmt6(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.6}")
    }
}

fn encode(input: &Path, output: &Path, cfg: CodecConfig) -> Result<()> {
    cfg.validate()?;
    let img = codec::load_image(input).with_context(|| format!("reading {}", input.display()))?;
    let (enc, point) = codec::encode_image(&img, &cfg.for_channels(img.channels()))?;
    let bytes = enc.to_bytes();
    write_atomic(output, &bytes)?;
    Manifest::new("encode", &[input], json!(enc.header.config)).write_beside(output)?;
    println!("bpp={} psnr={} bytes={}", fmt6(point.bpp), fmt6(point.psnr), bytes.len());
    Ok(())
}

fn decode(input: &Path, output: &Path) -> Result<()> {
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let enc = EncodedImage::from_bytes(&bytes)?;
    let img = codec::decode_image(&enc)?;
    write_atomic(output, &codec::image::encode_pnm(&img))?;
    Manifest::new("decode", &[input], json!(enc.header.config)).write_beside(output)?;
    Ok(())
}

fn is_image(path: &Path) -> bool {
    let exts: &[&str] = if cfg!(feature = "png") { &["ppm", "pgm", "pnm", "png"] } else { &["ppm", "pgm", "pnm"] };
    path.is_file() && path.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e.to_ascii_lowercase().as_str()))
}

fn rd_sweep(dir: &Path, deltas: &[f64], out: &Path, args: CodecArgs) -> Result<()> {
    if deltas.len() < 2 {
        bail!(Usage(format!("--deltas needs at least two values, got {}", deltas.len())));
    }
    for &d in deltas {
        args.config(d).validate()?;
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| is_image(p));
    paths.sort();
    if paths.is_empty() {
        bail!(Usage(format!("no PPM/PGM images in {}", dir.display())));
    }
    let images: Vec<ImageBuffer> = paths
        .iter()
        .map(|p| codec::load_image(p).with_context(|| format!("reading {}", p.display())))
        .collect::<Result<_>>()?;
    let mut curve = codec::rd_sweep(&images, deltas, &args.config(deltas[0]))?;
    curve.label = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut csv = Vec::new();
    metrics::write_rd_csv(&curve, &mut csv)?;
    write_atomic(out, &csv)?;
    let inputs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
    Manifest::new("rd-sweep", &inputs, json!({ "deltas": deltas, "codec": args.config(deltas[0]) })).write_beside(out)?;
    Ok(())
}

fn read_curve(path: &Path) -> Result<RdCurve> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    metrics::read_rd_csv(f, label).with_context(|| format!("parsing {}", path.display()))
}

fn bdrate(anchor: &Path, test: &Path, pchip: bool, psnr: bool) -> Result<()> {
    let (a, t) = (read_curve(anchor)?, read_curve(test)?);
    let method = if pchip { BdMethod::Pchip } else { BdMethod::Cubic };
    let v = if psnr { metrics::bd_psnr_with(&a, &t, method)? } else { metrics::bd_rate_with(&a, &t, method)? };
    println!("{}", fmt6(v));
    Ok(())
}

/// Scale points, or training curves, from a CSV file.
enum ScalingInput {
    Points(Vec<ScalePoint>),
    Log(Vec<TrainingCurve>),
}

fn read_scaling_input(path: &Path) -> Result<ScalingInput> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let header = text.lines().next().unwrap_or("").replace(' ', "");
    let parsed = if header == "x,loss" {
        scaling::read_points(text.as_bytes()).map(ScalingInput::Points)
    } else {
        scaling::read_training_log(text.as_bytes()).map(ScalingInput::Log)
    };
    parsed.with_context(|| format!("parsing {}", path.display()))
}

fn read_log(path: &Path) -> Result<Vec<TrainingCurve>> {
    match read_scaling_input(path)? {
        ScalingInput::Log(c) => Ok(c),
        ScalingInput::Points(_) => bail!(Usage(format!("{} is a point list, a training log is needed", path.display()))),
    }
}

fn points_csv(header: &str, pts: &[ScalePoint]) -> String {
    let mut s = format!("{header}\n");
    for p in pts {
        s.push_str(&format!("{},{}\n", fmt6(p.x), fmt6(p.loss)));
    }
    s
}

fn fit_line(fit: &PowerLawFit) -> String {
    let mut s = format!("gamma={} alpha={} r={}", fmt6(fit.gamma), fmt6(fit.alpha_exp), fmt6(fit.pearson_r));
    if let Some(f) = fit.floor {
        s.push_str(&format!(" floor={}", fmt6(f)));
    }
    s.push_str(&format!(" n={}", fit.n_points));
    s
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn curve_series(curves: &[TrainingCurve]) -> Vec<Series> {
    curves
        .iter()
        .map(|c| Series {
            name: c.model_id.clone(),
            points: c.samples.iter().map(|&(x, l)| ScalePoint::new(x, l)).collect(),
            highlight: false,
            connect: true,
        })
        .collect()
}

fn scaling_fit(input: &Path, floor: bool, axis: Axis, out: Option<&Path>) -> Result<()> {
    let (points, curves) = match read_scaling_input(input)? {
        ScalingInput::Points(p) => (p, Vec::new()),
        ScalingInput::Log(c) => match axis {
            Axis::Size => (scaling::model_points(&c), Vec::new()),
            Axis::Compute => (scaling::pareto_frontier(&c)?, c),
        },
    };
    let fit = if floor { scaling::fit_power_law_floor(&points)? } else { scaling::fit_power_law(&points)? };
    println!("{}", fit_line(&fit));
    if let Some(out) = out {
        let bytes = if has_ext(out, "svg") {
            let (x_label, name) = match axis {
                Axis::Size => ("N (billions of parameters)", "models"),
                Axis::Compute => ("C (PFLOPs)", "frontier"),
            };
            let mut series = curve_series(&curves);
            series.push(Series { name: name.into(), points: points.clone(), highlight: true, connect: false });
            LogLogPlot {
                title: "Power-law fit".into(),
                x_label: x_label.into(),
                y_label: "loss".into(),
                series,
                fits: vec![("fit".into(), fit)],
            }
            .render()
        } else {
            points_csv("x,loss", &points)
        };
        write_atomic(out, bytes.as_bytes())?;
        Manifest::new("scaling fit", &[input], json!({ "floor": floor, "axis": axis.name(), "fit": fit }))
            .write_beside(out)?;
    }
    Ok(())
}

fn scaling_frontier(input: &Path, out: Option<&Path>) -> Result<()> {
    let curves = read_log(input)?;
    let frontier = scaling::pareto_frontier(&curves)?;
    let csv = points_csv("compute_pflops,loss", &frontier);
    print!("{csv}");
    if let Some(out) = out {
        let bytes = if has_ext(out, "svg") {
            let mut series = curve_series(&curves);
            series.push(Series { name: "frontier".into(), points: frontier.clone(), highlight: true, connect: true });
            LogLogPlot {
                title: "Compute-optimal frontier".into(),
                x_label: "C (PFLOPs)".into(),
                y_label: "loss".into(),
                series,
                fits: Vec::new(),
            }
            .render()
        } else {
            csv
        };
        write_atomic(out, bytes.as_bytes())?;
        Manifest::new("scaling frontier", &[input], json!({ "points": frontier.len() })).write_beside(out)?;
    }
    Ok(())
}

fn scaling_forecast(
    input: Option<&Path>,
    targets: &[f64],
    floor: bool,
    given: Option<PowerLawFit>,
    out: Option<&Path>,
) -> Result<()> {
    if let Some(&t) = targets.iter().find(|t| !(**t > 0.0)) {
        bail!(Usage(format!("targets must be positive, got {t}")));
    }
    let report = match (input, given) {
        (Some(path), _) => {
            let curves = read_log(path)?;
            scaling::forecast_report(&scaling::model_points(&curves), &curves, targets, floor)?
        }
        (None, Some(law)) => scaling::ForecastReport::from_laws(law, None, targets)?,
        (None, None) => {
            let r = scaling::reference_data()?;
            scaling::ForecastReport::from_laws(r.model_size_law.law(), Some(r.compute_law.law()), targets)?
        }
    };
    println!("size law: {}", fit_line(&report.size_law));
    if let Some(c) = &report.compute_law {
        println!("compute law: {}", fit_line(c));
    }
    for f in &report.size_forecasts {
        println!("N={} loss={}", fmt6(f.x), fmt6(f.loss));
    }
    if let Some(out) = out {
        let bytes = if has_ext(out, "svg") {
            let forecasts = report.size_forecasts.iter().map(|f| ScalePoint::new(f.x, f.loss)).collect();
            LogLogPlot {
                title: "Loss forecast".into(),
                x_label: "N (billions of parameters)".into(),
                y_label: "loss".into(),
                series: vec![
                    Series { name: "models".into(), points: report.model_points.clone(), highlight: false, connect: false },
                    Series { name: "forecast".into(), points: forecasts, highlight: true, connect: false },
                ],
                fits: vec![("size law".into(), report.size_law)],
            }
            .render()
        } else {
            serde_json::to_string_pretty(&report)? + "\n"
        };
        write_atomic(out, bytes.as_bytes())?;
        let inputs: Vec<&Path> = input.into_iter().collect();
        Manifest::new("scaling forecast", &inputs, json!({ "targets": targets, "floor": floor })).write_beside(out)?;
    }
    Ok(())
}
