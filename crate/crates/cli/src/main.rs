// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use samecp_core::io::{read_series, segment_table};
use samecp_core::simulation::{GridOptions, Method, NoiseKind, SimSpec, DEFAULT_MASTER_SEED};
use samecp_core::{
    binary_segmentation, detect, folded_quantile, pelt, run_grid, PenaltySpec, SameConfig,
    Segmentation, Series,
};

const THREADS_ENV: &str = "SAMECP_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "samecp",
    version,
    about = "Screening-and-merging change-point segmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Segment a series file and write the segment table.
    Segment(SegmentArgs),
    /// Run the simulation benchmark grid.
    Bench(BenchArgs),
    /// Print the screening threshold for a given level.
    Quantile(QuantileArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodArg {
    Same,
    Binseg,
    Pelt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(clap::Args, Debug)]
struct SegmentArgs {
    /// Input file: one value per line, or `position,value` rows.
    #[arg(long)]
    input: PathBuf,
    /// Screening level (same) or split-test level (binseg).
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    /// Comma-separated screening bandwidths (same only).
    #[arg(long, value_delimiter = ',')]
    bandwidths: Option<Vec<usize>>,
    /// Minimum segment length.
    #[arg(long, default_value_t = 20)]
    min_seg: usize,
    /// Merge-test level (same only).
    #[arg(long)]
    alpha_merge: Option<f64>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Tsv)]
    format: Format,
    #[arg(long, value_enum, default_value_t = MethodArg::Same)]
    method: MethodArg,
    /// `bic`, `aic` or a numeric penalty (pelt only).
    #[arg(long)]
    penalty: Option<String>,
}

#[derive(clap::Args, Debug)]
struct BenchArgs {
    /// `all`, or `;`-separated scenarios such as `m=2,l=25,s=1;m=4,l=50,s=1.5`.
    #[arg(long, default_value = "all")]
    scenarios: String,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    /// Comma-separated methods.
    #[arg(long, value_delimiter = ',', default_value = "same,binseg,pelt")]
    methods: Vec<String>,
    #[arg(long, default_value_t = DEFAULT_MASTER_SEED)]
    seed: u64,
    /// CSV report path.
    #[arg(long)]
    out: PathBuf,
    /// Sequence length of each simulated series.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Values resampled outside altered blocks; enables pool noise.
    #[arg(long, requires = "altered_pool")]
    neutral_pool: Option<PathBuf>,
    /// Values resampled inside altered blocks.
    #[arg(long, requires = "neutral_pool")]
    altered_pool: Option<PathBuf>,
    /// Penalty for pelt; defaults to bic for gaussian noise, aic for pool noise.
    #[arg(long)]
    penalty: Option<String>,
}

#[derive(clap::Args, Debug)]
struct QuantileArgs {
    /// Upper-tail level in (0, 1].
    #[arg(long)]
    alpha: f64,
}

fn parse_penalty(text: &str) -> Result<PenaltySpec> {
    match text.trim().to_ascii_lowercase().as_str() {
        "bic" => Ok(PenaltySpec::bic()),
        "aic" => Ok(PenaltySpec::aic()),
        other => {
            let value: f64 = other
                .parse()
                .with_context(|| format!("penalty must be bic, aic or a number, got '{text}'"))?;
            if !(value >= 0.0 && value.is_finite()) {
                bail!("numeric penalty must be finite and non-negative, got {value}");
            }
            Ok(PenaltySpec::manual(value))
        }
    }
}

#[derive(Serialize)]
struct JsonSegment {
    start: usize,
    end: usize,
    length: usize,
    mean: f64,
}

#[derive(Serialize)]
struct JsonConfig {
    alpha: f64,
    min_seg: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_merge: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    penalty: Option<PenaltySpec>,
}

#[derive(Serialize)]
struct JsonMetadata {
    n: usize,
    method: MethodArg,
    version: &'static str,
    config: JsonConfig,
}

#[derive(Serialize)]
struct JsonOutput {
    metadata: JsonMetadata,
    change_points: Vec<usize>,
    segments: Vec<JsonSegment>,
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    // flag combinations first, before touching the input
    if args.penalty.is_some() && args.method != MethodArg::Pelt {
        bail!("--penalty only applies to --method pelt");
    }
    if args.method != MethodArg::Same && (args.bandwidths.is_some() || args.alpha_merge.is_some()) {
        bail!("--bandwidths and --alpha-merge only apply to --method same");
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must lie in (0, 1), got {}", args.alpha);
    }
    let same_config = SameConfig {
        bandwidths: args
            .bandwidths
            .clone()
            .unwrap_or_else(|| SameConfig::default().bandwidths),
        alpha_screen: args.alpha,
        k_prime: args.min_seg,
        alpha_merge: args.alpha_merge.unwrap_or(0.01),
    };
    let penalty = match &args.penalty {
        Some(p) => parse_penalty(p)?,
        None => PenaltySpec::bic(),
    }
    .with_min_seg(args.min_seg);
    if args.method == MethodArg::Same {
        same_config.validate()?;
    }

    let series: Series = read_series(&args.input)?;
    let change_points = match args.method {
        MethodArg::Same => detect(&series, &same_config)?,
        MethodArg::Binseg => binary_segmentation(&series, args.alpha, args.min_seg)?,
        MethodArg::Pelt => pelt(&series, &penalty)?,
    };
    let segmentation = Segmentation::from_change_points(&series, change_points);

    let text = match args.format {
        Format::Tsv => segment_table(&segmentation),
        Format::Json => {
            let config = match args.method {
                MethodArg::Same => JsonConfig {
                    alpha: args.alpha,
                    min_seg: args.min_seg,
                    bandwidths: Some(same_config.bandwidths.clone()),
                    alpha_merge: Some(same_config.alpha_merge),
                    penalty: None,
                },
                MethodArg::Binseg => JsonConfig {
                    alpha: args.alpha,
                    min_seg: args.min_seg,
                    bandwidths: None,
                    alpha_merge: None,
                    penalty: None,
                },
                MethodArg::Pelt => JsonConfig {
                    alpha: args.alpha,
                    min_seg: args.min_seg,
                    bandwidths: None,
                    alpha_merge: None,
                    penalty: Some(penalty),
                },
            };
            let doc = JsonOutput {
                metadata: JsonMetadata {
                    n: series.len(),
                    method: args.method,
                    version: env!("CARGO_PKG_VERSION"),
                    config,
                },
                change_points: segmentation.change_points().to_vec(),
                segments: segmentation
                    .segments
                    .iter()
                    .map(|s| JsonSegment {
                        start: s.start,
                        end: s.end,
                        length: s.length,
                        mean: s.mean,
                    })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc)?;
            text.push('\n');
            text
        }
    };
    write_output(args.output.as_ref(), &text)
}

/// Parses `m=2,l=25,s=1`.
fn parse_scenario(text: &str, n: usize) -> Result<SimSpec> {
    let (mut m, mut l, mut s) = (None, None, None);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .with_context(|| format!("scenario field '{part}' is not key=value"))?;
        match key.trim() {
            "m" => {
                m = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad m in '{text}'"))?,
                )
            }
            "l" => {
                l = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad l in '{text}'"))?,
                )
            }
            "s" => {
                s = Some(
                    value
                        .trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad s in '{text}'"))?,
                )
            }
            other => bail!("unknown scenario field '{other}' (expected m, l, s)"),
        }
    }
    let (Some(m), Some(l), Some(s)) = (m, l, s) else {
        bail!("scenario '{text}' must set m, l and s");
    };
    let spec = SimSpec {
        n,
        ..SimSpec::gaussian(m, l, s)
    };
    spec.validate()?;
    Ok(spec)
}

fn thread_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize =
                v.trim().parse().ok().filter(|&t| t > 0).with_context(|| {
                    format!("{THREADS_ENV} must be a positive integer, got '{v}'")
                })?;
            Ok(Some(threads))
        }
        Err(_) => Ok(None),
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut methods = args
        .methods
        .iter()
        .map(|name| Method::from_name(name))
        .collect::<Result<Vec<_>, _>>()?;
    if args.replicates == 0 {
        bail!("--replicates must be at least 1");
    }
    let mut scenarios = if args.scenarios.trim().eq_ignore_ascii_case("all") {
        SimSpec::standard_grid()
            .into_iter()
            .map(|spec| SimSpec { n: args.n, ..spec })
            .collect()
    } else {
        args.scenarios
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_scenario(s, args.n))
            .collect::<Result<Vec<_>>>()?
    };
    let pools = match (&args.neutral_pool, &args.altered_pool) {
        (Some(neutral), Some(altered)) => Some((read_series(neutral)?, read_series(altered)?)),
        _ => None,
    };
    let penalty = match (&args.penalty, pools.is_some()) {
        (Some(p), _) => parse_penalty(p)?,
        (None, true) => PenaltySpec::aic(),
        (None, false) => PenaltySpec::bic(),
    };
    for method in &mut methods {
        if let Method::Pelt(spec) = method {
            *spec = penalty;
        }
    }
    if pools.is_some() {
        for spec in &mut scenarios {
            spec.noise = NoiseKind::Pool;
        }
    }
    let options = GridOptions {
        max_threads: thread_cap()?,
        pools,
    };
    let report = run_grid(&methods, &scenarios, args.replicates, args.seed, &options)?;
    let file = fs::File::create(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    report.write_csv(file)?;
    print!("{}", report.summary());
    Ok(())
}

fn cmd_quantile(args: QuantileArgs) -> Result<()> {
    let delta = folded_quantile(args.alpha)?;
    println!("{delta:.10}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => cmd_segment(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Quantile(args) => cmd_quantile(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
