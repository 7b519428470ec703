//! `coastfill` — fill cloud gaps in categorical raster stacks and
//! benchmark the engines.
//!
//! Subcommands cover the whole experiment loop: generate a synthetic
//! coastal stack (`synth`), paste a cloud mask onto one frame (`mask`),
//! fill the gaps with an engine (`fill`), score a filled stack against
//! truth (`eval`), and sweep blocking rates across engines (`bench`).

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use coastfill_core::bench::{emit_report, run_bench, BenchMethod, BenchPlan};
use coastfill_core::dineof::{
    error_propagation_report, run_dineof, DineofConfig, DineofTrace, InitialFill,
};
use coastfill_core::eval::{confusion, EvalReport, Scope};
use coastfill_core::funksvd::{round_to_class, run_funk_svd, FitReport, FunkConfig};
use coastfill_core::masking::{
    apply_mask, blocking_rate, synthesize_cloud, CloudBank, MaskMatrix,
};
use coastfill_core::rasterstack::{read_stack, write_stack, ClassLabel, GridStack};
use coastfill_core::synth::{generate_landscape, SynthConfig};

#[derive(Parser)]
#[command(
    name = "coastfill",
    version,
    about = "Cloud-gap filling for categorical coastal raster stacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic coastal landscape stack
    Synth(SynthArgs),
    /// Paste a synthetic cloud mask onto one frame of a stack
    Mask(MaskArgs),
    /// Fill the missing entries of a stack with one engine
    Fill(Box<FillArgs>),
    /// Score a filled stack against ground truth
    Eval(EvalArgs),
    /// Sweep blocking rates over engines and emit a results table
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    frames: usize,
    #[arg(long, default_value_t = 64)]
    rows: usize,
    #[arg(long, default_value_t = 64)]
    cols: usize,
    /// Target time-averaged water fraction
    #[arg(long, default_value_t = 0.7)]
    water: f64,
    #[arg(long, default_value_t = 1.0)]
    seasonal_amplitude: f64,
    #[arg(long, default_value_t = 2)]
    smoothness: usize,
    #[arg(long, default_value_t = 0.15)]
    wetland_band: f64,
    /// Output stack (GSF)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    /// Input stack (GSF)
    #[arg(long = "in")]
    input: PathBuf,
    /// Frame index to mask
    #[arg(long)]
    frame: usize,
    /// Target blocking rate on that frame
    #[arg(long)]
    rate: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Masked stack output (GSF)
    #[arg(long)]
    out: PathBuf,
    /// Mask output as a 0/1 stack (GSF)
    #[arg(long)]
    mask_out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dineof,
    #[value(name = "funk-svd")]
    FunkSvd,
    Baseline,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Zero,
    Mean,
}

impl From<InitArg> for InitialFill {
    fn from(value: InitArg) -> Self {
        match value {
            InitArg::Zero => InitialFill::Zero,
            InitArg::Mean => InitialFill::ObservedMean,
        }
    }
}

#[derive(Args)]
struct FillArgs {
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Masked input stack (GSF)
    #[arg(long = "in")]
    input: PathBuf,
    /// Mask marking the entries to fill (0/1 GSF stack)
    #[arg(long)]
    mask: PathBuf,
    /// Rounded categorical output (GSF)
    #[arg(long)]
    out: PathBuf,
    /// Optional pre-rounding continuous output (GSF)
    #[arg(long)]
    raw_out: Option<PathBuf>,

    /// Truncation rank (dineof) or latent dimension (funk-svd)
    #[arg(long, default_value_t = 10)]
    rank: usize,

    // dineof controls
    /// Relative-change convergence threshold
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Start value for the missing entries
    #[arg(long, value_enum, default_value_t = InitArg::Zero)]
    init: InitArg,
    /// Ground truth stack; enables the per-iteration error column in --trace
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Per-iteration trace output (CSV)
    #[arg(long)]
    trace: Option<PathBuf>,

    // funk-svd controls
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    /// Per-epoch objective output (CSV)
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction stack (GSF)
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth stack (GSF)
    #[arg(long)]
    truth: PathBuf,
    /// Mask of the scored (previously missing) entries; required unless
    /// --full-frame is given
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Score every pixel instead of the masked ones only
    #[arg(long)]
    full_frame: bool,
    /// Report output (CSV)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Input stack (GSF); the truth frame must be fully observed
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    truth_frame: usize,
    /// Rate grid as start:end:step
    #[arg(long, default_value = "0.05:0.5:0.05")]
    rates: String,
    /// Comma-separated subset of dineof,funk-svd,baseline
    #[arg(long, default_value = "dineof,funk-svd,baseline")]
    methods: String,
    /// Comma-separated mask seeds
    #[arg(long, default_value = "1,2,3,4,5")]
    seeds: String,
    /// Results table output (CSV); a *_summary.csv lands next to it
    #[arg(long)]
    out: PathBuf,

    #[arg(long, default_value_t = 10)]
    dineof_rank: usize,
    #[arg(long, default_value_t = 1e-5)]
    dineof_tol: f64,
    #[arg(long, default_value_t = 500)]
    dineof_max_iter: usize,
    #[arg(long, value_enum, default_value_t = InitArg::Zero)]
    dineof_init: InitArg,

    #[arg(long, default_value_t = 10)]
    funk_rank: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    /// Seed of the funk-svd factor initialization
    #[arg(long, default_value_t = 42)]
    funk_seed: u64,
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Synth(args) => cmd_synth(args),
        Command::Mask(args) => cmd_mask(args),
        Command::Fill(args) => cmd_fill(*args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        seed: args.seed,
        frames: args.frames,
        rows: args.rows,
        cols: args.cols,
        water_target: args.water,
        seasonal_amplitude: args.seasonal_amplitude,
        smoothness: args.smoothness,
        wetland_band: args.wetland_band,
        period_frames: None,
    };
    let stack = generate_landscape(&config)?;
    write_stack(&stack, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!(
        "wrote {} frames of {}x{} to {}",
        stack.frames(),
        stack.rows(),
        stack.cols(),
        args.out.display()
    );
    Ok(())
}

fn cmd_mask(args: MaskArgs) -> Result<()> {
    let stack = read_stack(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let frame_mask = synthesize_cloud(
        stack.rows(),
        stack.cols(),
        args.rate,
        args.seed,
        &CloudBank::empty(),
    )?;
    let mask = MaskMatrix::for_frame(
        stack.frames(),
        stack.rows(),
        stack.cols(),
        args.frame,
        &frame_mask,
    )?;
    let masked = apply_mask(&stack, &mask)?;
    write_stack(&masked, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    write_stack(&mask.to_stack(), &args.mask_out)
        .with_context(|| format!("writing {}", args.mask_out.display()))?;
    eprintln!(
        "masked frame {} at rate {:.4} (checksum {:016x})",
        args.frame,
        blocking_rate(&mask) * stack.frames() as f64,
        mask.checksum()
    );
    Ok(())
}

fn cmd_fill(args: FillArgs) -> Result<()> {
    let stack = read_stack(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mask_stack = read_stack(&args.mask)
        .with_context(|| format!("reading {}", args.mask.display()))?;
    let mask = MaskMatrix::from_stack(&mask_stack)?;

    let filled = match args.method {
        MethodArg::Dineof => {
            let config = DineofConfig {
                rank: args.rank,
                tol: args.tol,
                max_iter: args.max_iter,
                init: args.init.into(),
            };
            let truth = args
                .truth
                .as_ref()
                .map(|p| read_stack(p).with_context(|| format!("reading {}", p.display())))
                .transpose()?;
            let (filled, trace) = run_dineof(&stack, &mask, &config, truth.as_ref())?;
            if !trace.converged {
                eprintln!(
                    "warning: stopped at max_iter={} without meeting tol={}",
                    args.max_iter, args.tol
                );
            }
            if let Some(path) = &args.trace {
                write_trace_csv(&trace, path)?;
            }
            if truth.is_some() {
                let report = error_propagation_report(&trace)?;
                eprintln!(
                    "error propagation: {} iterations, max one-step identity deviation {:.3e}",
                    report.rows.len(),
                    report.max_recurrence_dev
                );
            }
            filled
        }
        MethodArg::FunkSvd => {
            let config = FunkConfig {
                rank: args.rank,
                lambda: args.lambda,
                learning_rate: args.lr,
                epochs: args.epochs,
                seed: args.seed,
                init_scale: args.init_scale,
            };
            let (filled, report) = run_funk_svd(&stack, &mask, &config)?;
            if let Some(path) = &args.report {
                write_fit_csv(&report, path)?;
            }
            filled
        }
        MethodArg::Baseline => {
            let out = coastfill_core::eval::baseline_mode_fill(&stack, &mask)?;
            let n = out.pixels();
            ndarray::Array2::from_shape_fn((out.frames(), n), |(i, j)| {
                out.get(i, j).expect("baseline output is fully observed")
            })
        }
    };

    if let Some(path) = &args.raw_out {
        let raw = GridStack::fully_observed(stack.rows(), stack.cols(), filled.clone())?;
        write_stack(&raw, path).with_context(|| format!("writing {}", path.display()))?;
    }
    let rounded = round_to_class(&filled, stack.rows(), stack.cols())?;
    write_stack(&rounded, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn write_trace_csv(trace: &DineofTrace, path: &PathBuf) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["iter", "rel_change", "remainder_missing_fro", "error_missing_fro"])?;
    for record in &trace.records {
        writer.write_record([
            record.iteration.to_string(),
            format!("{:e}", record.rel_change),
            format!("{:e}", record.remainder_missing_fro),
            record
                .error_missing_fro
                .map(|v| format!("{v:e}"))
                .unwrap_or_else(|| "NA".into()),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn write_fit_csv(report: &FitReport, path: &PathBuf) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_record(["epoch", "objective"])?;
    for (i, objective) in report.objectives.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), format!("{objective:e}")])?;
    }
    writer.flush()?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let pred = read_stack(&args.pred)
        .with_context(|| format!("reading {}", args.pred.display()))?;
    let truth = read_stack(&args.truth)
        .with_context(|| format!("reading {}", args.truth.display()))?;
    let mask = args
        .mask
        .as_ref()
        .map(|p| -> Result<MaskMatrix> {
            let stack = read_stack(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(MaskMatrix::from_stack(&stack)?)
        })
        .transpose()?;

    let (scope, scoring_mask) = if args.full_frame {
        (Scope::FullFrame, None)
    } else {
        match &mask {
            Some(m) => (Scope::MaskedOnly, Some(m)),
            None => bail!("masked-only scoring needs --mask (or pass --full-frame)"),
        }
    };
    let counts = confusion(&pred, &truth, scoring_mask)?;
    let report = EvalReport::new(counts, scope, None, None)?;
    write_eval_csv(&report, &args.out)?;
    eprintln!(
        "scope {}: macro F1 {:.6}, accuracy {:.6}",
        report.scope.name(),
        report.scores.macro_f1,
        report.scores.accuracy
    );
    Ok(())
}

fn write_eval_csv(report: &EvalReport, path: &PathBuf) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("writing {}", path.display()))?;
    writer.write_record([
        "scope",
        "class",
        "precision",
        "recall",
        "f1",
        "macro_f1",
        "micro_f1",
        "accuracy",
        "wall_time_s",
        "iterations",
    ])?;
    let na = "NA".to_string();
    for label in ClassLabel::ALL {
        let c = label.index();
        writer.write_record([
            report.scope.name().to_string(),
            label.name().to_string(),
            format!("{:.6}", report.scores.precision[c]),
            format!("{:.6}", report.scores.recall[c]),
            format!("{:.6}", report.scores.per_class_f1[c]),
            format!("{:.6}", report.scores.macro_f1),
            format!("{:.6}", report.scores.micro_f1),
            format!("{:.6}", report.scores.accuracy),
            report
                .wall_time_s
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| na.clone()),
            report
                .iterations
                .map(|v| v.to_string())
                .unwrap_or_else(|| na.clone()),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

fn parse_rates(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let rates = match parts.as_slice() {
        [single] => vec![single
            .parse::<f64>()
            .with_context(|| format!("bad rate {single:?}"))?],
        [start, end, step] => {
            let start: f64 = start.parse().with_context(|| format!("bad rate {start:?}"))?;
            let end: f64 = end.parse().with_context(|| format!("bad rate {end:?}"))?;
            let step: f64 = step.parse().with_context(|| format!("bad step {step:?}"))?;
            if step <= 0.0 || end < start {
                bail!("rate range must satisfy start <= end with a positive step");
            }
            let mut rates = Vec::new();
            let mut i = 0usize;
            loop {
                let rate = start + step * i as f64;
                if rate > end + 1e-12 {
                    break;
                }
                rates.push((rate * 1e9).round() / 1e9);
                i += 1;
            }
            rates
        }
        _ => bail!("rates must be a single value or start:end:step"),
    };
    Ok(rates)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let stack = read_stack(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let methods = args
        .methods
        .split(',')
        .map(|s| Ok(BenchMethod::parse(s.trim())?))
        .collect::<Result<Vec<_>>>()?;
    let seeds = args
        .seeds
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .with_context(|| format!("bad seed {s:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = BenchPlan {
        rates: parse_rates(&args.rates)?,
        methods,
        seeds,
        dineof: DineofConfig {
            rank: args.dineof_rank,
            tol: args.dineof_tol,
            max_iter: args.dineof_max_iter,
            init: args.dineof_init.into(),
        },
        funk: FunkConfig {
            rank: args.funk_rank,
            lambda: args.lambda,
            learning_rate: args.lr,
            epochs: args.epochs,
            seed: args.funk_seed,
            init_scale: args.init_scale,
        },
        truth_frame: args.truth_frame,
    };
    let rows = run_bench(&stack, &plan)?;
    let summary = emit_report(&rows, &args.out)?;
    eprint!("{}", summary.to_table_string());
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}
