//! Blocking-rate sweep harness: mask one held-out frame at a grid of
//! rates, fill it with every engine, score masked-only F1 and timing, and
//! emit plot-ready CSV tables.
//!
//! For a fixed (rate, seed) every method receives the identical mask; the
//! mask checksum is part of the results table so fairness can be audited
//! from the CSV alone. A failing cell is recorded and the sweep continues.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::dineof::DineofConfig;
use crate::error::{Error, Result};
use crate::eval::{confusion, f1_scores, timed_fill, FillMethod};
use crate::funksvd::{round_to_class, FunkConfig};
use crate::masking::{apply_mask, synthesize_cloud, CloudBank, MaskMatrix};
use crate::rasterstack::GridStack;

/// Sweep definition: which rates, methods and seeds to run, with the
/// per-method engine configurations and the held-out frame.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub rates: Vec<f64>,
    pub methods: Vec<BenchMethod>,
    pub seeds: Vec<u64>,
    pub dineof: DineofConfig,
    pub funk: FunkConfig,
    /// Index of the fully observed frame that gets masked and scored.
    pub truth_frame: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchMethod {
    Dineof,
    FunkSvd,
    Baseline,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Dineof => "dineof",
            BenchMethod::FunkSvd => "funk-svd",
            BenchMethod::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Result<BenchMethod> {
        match s {
            "dineof" => Ok(BenchMethod::Dineof),
            "funk-svd" => Ok(BenchMethod::FunkSvd),
            "baseline" => Ok(BenchMethod::Baseline),
            other => Err(Error::Usage(format!(
                "unknown method {other:?}; expected dineof, funk-svd or baseline"
            ))),
        }
    }
}

impl Default for BenchPlan {
    fn default() -> Self {
        BenchPlan {
            rates: (1..=10)
                .map(|i| (i as f64 * 0.05 * 1e9).round() / 1e9)
                .collect(),
            methods: vec![
                BenchMethod::Dineof,
                BenchMethod::FunkSvd,
                BenchMethod::Baseline,
            ],
            seeds: vec![1, 2, 3, 4, 5],
            dineof: DineofConfig::default(),
            funk: FunkConfig::default(),
            truth_frame: 0,
        }
    }
}

impl BenchPlan {
    pub fn validate(&self, stack: &GridStack) -> Result<()> {
        if self.rates.is_empty() {
            return Err(Error::Usage("plan needs at least one rate".into()));
        }
        for &rate in &self.rates {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(Error::Usage(format!(
                    "rates must lie in (0, 1], got {rate}"
                )));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("plan needs at least one method".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Usage("plan needs at least one seed".into()));
        }
        if self.truth_frame >= stack.frames() {
            return Err(Error::Usage(format!(
                "truth frame {} out of range (stack has {})",
                self.truth_frame,
                stack.frames()
            )));
        }
        for j in 0..stack.pixels() {
            if !stack.is_present(self.truth_frame, j) {
                return Err(Error::Usage(format!(
                    "truth frame {} is not fully observed (pixel {j} missing)",
                    self.truth_frame
                )));
            }
        }
        Ok(())
    }
}

/// One sweep cell. Metric fields are `None` when the cell failed.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub rate: f64,
    pub seed: u64,
    pub method: &'static str,
    pub mask_checksum: u64,
    pub macro_f1: Option<f64>,
    pub micro_f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub wall_time_s: Option<f64>,
    pub iterations: Option<usize>,
    /// "ok", or "failed: <reason>".
    pub status: String,
}

/// Run the full sweep. Cells are independent and execute in parallel; the
/// returned rows are assembled in (rate, seed, method) plan order
/// regardless of completion order.
pub fn run_bench(stack: &GridStack, plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    plan.validate(stack)?;
    let bank = CloudBank::empty();
    let mut pairs = Vec::with_capacity(plan.rates.len() * plan.seeds.len());
    for &rate in &plan.rates {
        for &seed in &plan.seeds {
            pairs.push((rate, seed));
        }
    }
    let groups: Vec<Result<Vec<BenchRow>>> = pairs
        .par_iter()
        .map(|&(rate, seed)| {
            let frame_mask = synthesize_cloud(stack.rows(), stack.cols(), rate, seed, &bank)?;
            let mask = MaskMatrix::for_frame(
                stack.frames(),
                stack.rows(),
                stack.cols(),
                plan.truth_frame,
                &frame_mask,
            )?;
            let masked = apply_mask(stack, &mask)?;
            let checksum = mask.checksum();
            Ok(plan
                .methods
                .iter()
                .map(|&method| run_cell(stack, &masked, &mask, checksum, rate, seed, method, plan))
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(pairs.len() * plan.methods.len());
    for group in groups {
        rows.extend(group?);
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    truth: &GridStack,
    masked: &GridStack,
    mask: &MaskMatrix,
    checksum: u64,
    rate: f64,
    seed: u64,
    method: BenchMethod,
    plan: &BenchPlan,
) -> BenchRow {
    let fill_method = match method {
        BenchMethod::Dineof => FillMethod::Dineof(plan.dineof.clone()),
        BenchMethod::FunkSvd => FillMethod::FunkSvd(plan.funk.clone()),
        BenchMethod::Baseline => FillMethod::Baseline,
    };
    let cell = (|| -> Result<BenchRow> {
        let outcome = timed_fill(&fill_method, masked, mask)?;
        let pred = round_to_class(&outcome.filled, truth.rows(), truth.cols())?;
        let scores = f1_scores(&confusion(&pred, truth, Some(mask))?)?;
        Ok(BenchRow {
            rate,
            seed,
            method: method.name(),
            mask_checksum: checksum,
            macro_f1: Some(scores.macro_f1),
            micro_f1: Some(scores.micro_f1),
            accuracy: Some(scores.accuracy),
            wall_time_s: Some(outcome.wall_time_s),
            iterations: Some(outcome.iterations),
            status: "ok".into(),
        })
    })();
    cell.unwrap_or_else(|err| BenchRow {
        rate,
        seed,
        method: method.name(),
        mask_checksum: checksum,
        macro_f1: None,
        micro_f1: None,
        accuracy: None,
        wall_time_s: None,
        iterations: None,
        status: format!("failed: {err}"),
    })
}

/// Per-(rate, method) aggregate over the seeds that succeeded.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub rate: f64,
    pub method: &'static str,
    /// Number of successful cells in the group.
    pub n: usize,
    pub macro_f1_mean: Option<f64>,
    pub macro_f1_std: Option<f64>,
    pub wall_time_s_mean: Option<f64>,
    pub wall_time_s_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSummary {
    pub rows: Vec<SummaryRow>,
}

impl BenchSummary {
    /// Plain-text table for terminal output.
    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>6}  {:<9} {:>3}  {:>12} {:>12}  {:>12} {:>12}",
            "rate", "method", "n", "macro_f1", "std", "wall_time_s", "std"
        );
        for row in &self.rows {
            let fmt = |v: Option<f64>| match v {
                Some(v) => format!("{v:.6}"),
                None => "-".into(),
            };
            let _ = writeln!(
                out,
                "{:>6.2}  {:<9} {:>3}  {:>12} {:>12}  {:>12} {:>12}",
                row.rate,
                row.method,
                row.n,
                fmt(row.macro_f1_mean),
                fmt(row.macro_f1_std),
                fmt(row.wall_time_s_mean),
                fmt(row.wall_time_s_std),
            );
        }
        out
    }
}

type RowGroup<'a> = (f64, &'static str, Vec<&'a BenchRow>);

/// Group rows by (rate, method) in first-seen order and aggregate.
pub fn summarize(rows: &[BenchRow]) -> BenchSummary {
    let mut groups: Vec<RowGroup> = Vec::new();
    for row in rows {
        match groups
            .iter_mut()
            .find(|(rate, method, _)| *rate == row.rate && *method == row.method)
        {
            Some((_, _, members)) => members.push(row),
            None => groups.push((row.rate, row.method, vec![row])),
        }
    }
    let rows = groups
        .into_iter()
        .map(|(rate, method, members)| {
            let ok: Vec<&&BenchRow> = members.iter().filter(|r| r.status == "ok").collect();
            let stats = |get: &dyn Fn(&BenchRow) -> Option<f64>| -> (Option<f64>, Option<f64>) {
                let values: Vec<f64> = ok.iter().filter_map(|r| get(r)).collect();
                if values.is_empty() {
                    return (None, None);
                }
                let n = values.len() as f64;
                let mean = values.iter().sum::<f64>() / n;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                (Some(mean), Some(var.sqrt()))
            };
            let (macro_mean, macro_std) = stats(&|r| r.macro_f1);
            let (time_mean, time_std) = stats(&|r| r.wall_time_s);
            SummaryRow {
                rate,
                method,
                n: ok.len(),
                macro_f1_mean: macro_mean,
                macro_f1_std: macro_std,
                wall_time_s_mean: time_mean,
                wall_time_s_std: time_std,
            }
        })
        .collect();
    BenchSummary { rows }
}

/// Path of the summary table written next to the long-format CSV.
pub fn summary_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    let ext = out
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_summary.{ext}"))
}

fn opt_float(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Write the long-format results CSV at `path` and the per-(rate, method)
/// summary CSV next to it. Byte-deterministic for identical results.
pub fn emit_report(rows: &[BenchRow], path: &Path) -> Result<BenchSummary> {
    if rows.is_empty() {
        return Err(Error::Usage("refusing to emit an empty results table".into()));
    }
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer
        .write_record([
            "rate",
            "seed",
            "method",
            "mask_checksum",
            "macro_f1",
            "micro_f1",
            "accuracy",
            "wall_time_s",
            "iterations",
            "status",
        ])
        .map_err(csv_err)?;
    for row in rows {
        writer
            .write_record([
                format!("{}", row.rate),
                format!("{}", row.seed),
                row.method.to_string(),
                format!("{:016x}", row.mask_checksum),
                opt_float(row.macro_f1),
                opt_float(row.micro_f1),
                opt_float(row.accuracy),
                opt_float(row.wall_time_s),
                row.iterations.map(|i| i.to_string()).unwrap_or_default(),
                row.status.clone(),
            ])
            .map_err(csv_err)?;
    }
    writer.flush()?;

    let summary = summarize(rows);
    let mut writer = csv::Writer::from_path(summary_path(path)).map_err(csv_err)?;
    writer
        .write_record([
            "rate",
            "method",
            "n",
            "macro_f1_mean",
            "macro_f1_std",
            "wall_time_s_mean",
            "wall_time_s_std",
        ])
        .map_err(csv_err)?;
    for row in &summary.rows {
        writer
            .write_record([
                format!("{}", row.rate),
                row.method.to_string(),
                row.n.to_string(),
                opt_float(row.macro_f1_mean),
                opt_float(row.macro_f1_std),
                opt_float(row.wall_time_s_mean),
                opt_float(row.wall_time_s_std),
            ])
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(summary)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Usage(format!("csv write failed: {e}"))
}
