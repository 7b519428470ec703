//! Scoring of filled stacks against ground truth (confusion matrix,
//! per-class and macro F1, accuracy), wall-clock timing of engine runs,
//! and a per-pixel temporal-mode baseline.

use std::time::Instant;

use ndarray::Array2;

use crate::dineof::{run_dineof, DineofConfig};
use crate::error::{Error, Result};
use crate::funksvd::{run_funk_svd, FunkConfig};
use crate::masking::{mask_from_stack, MaskMatrix};
use crate::rasterstack::{ClassLabel, GridStack};

/// 3×3 confusion counts; rows index the truth class, columns the
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion(pub [[u64; 3]; 3]);

impl Confusion {
    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn diagonal_sum(&self) -> u64 {
        (0..3).map(|c| self.0[c][c]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.0[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        (0..3).map(|r| self.0[r][class]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.diagonal_sum() as f64 / self.total() as f64
    }
}

/// Which pixels a score covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Only pixels selected by a mask (the previously missing ones).
    MaskedOnly,
    /// Every pixel with truth data.
    FullFrame,
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::MaskedOnly => "masked-only",
            Scope::FullFrame => "full-frame",
        }
    }
}

/// Tally prediction against truth over the scored pixels.
///
/// With a mask, only masked entries are scored; otherwise every entry.
/// Entries where the truth itself is missing are skipped. A scored entry
/// must be present and categorical on both sides.
pub fn confusion(
    pred: &GridStack,
    truth: &GridStack,
    mask: Option<&MaskMatrix>,
) -> Result<Confusion> {
    if pred.frames() != truth.frames() || pred.pixels() != truth.pixels() {
        return Err(Error::shape(
            format!("stack of {}x{}", truth.frames(), truth.pixels()),
            format!("stack of {}x{}", pred.frames(), pred.pixels()),
        ));
    }
    if let Some(m) = mask {
        if m.frames() != truth.frames() || m.pixels() != truth.pixels() {
            return Err(Error::shape(
                format!("mask of {}x{}", truth.frames(), truth.pixels()),
                format!("mask of {}x{}", m.frames(), m.pixels()),
            ));
        }
    }
    let mut counts = Confusion::default();
    for i in 0..truth.frames() {
        for j in 0..truth.pixels() {
            if let Some(m) = mask {
                if !m.is_masked(i, j) {
                    continue;
                }
            }
            let Some(t) = truth.get(i, j) else { continue };
            let t_label = ClassLabel::from_value(t).ok_or_else(|| {
                Error::Domain(format!("truth value {t} at ({i}, {j}) is not a class code"))
            })?;
            let p = pred.get(i, j).ok_or_else(|| {
                Error::Domain(format!("prediction is missing at scored pixel ({i}, {j})"))
            })?;
            let p_label = ClassLabel::from_value(p).ok_or_else(|| {
                Error::Domain(format!(
                    "prediction value {p} at ({i}, {j}) is not a class code"
                ))
            })?;
            counts.0[t_label.index()][p_label.index()] += 1;
        }
    }
    Ok(counts)
}

/// Precision, recall and F1 per class, plus macro and micro averages.
///
/// Classes with no truth pixels are excluded from the macro mean; their
/// per-class scores are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Scores {
    pub precision: [f64; 3],
    pub recall: [f64; 3],
    pub per_class_f1: [f64; 3],
    /// Which classes occur in the truth.
    pub present: [bool; 3],
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub accuracy: f64,
}

/// Derive the F1 family from a confusion matrix.
pub fn f1_scores(confusion: &Confusion) -> Result<F1Scores> {
    if confusion.total() == 0 {
        return Err(Error::Usage(
            "cannot score an empty confusion matrix (no pixels were scored)".into(),
        ));
    }
    let mut precision = [0.0; 3];
    let mut recall = [0.0; 3];
    let mut f1 = [0.0; 3];
    let mut present = [false; 3];
    for c in 0..3 {
        let tp = confusion.0[c][c] as f64;
        let col = confusion.col_sum(c) as f64;
        let row = confusion.row_sum(c) as f64;
        present[c] = row > 0.0;
        precision[c] = if col > 0.0 { tp / col } else { 0.0 };
        recall[c] = if row > 0.0 { tp / row } else { 0.0 };
        let pr = precision[c] + recall[c];
        f1[c] = if pr > 0.0 {
            2.0 * precision[c] * recall[c] / pr
        } else {
            0.0
        };
    }
    let n_present = present.iter().filter(|&&p| p).count();
    let macro_f1 = (0..3)
        .filter(|&c| present[c])
        .map(|c| f1[c])
        .sum::<f64>()
        / n_present as f64;
    let micro_f1 = confusion.accuracy();
    Ok(F1Scores {
        precision,
        recall,
        per_class_f1: f1,
        present,
        macro_f1,
        micro_f1,
        accuracy: confusion.accuracy(),
    })
}

/// Fill scores and run metadata for one engine run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub scores: F1Scores,
    pub scope: Scope,
    pub wall_time_s: Option<f64>,
    pub iterations: Option<usize>,
}

impl EvalReport {
    pub fn new(
        confusion: Confusion,
        scope: Scope,
        wall_time_s: Option<f64>,
        iterations: Option<usize>,
    ) -> Result<EvalReport> {
        Ok(EvalReport {
            confusion,
            scores: f1_scores(&confusion)?,
            scope,
            wall_time_s,
            iterations,
        })
    }
}

/// Engine selector for timed runs and sweeps.
#[derive(Debug, Clone, PartialEq)]
pub enum FillMethod {
    Dineof(DineofConfig),
    FunkSvd(FunkConfig),
    /// Per-pixel temporal mode of the observed frames.
    Baseline,
}

impl FillMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FillMethod::Dineof(_) => "dineof",
            FillMethod::FunkSvd(_) => "funk-svd",
            FillMethod::Baseline => "baseline",
        }
    }
}

/// A fill run with its wall time (fill call only, no I/O) and iteration or
/// epoch count.
#[derive(Debug, Clone, PartialEq)]
pub struct FillOutcome {
    /// Numeric frames-by-pixels reconstruction, observed entries passed
    /// through.
    pub filled: Array2<f64>,
    pub wall_time_s: f64,
    pub iterations: usize,
}

/// Run one engine on (stack, mask), timing the fill call only.
pub fn timed_fill(
    method: &FillMethod,
    stack: &GridStack,
    mask: &MaskMatrix,
) -> Result<FillOutcome> {
    let start = Instant::now();
    let (filled, iterations) = match method {
        FillMethod::Dineof(config) => {
            let (filled, trace) = run_dineof(stack, mask, config, None)?;
            (filled, trace.iterations())
        }
        FillMethod::FunkSvd(config) => {
            let (filled, report) = run_funk_svd(stack, mask, config)?;
            (filled, report.epochs())
        }
        FillMethod::Baseline => {
            let out = baseline_mode_fill(stack, mask)?;
            (out.raw_values().clone(), 0)
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(FillOutcome {
        filled,
        wall_time_s,
        iterations,
    })
}

/// Fill every missing entry with the most frequent observed class at that
/// pixel position across frames; ties break toward the wetter (smaller)
/// code. Pixel columns with no observation fall back to the global mode.
pub fn baseline_mode_fill(stack: &GridStack, mask: &MaskMatrix) -> Result<GridStack> {
    let missing = mask_from_stack(stack).union(mask)?;
    if !stack.is_categorical() {
        return Err(Error::Domain(
            "baseline fill needs a categorical stack".into(),
        ));
    }

    let mut global_counts = [0u64; 3];
    let mut column_counts = vec![[0u64; 3]; stack.pixels()];
    for i in 0..stack.frames() {
        for (j, counts) in column_counts.iter_mut().enumerate() {
            if missing.bits()[(i, j)] {
                continue;
            }
            if let Some(v) = stack.get(i, j) {
                let c = ClassLabel::from_value(v).expect("categorical stack").index();
                global_counts[c] += 1;
                counts[c] += 1;
            }
        }
    }
    let global_mode = mode_of(&global_counts).ok_or_else(|| {
        Error::Usage("cannot baseline-fill a stack with zero observed entries".into())
    })?;

    let mut values = stack.raw_values().clone();
    for (ix, &miss) in missing.bits().indexed_iter() {
        if miss {
            let label = mode_of(&column_counts[ix.1]).unwrap_or(global_mode);
            values[ix] = label.code() as f64;
        }
    }
    GridStack::fully_observed(stack.rows(), stack.cols(), values)
}

fn mode_of(counts: &[u64; 3]) -> Option<ClassLabel> {
    let best = counts
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
        .map(|(i, _)| i)?;
    if counts[best] == 0 {
        None
    } else {
        ClassLabel::from_code(best as u8 + 1).ok()
    }
}
