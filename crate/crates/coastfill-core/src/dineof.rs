//! Iterative truncated-SVD gap filling, plus diagnostics that expose how
//! the truncation remainder feeds back into the iteration.
//!
//! The engine zero-fills the missing entries, then repeats: factorize the
//! current matrix, keep the leading `k` singular modes, and overwrite the
//! missing entries with the rank-`k` reconstruction while the observed
//! entries stay untouched. Iteration stops when the relative Frobenius
//! change of the iterate drops below the tolerance.

use ndarray::{s, Array1, Array2};
use ndarray_linalg::{JobSvd, SVDDC};

use crate::error::{Error, Result};
use crate::masking::{mask_from_stack, MaskMatrix};
use crate::rasterstack::GridStack;

/// Iteration controls for the truncated-SVD engine.
#[derive(Debug, Clone, PartialEq)]
pub struct DineofConfig {
    /// Number of leading singular modes kept by the truncation.
    pub rank: usize,
    /// Relative Frobenius-change threshold that stops the iteration.
    pub tol: f64,
    pub max_iter: usize,
    /// How the missing entries are seeded before the first factorization.
    pub init: InitialFill,
}

/// Start value written into the missing entries.
///
/// `Zero` is the standard scheme. `ObservedMean` seeds with the mean of the
/// observed entries instead and is provided for comparison runs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialFill {
    #[default]
    Zero,
    ObservedMean,
}

impl Default for DineofConfig {
    fn default() -> Self {
        DineofConfig {
            rank: 10,
            tol: 1e-5,
            max_iter: 500,
            init: InitialFill::Zero,
        }
    }
}

impl DineofConfig {
    pub fn validate(&self, m: usize, n: usize) -> Result<()> {
        if self.rank == 0 || self.rank > m.min(n) {
            return Err(Error::Usage(format!(
                "rank must lie in 1..=min({m}, {n}), got {}",
                self.rank
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Usage(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Usage("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

/// One thin SVD factorization split at rank `k` into a leading part (the
/// best rank-`k` approximation) and the residual tail.
#[derive(Debug, Clone)]
pub struct SvdTruncation {
    u: Array2<f64>,
    singular: Array1<f64>,
    vt: Array2<f64>,
    k: usize,
}

impl SvdTruncation {
    /// Split rank `k`.
    pub fn split_rank(&self) -> usize {
        self.k
    }

    /// Total number of computed modes, `min(M, N)`.
    pub fn modes(&self) -> usize {
        self.singular.len()
    }

    /// Singular values, nonincreasing.
    pub fn singular_values(&self) -> &Array1<f64> {
        &self.singular
    }

    pub fn u(&self) -> &Array2<f64> {
        &self.u
    }

    pub fn vt(&self) -> &Array2<f64> {
        &self.vt
    }

    /// Rank-`k` part built from the leading modes.
    pub fn leading(&self) -> Array2<f64> {
        self.partial(0, self.k)
    }

    /// Tail built from the trailing modes; `leading() + residual()`
    /// reconstructs the factorized matrix.
    pub fn residual(&self) -> Array2<f64> {
        self.partial(self.k, self.modes())
    }

    /// Full reconstruction from all modes.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.partial(0, self.modes())
    }

    fn partial(&self, from: usize, to: usize) -> Array2<f64> {
        let u = self.u.slice(s![.., from..to]);
        let vt = self.vt.slice(s![from..to, ..]);
        let scaled = &u * &self.singular.slice(s![from..to]);
        scaled.dot(&vt)
    }
}

extern "C" {
    fn openblas_set_num_threads(num_threads: std::os::raw::c_int);
}

/// The engine factorizes many small thin matrices; at these sizes the BLAS
/// pool's synchronization costs more than it buys, and cell-level
/// parallelism already uses the cores. Pin the kernel to one thread unless
/// the user configured a count explicitly.
fn pin_blas_threads() {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    ONCE.call_once(|| {
        if std::env::var_os("OPENBLAS_NUM_THREADS").is_none()
            && std::env::var_os("OMP_NUM_THREADS").is_none()
        {
            unsafe { openblas_set_num_threads(1) };
        }
    });
}

/// Thin SVD of `x` split at rank `k`.
pub fn svd_split(x: &Array2<f64>, k: usize) -> Result<SvdTruncation> {
    let (m, n) = x.dim();
    if k == 0 || k > m.min(n) {
        return Err(Error::Usage(format!(
            "split rank must lie in 1..=min({m}, {n}), got {k}"
        )));
    }
    pin_blas_threads();
    let (u, singular, vt) = x
        .svddc(JobSvd::Some)
        .map_err(|e| Error::Numeric(format!("SVD failed on a {m}x{n} matrix: {e}")))?;
    let u = u.ok_or_else(|| Error::Numeric("SVD returned no left vectors".into()))?;
    let vt = vt.ok_or_else(|| Error::Numeric("SVD returned no right vectors".into()))?;
    Ok(SvdTruncation { u, singular, vt, k })
}

/// Union of the stack's own missingness and an extra mask: the entries the
/// engine must treat as unknown.
fn missing_union(stack: &GridStack, mask: &MaskMatrix) -> Result<MaskMatrix> {
    mask_from_stack(stack).union(mask)
}

/// Numeric start matrix: observed entries copied, missing entries zeroed.
pub fn initial_fill(stack: &GridStack, mask: &MaskMatrix) -> Result<Array2<f64>> {
    let missing = missing_union(stack, mask)?;
    let mut x = stack.raw_values().clone();
    for (ix, &miss) in missing.bits().indexed_iter() {
        if miss {
            x[ix] = 0.0;
        }
    }
    Ok(x)
}

/// Alternative start: missing entries seeded with the observed mean.
pub fn initial_fill_mean(stack: &GridStack, mask: &MaskMatrix) -> Result<Array2<f64>> {
    let missing = missing_union(stack, mask)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (ix, &v) in stack.raw_values().indexed_iter() {
        if !missing.bits()[ix] {
            sum += v;
            count += 1;
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    let mut x = stack.raw_values().clone();
    for (ix, &miss) in missing.bits().indexed_iter() {
        if miss {
            x[ix] = mean;
        }
    }
    Ok(x)
}

/// One iteration: factorize `x_p`, keep `k` modes, and rebuild the iterate
/// with observed entries from `x0` and missing entries from the rank-`k`
/// part.
pub fn dineof_step(
    x_p: &Array2<f64>,
    x0: &Array2<f64>,
    mask: &MaskMatrix,
    k: usize,
) -> Result<Array2<f64>> {
    check_dims(x_p, x0, mask)?;
    let truncation = svd_split(x_p, k)?;
    Ok(select(x0, &truncation.leading(), mask.bits()))
}

fn check_dims(a: &Array2<f64>, b: &Array2<f64>, mask: &MaskMatrix) -> Result<()> {
    if a.dim() != b.dim() || a.dim() != mask.bits().dim() {
        return Err(Error::shape(
            format!("{:?}", a.dim()),
            format!("{:?} / mask {:?}", b.dim(), mask.bits().dim()),
        ));
    }
    Ok(())
}

/// Observed entries from `base`, masked entries from `filler`.
fn select(base: &Array2<f64>, filler: &Array2<f64>, missing: &Array2<bool>) -> Array2<f64> {
    Array2::from_shape_fn(base.dim(), |ix| {
        if missing[ix] {
            filler[ix]
        } else {
            base[ix]
        }
    })
}

fn fro_norm(x: &Array2<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn fro_norm_masked(x: &Array2<f64>, missing: &Array2<bool>) -> f64 {
    x.indexed_iter()
        .filter(|(ix, _)| missing[*ix])
        .map(|(_, v)| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Per-iteration diagnostics of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration counter.
    pub iteration: usize,
    /// Relative Frobenius change from this iterate to the next.
    pub rel_change: f64,
    /// Frobenius norm of the truncation tail restricted to missing entries.
    pub remainder_missing_fro: f64,
    /// Frobenius norm of (iterate − truth) restricted to missing entries,
    /// when a truth stack was supplied.
    pub error_missing_fro: Option<f64>,
    /// Relative deviation of the one-step update identity
    /// `next = start + missing ⊙ (iterate − tail)` at this iteration.
    pub recurrence_dev: f64,
}

/// Full iteration history of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DineofTrace {
    pub records: Vec<IterationRecord>,
    /// False when the run stopped at `max_iter` without meeting the
    /// tolerance; the filled matrix is still returned.
    pub converged: bool,
}

impl DineofTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn has_truth(&self) -> bool {
        self.records
            .iter()
            .all(|r| r.error_missing_fro.is_some())
            && !self.records.is_empty()
    }
}

/// Run the engine to convergence (or `max_iter`). Returns the final filled
/// matrix and the full trace. When `truth` is given, per-iteration error
/// norms against it are recorded.
pub fn run_dineof(
    stack: &GridStack,
    mask: &MaskMatrix,
    config: &DineofConfig,
    truth: Option<&GridStack>,
) -> Result<(Array2<f64>, DineofTrace)> {
    config.validate(stack.frames(), stack.pixels())?;
    let missing = missing_union(stack, mask)?;
    if let Some(t) = truth {
        if t.frames() != stack.frames() || t.pixels() != stack.pixels() {
            return Err(Error::shape(
                format!("truth of {}x{}", stack.frames(), stack.pixels()),
                format!("truth of {}x{}", t.frames(), t.pixels()),
            ));
        }
    }

    let x0 = match config.init {
        InitialFill::Zero => initial_fill(stack, mask)?,
        InitialFill::ObservedMean => initial_fill_mean(stack, mask)?,
    };
    let mut x = x0.clone();
    let mut x_next = x0.clone();
    let mut records = Vec::new();
    let mut converged = false;

    for p in 0..config.max_iter {
        let truncation = svd_split(&x, config.rank)?;
        let leading = truncation.leading();
        let residual = truncation.residual();

        // One pass builds the next iterate and accumulates every norm the
        // trace needs.
        let mut x_sq = 0.0;
        let mut diff_sq = 0.0;
        let mut remainder_sq = 0.0;
        let mut recurrence_sq = 0.0;
        let mut error_sq = 0.0;
        for (ix, &miss) in missing.bits().indexed_iter() {
            let current = x[ix];
            x_sq += current * current;
            let next = if miss { leading[ix] } else { x0[ix] };
            let step = next - current;
            diff_sq += step * step;
            if miss {
                let tail = residual[ix];
                remainder_sq += tail * tail;
                // the update identity rewrites `next` as current − tail
                let identity_gap = next - (current - tail);
                recurrence_sq += identity_gap * identity_gap;
                if let Some(t) = truth {
                    if let Some(v) = t.get(ix.0, ix.1) {
                        error_sq += (current - v) * (current - v);
                    }
                }
            }
            x_next[ix] = next;
        }
        let x_norm = x_sq.sqrt();
        let diff_norm = diff_sq.sqrt();
        let rel_change = if x_norm > 0.0 {
            diff_norm / x_norm
        } else {
            diff_norm
        };

        records.push(IterationRecord {
            iteration: p + 1,
            rel_change,
            remainder_missing_fro: remainder_sq.sqrt(),
            error_missing_fro: truth.map(|_| error_sq.sqrt()),
            recurrence_dev: recurrence_sq.sqrt() / x_norm.max(1.0),
        });
        std::mem::swap(&mut x, &mut x_next);
        if rel_change < config.tol {
            converged = true;
            break;
        }
    }

    Ok((x, DineofTrace { records, converged }))
}

/// Relative deviation of the split identity restricted to the masked
/// entries: `‖K⊙leading − K⊙(x − residual)‖_F / max(1, ‖x‖_F)`.
pub fn verify_truncation_identity(x: &Array2<f64>, k: usize, mask: &MaskMatrix) -> Result<f64> {
    if x.dim() != mask.bits().dim() {
        return Err(Error::shape(
            format!("{:?}", x.dim()),
            format!("mask {:?}", mask.bits().dim()),
        ));
    }
    let truncation = svd_split(x, k)?;
    let leading = truncation.leading();
    let residual = truncation.residual();
    let deviation = Array2::from_shape_fn(x.dim(), |ix| leading[ix] - (x[ix] - residual[ix]));
    Ok(fro_norm_masked(&deviation, mask.bits()) / fro_norm(x).max(1.0))
}

/// One row of the error-propagation table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorPropagationRow {
    pub iteration: usize,
    /// Error against truth at the missing entries.
    pub error_missing_fro: f64,
    /// Truncation remainder at the missing entries.
    pub remainder_missing_fro: f64,
}

/// Per-iteration error and remainder norms, for inspecting how the error
/// behaves across the run (no monotonicity is implied).
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPropagationReport {
    pub rows: Vec<ErrorPropagationRow>,
    /// Largest one-step update-identity deviation observed in the run.
    pub max_recurrence_dev: f64,
}

/// Tolerance on the one-step update identity checked by the report.
pub const RECURRENCE_TOL: f64 = 1e-10;

/// Extract the error-propagation table from a trace recorded with a truth
/// stack, verifying the one-step update identity at every recorded step.
pub fn error_propagation_report(trace: &DineofTrace) -> Result<ErrorPropagationReport> {
    if !trace.has_truth() {
        return Err(Error::Usage(
            "error propagation needs a trace recorded with a truth stack".into(),
        ));
    }
    let mut rows = Vec::with_capacity(trace.records.len());
    let mut max_dev: f64 = 0.0;
    for record in &trace.records {
        max_dev = max_dev.max(record.recurrence_dev);
        if record.recurrence_dev >= RECURRENCE_TOL {
            return Err(Error::Numeric(format!(
                "one-step update identity violated at iteration {}: deviation {}",
                record.iteration, record.recurrence_dev
            )));
        }
        rows.push(ErrorPropagationRow {
            iteration: record.iteration,
            error_missing_fro: record.error_missing_fro.expect("trace has truth"),
            remainder_missing_fro: record.remainder_missing_fro,
        });
    }
    Ok(ErrorPropagationReport {
        rows,
        max_recurrence_dev: max_dev,
    })
}
