//! Regularized low-rank factorization fit by stochastic gradient descent
//! over the observed entries only, with prediction at the missing entries
//! and rounding back to class codes.
//!
//! The model approximates the frames-by-pixels matrix as P·Q with P of
//! shape M×k and Q of shape k×N, minimizing the squared error on observed
//! entries plus an L2 penalty on every latent vector (each row of P and
//! each column of Q counted once).

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::masking::{mask_from_stack, MaskMatrix};
use crate::rasterstack::{ClassLabel, GridStack};

/// Residuals beyond this magnitude abort the fit as divergent.
const RESIDUAL_GUARD: f64 = 1e6;

/// Hyperparameters of the factorization fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FunkConfig {
    /// Latent dimension k.
    pub rank: usize,
    /// Regularization weight on the latent vectors. The SGD rule shrinks a
    /// latent vector once per observed entry, so the effective per-epoch
    /// shrinkage scales with the matrix density; dense stacks need lambda
    /// an order of magnitude below typical sparse-ratings settings.
    pub lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Standard deviation of the random factor initialization.
    pub init_scale: f64,
}

impl Default for FunkConfig {
    fn default() -> Self {
        FunkConfig {
            rank: 10,
            lambda: 0.01,
            learning_rate: 0.005,
            epochs: 100,
            seed: 42,
            init_scale: 0.1,
        }
    }
}

impl FunkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::Usage("rank must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Usage(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.lambda < 0.0 {
            return Err(Error::Usage(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Usage("epochs must be at least 1".into()));
        }
        if self.init_scale.is_nan() || self.init_scale < 0.0 {
            return Err(Error::Usage(format!(
                "init scale must be >= 0, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Latent factor matrices P (M×k) and Q (k×N).
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    p: Array2<f64>,
    q: Array2<f64>,
}

impl FactorModel {
    pub fn new(p: Array2<f64>, q: Array2<f64>) -> Result<FactorModel> {
        if p.ncols() != q.nrows() {
            return Err(Error::shape(
                format!("P with {} columns", q.nrows()),
                format!("P with {} columns", p.ncols()),
            ));
        }
        let model = FactorModel { p, q };
        model.check_finite()?;
        Ok(model)
    }

    pub fn rank(&self) -> usize {
        self.p.ncols()
    }

    /// Row latent vectors, M×k.
    pub fn row_factors(&self) -> &Array2<f64> {
        &self.p
    }

    /// Column latent vectors, k×N.
    pub fn col_factors(&self) -> &Array2<f64> {
        &self.q
    }

    fn row_vec(&self, i: usize) -> ArrayView1<'_, f64> {
        self.p.row(i)
    }

    fn col_vec(&self, j: usize) -> ArrayView1<'_, f64> {
        self.q.column(j)
    }

    /// Predicted value at (row, column): the latent dot product.
    pub fn predict(&self, i: usize, j: usize) -> f64 {
        self.row_vec(i).dot(&self.col_vec(j))
    }

    fn check_finite(&self) -> Result<()> {
        let finite =
            self.p.iter().all(|v| v.is_finite()) && self.q.iter().all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Domain("factor model contains non-finite entries".into()))
        }
    }
}

/// Random factors with i.i.d. zero-mean normal entries of standard
/// deviation `init_scale`. Deterministic per seed.
pub fn init_factors(m: usize, n: usize, config: &FunkConfig) -> FactorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    if config.init_scale == 0.0 {
        return FactorModel {
            p: Array2::zeros((m, config.rank)),
            q: Array2::zeros((config.rank, n)),
        };
    }
    let normal = Normal::new(0.0, config.init_scale).expect("positive scale");
    let p = Array2::from_shape_fn((m, config.rank), |_| normal.sample(&mut rng));
    let q = Array2::from_shape_fn((config.rank, n), |_| normal.sample(&mut rng));
    FactorModel { p, q }
}

/// Observed entries of a stack under an extra mask — coordinates and value
/// of everything present in the stack and not additionally masked.
fn observed_entries(stack: &GridStack, mask: &MaskMatrix) -> Result<Vec<(usize, usize, f64)>> {
    let missing = mask_from_stack(stack).union(mask)?;
    let values = stack.raw_values();
    let mut out = Vec::new();
    for (ix, &miss) in missing.bits().indexed_iter() {
        if !miss {
            out.push((ix.0, ix.1, values[ix]));
        }
    }
    Ok(out)
}

/// Fit objective: squared error summed over the observed entries plus
/// `lambda` times the squared norms of all latent vectors, each counted
/// once.
pub fn objective(
    model: &FactorModel,
    stack: &GridStack,
    mask: &MaskMatrix,
    lambda: f64,
) -> Result<f64> {
    // Column factors transposed once so each latent vector is contiguous.
    let q_t = model.q.t().as_standard_layout().into_owned();
    let k = model.rank();
    let p_flat = model.p.as_slice().expect("row-major P");
    let q_flat = q_t.as_slice().expect("row-major transposed Q");
    let mut sum = 0.0;
    for (i, j, x) in observed_entries(stack, mask)? {
        let e = x - dot_k(&p_flat[i * k..(i + 1) * k], &q_flat[j * k..(j + 1) * k]);
        sum += e * e;
    }
    let reg: f64 = model.p.iter().map(|v| v * v).sum::<f64>()
        + model.q.iter().map(|v| v * v).sum::<f64>();
    Ok(sum + lambda * reg)
}

fn dot_k(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for f in 0..a.len() {
        sum += a[f] * b[f];
    }
    sum
}

/// Full-batch gradient of [`objective`] with respect to P and Q.
pub fn gradient(
    model: &FactorModel,
    stack: &GridStack,
    mask: &MaskMatrix,
    lambda: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut dp = &model.p * (2.0 * lambda);
    let mut dq = &model.q * (2.0 * lambda);
    for (i, j, x) in observed_entries(stack, mask)? {
        let e = x - model.predict(i, j);
        for f in 0..model.rank() {
            dp[(i, f)] += -2.0 * e * model.q[(f, j)];
            dq[(f, j)] += -2.0 * e * model.p[(i, f)];
        }
    }
    Ok((dp, dq))
}

fn epoch_seed(seed: u64, epoch_index: usize) -> u64 {
    seed ^ (epoch_index as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// One SGD pass over all observed entries, visited in an order shuffled
/// deterministically by (seed, epoch_index).
///
/// Per entry, with residual `e = x − pᵢ·qⱼ`, the update is
/// `pᵢ += lr · (2e·qⱼ − 2λ·pᵢ)` and `qⱼ += lr · (2e·pᵢ − 2λ·qⱼ)` using the
/// pre-update `pᵢ` in the second rule.
pub fn sgd_epoch(
    model: &mut FactorModel,
    stack: &GridStack,
    mask: &MaskMatrix,
    config: &FunkConfig,
    epoch_index: usize,
) -> Result<()> {
    let mut entries = observed_entries(stack, mask)?;
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(config.seed, epoch_index));
    entries.shuffle(&mut rng);

    let lr = config.learning_rate;
    let lambda = config.lambda;
    let k = model.rank();

    // Work on contiguous latent vectors: P rows already are, Q columns
    // become rows of the transpose for the duration of the pass.
    let mut q_t = model.q.t().as_standard_layout().into_owned();
    let p_flat = model.p.as_slice_mut().expect("row-major P");
    let q_flat = q_t.as_slice_mut().expect("row-major transposed Q");

    for (i, j, x) in entries {
        let p_i = &mut p_flat[i * k..(i + 1) * k];
        let q_j = &mut q_flat[j * k..(j + 1) * k];
        let e = x - dot_k(p_i, q_j);
        if !e.is_finite() || e.abs() > RESIDUAL_GUARD {
            return Err(Error::Divergence {
                learning_rate: lr,
                msg: format!("residual {e} at entry ({i}, {j}) in epoch {epoch_index}"),
            });
        }
        let g = 2.0 * e * lr;
        let shrink = 2.0 * lambda * lr;
        for f in 0..k {
            let p_old = p_i[f];
            p_i[f] += g * q_j[f] - shrink * p_i[f];
            q_j[f] += g * p_old - shrink * q_j[f];
        }
    }
    model.q.assign(&q_t.t());
    model.check_finite().map_err(|_| Error::Divergence {
        learning_rate: lr,
        msg: format!("non-finite factors after epoch {epoch_index}"),
    })
}

/// Per-epoch objective values of a completed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub objectives: Vec<f64>,
}

impl FitReport {
    pub fn epochs(&self) -> usize {
        self.objectives.len()
    }
}

/// Fit the factorization on the observed entries and predict the missing
/// ones; observed entries pass through bitwise. Deterministic per config.
pub fn run_funk_svd(
    stack: &GridStack,
    mask: &MaskMatrix,
    config: &FunkConfig,
) -> Result<(Array2<f64>, FitReport)> {
    config.validate()?;
    let missing = mask_from_stack(stack).union(mask)?;
    if missing.count() == missing.frames() * missing.pixels() {
        return Err(Error::Usage(
            "cannot fit a factorization with zero observed entries".into(),
        ));
    }

    let mut model = init_factors(stack.frames(), stack.pixels(), config);
    let mut objectives = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        sgd_epoch(&mut model, stack, mask, config, epoch)?;
        objectives.push(objective(&model, stack, mask, config.lambda)?);
    }

    let filled = Array2::from_shape_fn(stack.raw_values().dim(), |(i, j)| {
        if missing.bits()[(i, j)] {
            model.predict(i, j)
        } else {
            stack.raw_values()[(i, j)]
        }
    });
    Ok((filled, FitReport { objectives }))
}

/// Round a continuous reconstruction back to class codes: nearest integer
/// with halves rounding up, clamped to the code range.
pub fn round_to_class(matrix: &Array2<f64>, rows: usize, cols: usize) -> Result<GridStack> {
    if matrix.ncols() != rows * cols {
        return Err(Error::shape(
            format!("{} columns (= {rows}x{cols})", rows * cols),
            format!("{} columns", matrix.ncols()),
        ));
    }
    let mut values = Array2::zeros(matrix.dim());
    for (ix, &v) in matrix.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "cannot round non-finite value {v} at {ix:?}"
            )));
        }
        values[ix] = round_value(v);
    }
    GridStack::fully_observed(rows, cols, values)
}

fn round_value(v: f64) -> f64 {
    let lo = ClassLabel::Water.code() as f64;
    let hi = ClassLabel::Land.code() as f64;
    (v + 0.5).floor().clamp(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn stack_from(values: Array2<f64>, missing: &[(usize, usize)]) -> GridStack {
        let (_, n) = values.dim();
        let mut present = Array2::from_elem(values.dim(), true);
        for &ix in missing {
            present[ix] = false;
        }
        GridStack::new(1, n, values, present).unwrap()
    }

    fn empty_mask_like(stack: &GridStack) -> MaskMatrix {
        MaskMatrix::zeros(stack.frames(), stack.rows(), stack.cols())
    }

    #[test]
    fn init_is_deterministic_and_shaped() {
        let config = FunkConfig {
            rank: 3,
            ..FunkConfig::default()
        };
        let a = init_factors(5, 7, &config);
        let b = init_factors(5, 7, &config);
        assert_eq!(a, b);
        assert_eq!(a.row_factors().dim(), (5, 3));
        assert_eq!(a.col_factors().dim(), (3, 7));
        let c = init_factors(5, 7, &FunkConfig { seed: 43, ..config });
        assert_ne!(a, c);
    }

    #[test]
    fn zero_init_scale_degenerates_to_zero_predictions() {
        let config = FunkConfig {
            rank: 2,
            init_scale: 0.0,
            ..FunkConfig::default()
        };
        let model = init_factors(3, 4, &config);
        for i in 0..3 {
            for j in 0..4 {
                assert_eq!(model.predict(i, j), 0.0);
            }
        }
    }

    #[test]
    fn objective_on_a_single_entry() {
        let stack = stack_from(array![[3.0]], &[]);
        let model = FactorModel::new(array![[1.0]], array![[1.0]]).unwrap();
        let value = objective(&model, &stack, &empty_mask_like(&stack), 0.1).unwrap();
        assert!((value - 4.2).abs() < 1e-12, "objective {value}");
    }

    #[test]
    fn objective_zero_for_perfect_factorization() {
        let p = array![[1.0], [2.0]];
        let q = array![[1.0, 2.0, 3.0]];
        let stack = stack_from(p.dot(&q), &[]);
        let model = FactorModel::new(p, q).unwrap();
        let value = objective(&model, &stack, &empty_mask_like(&stack), 0.0).unwrap();
        assert!(value.abs() < 1e-24, "objective {value}");
    }

    #[test]
    fn objective_matches_naive_double_loop() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let values = Array2::from_shape_fn((4, 5), |_| rng.random_range(-2.0..2.0));
        let missing: Vec<(usize, usize)> = values
            .indexed_iter()
            .filter(|_| rng.random_range(0.0..1.0) < 0.5)
            .map(|(ix, _)| ix)
            .collect();
        let stack = stack_from(values.clone(), &missing);
        let config = FunkConfig {
            rank: 2,
            seed: 9,
            ..FunkConfig::default()
        };
        let model = init_factors(4, 5, &config);
        let lambda = 0.3;
        let got = objective(&model, &stack, &empty_mask_like(&stack), lambda).unwrap();

        let mut naive = 0.0;
        for i in 0..4 {
            for j in 0..5 {
                if let Some(x) = stack.get(i, j) {
                    let mut pred = 0.0;
                    for f in 0..2 {
                        pred += model.row_factors()[(i, f)] * model.col_factors()[(f, j)];
                    }
                    naive += (x - pred) * (x - pred);
                }
            }
        }
        for i in 0..4 {
            for f in 0..2 {
                naive += lambda * model.row_factors()[(i, f)].powi(2);
            }
        }
        for f in 0..2 {
            for j in 0..5 {
                naive += lambda * model.col_factors()[(f, j)].powi(2);
            }
        }
        assert!((got - naive).abs() < 1e-12, "{got} vs {naive}");
    }

    #[test]
    fn gradient_zero_at_zero_factors_without_regularization() {
        let stack = stack_from(array![[1.0, 2.0], [3.0, 4.0]], &[]);
        let model = FactorModel::new(Array2::zeros((2, 2)), Array2::zeros((2, 2))).unwrap();
        let (dp, dq) = gradient(&model, &stack, &empty_mask_like(&stack), 0.0).unwrap();
        assert!(dp.iter().all(|&v| v == 0.0));
        assert!(dq.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_reduces_to_regularizer_with_nothing_observed() {
        let stack = stack_from(array![[1.0, 2.0]], &[(0, 0), (0, 1)]);
        let config = FunkConfig {
            rank: 2,
            seed: 4,
            ..FunkConfig::default()
        };
        let model = init_factors(1, 2, &config);
        let lambda = 10.0;
        let (dp, dq) = gradient(&model, &stack, &empty_mask_like(&stack), lambda).unwrap();
        for (ix, &v) in dp.indexed_iter() {
            assert!((v - 2.0 * lambda * model.row_factors()[ix]).abs() < 1e-12);
        }
        for (ix, &v) in dq.indexed_iter() {
            assert!((v - 2.0 * lambda * model.col_factors()[ix]).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let values = Array2::from_shape_fn((5, 6), |_| rng.random_range(-2.0..2.0));
        let missing: Vec<(usize, usize)> = values
            .indexed_iter()
            .filter(|_| rng.random_range(0.0..1.0) < 0.4)
            .map(|(ix, _)| ix)
            .collect();
        let stack = stack_from(values, &missing);
        let mask = empty_mask_like(&stack);
        let config = FunkConfig {
            rank: 2,
            seed: 17,
            init_scale: 0.5,
            ..FunkConfig::default()
        };
        let model = init_factors(5, 6, &config);
        let lambda = 0.2;
        let (dp, dq) = gradient(&model, &stack, &mask, lambda).unwrap();

        let h = 1e-6;
        let check = |analytic: f64, perturbed: &dyn Fn(f64) -> FactorModel| {
            let plus = objective(&perturbed(h), &stack, &mask, lambda).unwrap();
            let minus = objective(&perturbed(-h), &stack, &mask, lambda).unwrap();
            let fd = (plus - minus) / (2.0 * h);
            let scale = analytic.abs().max(fd.abs()).max(1.0);
            assert!(
                (analytic - fd).abs() / scale < 1e-5,
                "analytic {analytic} vs fd {fd}"
            );
        };
        for i in 0..5 {
            for f in 0..2 {
                let base = model.clone();
                check(dp[(i, f)], &move |d| {
                    let mut m = base.clone();
                    m.p[(i, f)] += d;
                    m
                });
            }
        }
        for f in 0..2 {
            for j in 0..6 {
                let base = model.clone();
                check(dq[(f, j)], &move |d| {
                    let mut m = base.clone();
                    m.q[(f, j)] += d;
                    m
                });
            }
        }
    }

    #[test]
    fn epoch_without_observations_leaves_model_unchanged() {
        let stack = stack_from(array![[1.0, 2.0]], &[(0, 0), (0, 1)]);
        let config = FunkConfig {
            rank: 1,
            lambda: 0.0,
            ..FunkConfig::default()
        };
        let mut model = init_factors(1, 2, &config);
        let before = model.clone();
        sgd_epoch(&mut model, &stack, &empty_mask_like(&stack), &config, 0).unwrap();
        assert_eq!(model, before);
    }

    #[test]
    fn exact_entry_is_a_fixed_point() {
        let stack = stack_from(array![[1.0]], &[]);
        let config = FunkConfig {
            rank: 1,
            lambda: 0.0,
            learning_rate: 0.1,
            ..FunkConfig::default()
        };
        let mut model = FactorModel::new(array![[1.0]], array![[1.0]]).unwrap();
        sgd_epoch(&mut model, &stack, &empty_mask_like(&stack), &config, 0).unwrap();
        assert_eq!(model.p[(0, 0)], 1.0);
        assert_eq!(model.q[(0, 0)], 1.0);
    }

    #[test]
    fn epochs_reduce_the_objective_on_a_lowrank_fixture() {
        let truth = crate::synth::generate_lowrank_numeric(11, 8, 10, 2).unwrap();
        let stack = stack_from(truth, &[]);
        let mask = empty_mask_like(&stack);
        let config = FunkConfig {
            rank: 2,
            lambda: 0.0,
            learning_rate: 0.01,
            epochs: 50,
            seed: 2,
            init_scale: 0.1,
        };
        let model = init_factors(8, 10, &config);
        let at_init = objective(&model, &stack, &mask, 0.0).unwrap();
        let (_, report) = run_funk_svd(&stack, &mask, &config).unwrap();
        assert_eq!(report.epochs(), 50);
        assert!(
            report.objectives[49] < at_init,
            "objective went {at_init} -> {}",
            report.objectives[49]
        );
    }

    #[test]
    fn rank_one_completion_recovers_the_outer_product() {
        let stack = stack_from(array![[1.0, 2.0], [2.0, 4.0]], &[(1, 1)]);
        let config = FunkConfig {
            rank: 1,
            lambda: 0.0,
            learning_rate: 0.05,
            epochs: 500,
            seed: 42,
            init_scale: 0.1,
        };
        let (filled, report) =
            run_funk_svd(&stack, &empty_mask_like(&stack), &config).unwrap();
        assert_eq!(report.epochs(), 500);
        assert!(
            (filled[(1, 1)] - 4.0).abs() < 0.05,
            "filled {}",
            filled[(1, 1)]
        );
        // observed entries pass through bitwise
        assert_eq!(filled[(0, 0)], 1.0);
        assert_eq!(filled[(0, 1)], 2.0);
        assert_eq!(filled[(1, 0)], 2.0);
    }

    #[test]
    fn empty_mask_passes_input_through() {
        let values = array![[1.0, 2.5], [0.5, 4.0]];
        let stack = stack_from(values.clone(), &[]);
        let (filled, _) = run_funk_svd(
            &stack,
            &empty_mask_like(&stack),
            &FunkConfig {
                rank: 2,
                epochs: 3,
                ..FunkConfig::default()
            },
        )
        .unwrap();
        assert_eq!(filled, values);
    }

    #[test]
    fn fit_is_deterministic() {
        let truth = crate::synth::generate_lowrank_numeric(13, 6, 9, 2).unwrap();
        let stack = stack_from(truth, &[(0, 0), (2, 4), (5, 8)]);
        let mask = empty_mask_like(&stack);
        let config = FunkConfig {
            rank: 2,
            epochs: 20,
            ..FunkConfig::default()
        };
        let (a, ra) = run_funk_svd(&stack, &mask, &config).unwrap();
        let (b, rb) = run_funk_svd(&stack, &mask, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn all_missing_input_is_a_usage_error() {
        let stack = stack_from(array![[1.0, 2.0]], &[(0, 0), (0, 1)]);
        let err = run_funk_svd(
            &stack,
            &empty_mask_like(&stack),
            &FunkConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Usage(_)));
    }

    #[test]
    fn divergent_learning_rate_is_reported() {
        let truth = crate::synth::generate_lowrank_numeric(19, 6, 8, 2).unwrap();
        let stack = stack_from(truth * 100.0, &[]);
        let config = FunkConfig {
            rank: 2,
            lambda: 0.0,
            learning_rate: 10.0,
            epochs: 50,
            seed: 1,
            init_scale: 1.0,
        };
        let err = run_funk_svd(&stack, &empty_mask_like(&stack), &config).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn rounding_rule() {
        let m = array![[1.4, 1.5, 2.7, 0.2, 7.9, 2.0]];
        let stack = round_to_class(&m, 1, 6).unwrap();
        let got: Vec<f64> = (0..6).map(|j| stack.get(0, j).unwrap()).collect();
        assert_eq!(got, vec![1.0, 2.0, 3.0, 1.0, 3.0, 2.0]);
        assert!(stack.is_categorical());
    }

    #[test]
    fn rounding_is_idempotent_and_monotone() {
        for raw in [-5.0, 0.4, 1.49, 1.5, 2.49, 2.5, 3.6, 10.0] {
            let once = round_value(raw);
            assert_eq!(round_value(once), once);
        }
        let mut prev = round_value(-3.0);
        let mut v = -3.0;
        while v < 8.0 {
            let r = round_value(v);
            assert!(r >= prev, "rounding not monotone at {v}");
            prev = r;
            v += 0.01;
        }
    }

    #[test]
    fn rounding_rejects_non_finite() {
        let m = array![[f64::NAN]];
        assert!(round_to_class(&m, 1, 1).is_err());
    }
}
