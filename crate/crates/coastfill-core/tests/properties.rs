//! Structural invariants checked over randomized inputs.

use coastfill_core::dineof::{run_dineof, svd_split, DineofConfig};
use coastfill_core::funksvd::{init_factors, objective, round_to_class, FunkConfig};
use coastfill_core::masking::{apply_mask, mask_from_stack, MaskMatrix};
use coastfill_core::rasterstack::{
    class_fractions, flatten_frame, format_stack, parse_stack, unflatten_frame, GridStack,
};
use ndarray::Array2;
use proptest::prelude::*;

/// One raster entry: missing, a class code, or a continuous value.
fn entry_strategy() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        2 => Just(None),
        5 => (1u8..=3).prop_map(|c| Some(c as f64)),
        3 => (-20.0f64..20.0).prop_map(Some),
    ]
}

fn frame_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Array2<Option<f64>>> {
    proptest::collection::vec(entry_strategy(), rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

#[derive(Debug, Clone)]
struct StackCase {
    frames: Vec<Array2<Option<f64>>>,
}

fn stack_strategy() -> impl Strategy<Value = StackCase> {
    (1usize..=4, 1usize..=8, 1usize..=8).prop_flat_map(|(m, rows, cols)| {
        proptest::collection::vec(frame_strategy(rows, cols), m)
            .prop_map(|frames| StackCase { frames })
    })
}

fn categorical_entry() -> impl Strategy<Value = Option<f64>> {
    prop_oneof![
        1 => Just(None),
        4 => (1u8..=3).prop_map(|c| Some(c as f64)),
    ]
}

proptest! {
    #[test]
    fn flatten_then_unflatten_is_identity(case in stack_strategy()) {
        for frame in &case.frames {
            let (rows, cols) = frame.dim();
            let row = flatten_frame(frame, rows, cols).unwrap();
            let back = unflatten_frame(&row, rows, cols).unwrap();
            prop_assert_eq!(&back, frame);
        }
    }

    #[test]
    fn gsf_write_read_is_identity(case in stack_strategy()) {
        let stack = GridStack::from_frames(&case.frames).unwrap();
        let text = format_stack(&stack);
        let back = parse_stack(&text).unwrap();
        prop_assert_eq!(&back, &stack);
        // the canonical form is a fixed point of write ∘ read
        prop_assert_eq!(format_stack(&back), text);
    }

    #[test]
    fn io_never_converts_missing_entries(case in stack_strategy()) {
        let stack = GridStack::from_frames(&case.frames).unwrap();
        let back = parse_stack(&format_stack(&stack)).unwrap();
        for t in 0..stack.frames() {
            for j in 0..stack.pixels() {
                prop_assert_eq!(back.get(t, j).is_none(), stack.get(t, j).is_none());
            }
        }
    }

    #[test]
    fn applied_mask_union_is_recovered(
        case in stack_strategy(),
        seed in 0u64..1000,
    ) {
        let stack = GridStack::from_frames(&case.frames).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let bits = Array2::from_shape_fn(
            (stack.frames(), stack.pixels()),
            |_| rng.random_range(0.0..1.0) < 0.3,
        );
        let mask = MaskMatrix::new(stack.rows(), stack.cols(), bits).unwrap();
        let masked = apply_mask(&stack, &mask).unwrap();
        let recovered = mask_from_stack(&masked);
        let expected = mask.union(&mask_from_stack(&stack)).unwrap();
        prop_assert_eq!(recovered, expected);
    }

    #[test]
    fn class_fractions_sum_to_one(
        frames in (1usize..=4, 2usize..=6, 2usize..=6).prop_flat_map(|(m, r, c)| {
            proptest::collection::vec(
                proptest::collection::vec(categorical_entry(), r * c)
                    .prop_map(move |v| Array2::from_shape_vec((r, c), v).unwrap()),
                m,
            )
        })
    ) {
        let stack = GridStack::from_frames(&frames).unwrap();
        for fraction in class_fractions(&stack).unwrap() {
            prop_assert!((fraction.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rounding_is_idempotent_and_monotone(x in -50.0f64..50.0, y in -50.0f64..50.0) {
        let m = Array2::from_shape_vec((1, 2), vec![x, y]).unwrap();
        let rounded = round_to_class(&m, 1, 2).unwrap();
        let (rx, ry) = (rounded.get(0, 0).unwrap(), rounded.get(0, 1).unwrap());
        let again = round_to_class(
            &Array2::from_shape_vec((1, 2), vec![rx, ry]).unwrap(), 1, 2,
        ).unwrap();
        prop_assert_eq!(again.get(0, 0).unwrap(), rx);
        prop_assert_eq!(again.get(0, 1).unwrap(), ry);
        if x <= y {
            prop_assert!(rx <= ry);
        }
    }

    #[test]
    fn objective_without_regularizer_is_masked_squared_error(
        seed in 0u64..500,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(2..6), rng.random_range(2..7));
        let values = Array2::from_shape_fn((m, n), |_| rng.random_range(-3.0..3.0));
        let present = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..1.0) < 0.7);
        let stack = GridStack::new(1, n, values.clone(), present.clone()).unwrap();
        let mask = MaskMatrix::zeros(m, 1, n);
        let config = FunkConfig { rank: 2, seed, ..FunkConfig::default() };
        let model = init_factors(m, n, &config);

        let got = objective(&model, &stack, &mask, 0.0).unwrap();
        let mut direct = 0.0;
        for i in 0..m {
            for j in 0..n {
                if present[(i, j)] {
                    let e = values[(i, j)] - model.predict(i, j);
                    direct += e * e;
                }
            }
        }
        prop_assert!((got - direct).abs() <= 1e-12 * direct.max(1.0));
    }

    #[test]
    fn observed_entries_survive_dineof_runs(seed in 0u64..200) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (rng.random_range(3..7), rng.random_range(3..9));
        let values = Array2::from_shape_fn((m, n), |_| rng.random_range(-2.0..2.0));
        let present = Array2::from_shape_fn((m, n), |_| rng.random_range(0.0..1.0) < 0.8);
        if present.iter().all(|&p| !p) {
            return Ok(());
        }
        let stack = GridStack::new(1, n, values.clone(), present.clone()).unwrap();
        let mask = MaskMatrix::zeros(m, 1, n);
        let config = DineofConfig { rank: 1, tol: 1e-8, max_iter: 40, ..DineofConfig::default() };
        let (filled, trace) = run_dineof(&stack, &mask, &config, None).unwrap();
        for i in 0..m {
            for j in 0..n {
                if present[(i, j)] {
                    prop_assert_eq!(filled[(i, j)], values[(i, j)]);
                }
            }
        }
        // the one-step update identity holds at every recorded iteration
        for record in &trace.records {
            prop_assert!(record.recurrence_dev < 1e-10);
        }
    }
}

/// No random rank-k matrix from 100 trials beats the truncation in
/// Frobenius distance.
#[test]
fn truncation_is_the_best_rank_k_approximation_sampled() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    for case in 0..5 {
        let (m, n, k) = (8, 12, 3);
        let x = Array2::from_shape_fn((m, n), |_| rng.random_range(-2.0..2.0));
        let truncation = svd_split(&x, k).unwrap();
        let best = frob(&(&x - &truncation.leading()));
        for _ in 0..100 {
            let a = Array2::from_shape_fn((m, k), |_| rng.random_range(-2.0..2.0));
            let b = Array2::from_shape_fn((k, n), |_| rng.random_range(-2.0..2.0));
            let candidate = frob(&(&x - &a.dot(&b)));
            assert!(
                candidate >= best,
                "case {case}: sampled rank-{k} matrix beat the truncation: {candidate} < {best}"
            );
        }
    }
}

fn frob(x: &Array2<f64>) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
