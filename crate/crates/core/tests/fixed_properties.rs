use disagg_core::fixed::{column_norms, normalize_with_compensation, update_fixed_basis, update_fixed_weights};
use disagg_core::model::{DisaggregationModel, FixedLoadFactors, ShiftableLoadClass};
use disagg_core::objective::{frobenius_objective, generalized_kl};
use disagg_core::{SparseBinaryBasis, UpdateRule};
use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-12;

fn positive(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    proptest::collection::vec(0.01..1.0f64, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

/// One block-coordinate cycle on the fixed part: basis, normalize, weights.
fn cycle(x: &Array2<f64>, model: &mut DisaggregationModel<f64>, rule: UpdateRule) {
    model.fixed.basis = update_fixed_basis(x, model, rule, EPS).unwrap();
    normalize_with_compensation(&mut model.fixed, EPS);
    model.fixed.weights = update_fixed_weights(x, model, rule, EPS).unwrap();
}

fn random_problem(seed: u64, d: usize, n: usize, rank: usize) -> (Array2<f64>, DisaggregationModel<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize, c: usize| Array2::from_shape_fn((r, c), |_| rng.random_range(0.01..1.0));
    let x = draw(d, n);
    let model = DisaggregationModel {
        fixed: FixedLoadFactors {
            basis: draw(d, rank),
            weights: draw(rank, n),
        },
        shiftable: vec![],
    };
    (x, model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn updates_keep_factors_nonnegative_and_zeros_at_zero(
        x in positive(10, 6),
        basis in positive(10, 2),
        weights in positive(2, 6),
        zero_row in 0usize..10,
        zero_day in 0usize..6,
        kl in any::<bool>(),
    ) {
        let rule = if kl { UpdateRule::PaperKl } else { UpdateRule::Frobenius };
        let mut model = DisaggregationModel {
            fixed: FixedLoadFactors { basis, weights },
            shiftable: vec![],
        };
        model.fixed.basis[[zero_row, 0]] = 0.0;
        model.fixed.weights[[1, zero_day]] = 0.0;
        for _ in 0..5 {
            cycle(&x, &mut model, rule);
            prop_assert!(model.fixed.basis.iter().all(|&v| v >= 0.0 && v.is_finite()));
            prop_assert!(model.fixed.weights.iter().all(|&v| v >= 0.0 && v.is_finite()));
            prop_assert_eq!(model.fixed.basis[[zero_row, 0]], 0.0);
            prop_assert_eq!(model.fixed.weights[[1, zero_day]], 0.0);
        }
    }

    #[test]
    fn compensated_normalization_preserves_the_product(basis in positive(8, 3), weights in positive(3, 5)) {
        let mut fixed = FixedLoadFactors { basis, weights };
        let before = fixed.reconstruction();
        normalize_with_compensation(&mut fixed, EPS);
        for norm in column_norms(&fixed.basis) {
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
        for (a, b) in fixed.reconstruction().iter().zip(&before) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn frobenius_updates_never_raise_the_objective() {
    for seed in 0..20 {
        let (x, mut model) = random_problem(seed, 20, 8, 3);
        let mut prev = frobenius_objective(&x, &model).unwrap().total;
        for it in 0..100 {
            cycle(&x, &mut model, UpdateRule::Frobenius);
            let now = frobenius_objective(&x, &model).unwrap().total;
            assert!(now <= prev + 1e-10, "seed {seed} iteration {it}: {prev} -> {now}");
            prev = now;
        }
    }
}

#[test]
fn kl_updates_never_raise_the_divergence() {
    for seed in 0..20 {
        let (x, mut model) = random_problem(100 + seed, 20, 8, 3);
        let mut prev = generalized_kl(&x, &model.reconstruct().unwrap(), EPS).unwrap();
        for it in 0..100 {
            cycle(&x, &mut model, UpdateRule::PaperKl);
            let now = generalized_kl(&x, &model.reconstruct().unwrap(), EPS).unwrap();
            assert!(now <= prev + 1e-10, "seed {seed} iteration {it}: {prev} -> {now}");
            prev = now;
        }
    }
}

#[test]
fn exact_fit_is_a_fixed_point_with_shiftable_classes_present() {
    // X equals the reconstruction, including a shiftable contribution, so
    // both rules leave the fixed factors where they are.
    let (_, mut model) = random_problem(7, 12, 4, 2);
    normalize_with_compensation(&mut model.fixed, EPS);
    let mut class = ShiftableLoadClass::new("c", 0.8, 3, SparseBinaryBasis::identity(12), 4);
    class.weights[[3, 1]] = true;
    class.weights[[9, 2]] = true;
    model.shiftable.push(class);
    let x = model.reconstruct().unwrap();
    for rule in [UpdateRule::PaperKl, UpdateRule::Frobenius] {
        let mut m = model.clone();
        cycle(&x, &mut m, rule);
        for (a, b) in m.fixed.basis.iter().zip(&model.fixed.basis) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in m.fixed.weights.iter().zip(&model.fixed.weights) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
