use behavior_bench::agreement::{cohen_kappa, RatingPair};
use behavior_bench::eval::{auc_binary, kfold_plan_labels};
use behavior_bench::impute::knn_impute;
use behavior_bench::stats::{aggregate_mean_sd, factorial_anova, one_way_anova, FactorialDesign};
use proptest::prelude::*;

fn balanced_design(levels: &[usize], reps: usize, values: &[f64]) -> FactorialDesign {
    let names: Vec<String> = (0..levels.len()).map(|i| format!("F{i}")).collect();
    let factors: Vec<(&str, usize)> = names.iter().map(String::as_str).zip(levels.iter().copied()).collect();
    let mut d = FactorialDesign::new(&factors);
    let n_cells: usize = levels.iter().product();
    let mut it = values.iter().cycle();
    for c in 0..n_cells {
        let mut rem = c;
        let mut cell = vec![0; levels.len()];
        for (slot, &n) in cell.iter_mut().zip(levels).rev() {
            *slot = rem % n;
            rem /= n;
        }
        for r in 0..reps {
            d.push(cell.clone(), r, *it.next().unwrap());
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factorial_sums_of_squares_add_up(
        levels in prop::collection::vec(2usize..4, 1..4),
        reps in 2usize..4,
        values in prop::collection::vec(-50.0f64..50.0, 8..40),
    ) {
        let t = factorial_anova(&balanced_design(&levels, reps, &values)).unwrap();
        let sum: f64 = t.rows.iter().map(|r| r.ss).sum::<f64>() + t.ss_error;
        prop_assert!((sum - t.ss_total).abs() <= 1e-9 * t.ss_total.max(1.0));
        let df: usize = t.rows.iter().map(|r| r.df).sum::<usize>() + t.df_error;
        prop_assert_eq!(df, t.n - 1);
    }

    #[test]
    fn one_way_f_is_shift_and_scale_invariant(
        groups in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3..8), 2..5),
        shift in -100.0f64..100.0,
        scale in 0.1f64..10.0,
    ) {
        let base = one_way_anova(&groups);
        let moved: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v * scale + shift).collect()).collect();
        if let (Ok(a), Ok(b)) = (base, one_way_anova(&moved)) {
            prop_assert!((a.f - b.f).abs() <= 1e-6 * a.f.abs().max(1.0));
        }
    }

    #[test]
    fn sd_ignores_shift(values in prop::collection::vec(-100.0f64..100.0, 2..30), shift in -1e3f64..1e3) {
        let a = aggregate_mean_sd(&values).unwrap();
        let moved: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let b = aggregate_mean_sd(&moved).unwrap();
        prop_assert!((a.sd.unwrap() - b.sd.unwrap()).abs() <= 1e-8 * a.sd.unwrap().max(1.0));
        prop_assert!((a.mean + shift - b.mean).abs() <= 1e-9 * (1.0 + b.mean.abs()));
    }

    #[test]
    fn folds_partition_and_stratify(
        labels in prop::collection::vec(0usize..4, 40..200),
        k in 2usize..8,
        seed in any::<u64>(),
    ) {
        let plan = match kfold_plan_labels(&labels, 4, k, seed) {
            Ok(p) => p,
            Err(_) => return Ok(()),
        };
        prop_assert!(plan.validate(labels.len()).is_ok());
        for c in 0..4 {
            let total = labels.iter().filter(|&&l| l == c).count();
            for f in &plan.folds {
                let got = f.iter().filter(|&&i| labels[i] == c).count() as f64;
                prop_assert!((got - total as f64 / k as f64).abs() < 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn auc_is_rank_based(
        pairs in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..50),
    ) {
        let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let pos: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let a = auc_binary(&scores, &pos);
        let warped: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 - 1.0).collect();
        let b = auc_binary(&warped, &pos);
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() < 1e-12);
            let flipped: Vec<bool> = pos.iter().map(|p| !p).collect();
            prop_assert!((auc_binary(&scores, &flipped).unwrap() - (1.0 - a)).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_is_symmetric_and_bounded(
        pairs in prop::collection::vec((0u8..4, 0u8..4), 2..100),
    ) {
        let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let ab = cohen_kappa(&RatingPair::new(a.clone(), b.clone()).unwrap());
        let ba = cohen_kappa(&RatingPair::new(b, a).unwrap());
        match (ab, ba) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x - y).abs() < 1e-12);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x));
            }
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }

    #[test]
    fn imputation_keeps_observed_cells(
        cells in prop::collection::vec(prop::option::weighted(0.85, -20.0f64..20.0), 60..240),
        p in 2usize..5,
    ) {
        let rows: Vec<Vec<Option<f64>>> = cells.chunks_exact(p).map(<[_]>::to_vec).collect();
        if let Ok((filled, _)) = knn_impute(&rows, 14) {
            for (orig, new) in rows.iter().zip(&filled) {
                for (o, v) in orig.iter().zip(new) {
                    prop_assert!(v.is_finite());
                    if let Some(o) = o {
                        prop_assert_eq!(o, v);
                    }
                }
            }
        }
    }
}
