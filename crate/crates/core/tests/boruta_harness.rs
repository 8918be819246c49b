mod common;

use behavior_bench::boruta::{boruta_select, BorutaConfig, Decision};
use behavior_bench::datamodel::FeatureMatrix;
use behavior_bench::eval::{boruta_fold_selections, kfold_plan};

fn label_plus_noise(seed: u64) -> FeatureMatrix {
    let noise = common::planted_matrix(292, 0, 30, 0.0, 700 + seed);
    let label: Vec<f64> = noise.labels().iter().map(|&y| y as f64).collect();
    noise.with_column("label_copy", &label).unwrap()
}

#[test]
fn label_identical_feature_is_confirmed() {
    let mut confirmed = 0;
    for seed in 0..20 {
        let m = label_plus_noise(seed);
        let r = boruta_select(&m, &BorutaConfig { seed, ..Default::default() }).unwrap();
        let j = m.column_index("label_copy").unwrap();
        if r.features[j].decision == Decision::Confirmed {
            confirmed += 1;
        }
    }
    assert!(confirmed >= 19, "label copy confirmed in {confirmed}/20 seeds");
}

#[test]
fn rejected_features_leave_later_runs() {
    let m = common::planted_matrix(200, 3, 12, 0.8, 3);
    let r = boruta_select(&m, &BorutaConfig { seed: 3, ..Default::default() }).unwrap();
    for (j, f) in r.features.iter().enumerate() {
        assert!(f.hit_count <= f.runs_participated);
        if f.decision == Decision::Rejected {
            let at = f.decided_at.unwrap();
            assert!(r.trace.iter().filter(|t| t.run > at).all(|t| !t.active.contains(&j)), "{} reappeared", f.name);
            assert_eq!(f.runs_participated, at);
        }
    }
    assert_eq!(
        r.features.len(),
        r.count(Decision::Confirmed) + r.count(Decision::Tentative) + r.count(Decision::Rejected)
    );
    assert_eq!(r.features.iter().map(|f| f.name.as_str()).collect::<Vec<_>>(), m.column_names());
}

#[test]
fn duplicating_a_confirmed_feature_keeps_it() {
    let mut checked = 0;
    let mut rejected = Vec::new();
    for seed in 0..10 {
        let base = common::planted_matrix(292, 2, 10, 1.5, 100 + seed);
        let cfg = BorutaConfig { seed, ..Default::default() };
        let r = boruta_select(&base, &cfg).unwrap();
        for j in (0..2).filter(|&j| r.features[j].decision == Decision::Confirmed) {
            checked += 1;
            let doubled = base.with_column("copy", &base.column(j)).unwrap();
            if boruta_select(&doubled, &cfg).unwrap().features[j].decision == Decision::Rejected {
                rejected.push((seed, j));
            }
        }
    }
    assert!(checked > 0);
    assert!(rejected.is_empty(), "{}/{checked} originals rejected after duplication: {rejected:?}", rejected.len());
}

#[test]
fn fold_selection_never_sees_held_out_rows() {
    let m = common::planted_matrix(150, 2, 6, 1.0, 21);
    let plan = kfold_plan(&m, 5, 21).unwrap();
    let cfg = BorutaConfig { max_runs: 20, seed: 4, ..Default::default() };
    let before = boruta_fold_selections(&m, &plan, &cfg, false).unwrap();

    // scramble every held-out cell of fold 0 and make the last column leak the label there
    let held = plan.test_indices(0);
    let mut rows: Vec<Vec<f64>> = (0..m.n_rows()).map(|i| m.row(i).to_vec()).collect();
    let last = m.n_cols() - 1;
    for &i in held {
        for v in rows[i].iter_mut() {
            *v = -*v * 3.0 + 17.0;
        }
        rows[i][last] = 100.0 * m.labels()[i] as f64;
    }
    let tampered = FeatureMatrix::from_rows(m.column_names().to_vec(), &rows, m.labels().to_vec(), 2).unwrap();
    let after = boruta_fold_selections(&tampered, &plan, &cfg, false).unwrap();
    assert_eq!(before[0], after[0]);
    assert_ne!(before[1].report, after[1].report);
}
