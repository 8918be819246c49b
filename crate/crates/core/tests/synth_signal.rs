use behavior_bench::boruta::{boruta_select, BorutaConfig, Decision};
use behavior_bench::datamodel::{build_combination, ClassLevel, ComboId, EncodingOptions, EnvNumeric};
use behavior_bench::impute::impute_records;
use behavior_bench::stats::one_way_anova;
use behavior_bench::synth::{generate, SynthConfig};

/// One-way ANOVA p-value of every numeric environment column across the
/// seven classes, over the observed cells only.
fn env_p_values(cfg: &SynthConfig) -> Vec<f64> {
    let records = generate(cfg).unwrap();
    EnvNumeric::all()
        .into_iter()
        .filter_map(|c| {
            let mut groups = vec![Vec::new(); 7];
            for r in &records {
                if let Some(v) = r.env.get_numeric(c) {
                    groups[r.labels.at(ClassLevel::Seven)].push(v);
                }
            }
            one_way_anova(&groups).ok().map(|a| a.p)
        })
        .collect()
}

#[test]
fn zero_env_signal_gives_null_p_values() {
    let mut ps = Vec::new();
    for seed in 0..10 {
        ps.extend(env_p_values(&SynthConfig { env_signal: 0.0, seed, ..Default::default() }));
    }
    let small = ps.iter().filter(|&&p| p < 0.05).count() as f64 / ps.len() as f64;
    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
    assert!(small <= 0.10, "{:.3} of {} p-values below 0.05", small, ps.len());
    assert!((0.4..=0.6).contains(&mean), "mean p {mean:.3}");
}

#[test]
fn env_signal_shows_up_in_class_means() {
    let ps = env_p_values(&SynthConfig { env_signal: 0.8, seed: 1, ..Default::default() });
    let small = ps.iter().filter(|&&p| p < 0.05).count();
    assert!(small * 2 > ps.len(), "only {small}/{} columns separate the classes", ps.len());
}

#[test]
fn strong_env_signal_is_confirmed_by_boruta() {
    let mut hits = 0;
    for seed in 0..20 {
        let cfg = SynthConfig { env_signal: 1.0, behavior_signal: 0.3, seed, ..Default::default() };
        let (records, _) = impute_records(&generate(&cfg).unwrap(), 14).unwrap();
        let with_env = build_combination(&records, ComboId::A, ClassLevel::Seven, EncodingOptions::default()).unwrap();
        let without = build_combination(&records, ComboId::B, ClassLevel::Seven, EncodingOptions::default()).unwrap();
        let r = boruta_select(&with_env, &BorutaConfig { seed, ..Default::default() }).unwrap();
        let env_confirmed = r
            .features
            .iter()
            .filter(|f| f.decision == Decision::Confirmed && !without.column_names().contains(&f.name))
            .count();
        if env_confirmed > 0 {
            hits += 1;
        }
    }
    assert!(hits >= 19, "an environment column was confirmed in {hits}/20 seeds");
}
