use behavior_bench::datamodel::{
    build_combination, ChildCharacteristics, ClassLevel, ComboId, EncodingOptions, MAJOR_NAMES, MINOR_NAMES,
};
use behavior_bench::impute::impute_records;
use behavior_bench::synth::{generate, SynthConfig};

#[test]
fn combination_shapes() {
    let (records, _) = impute_records(&generate(&SynthConfig::default()).unwrap(), 14).unwrap();
    let opts = EncodingOptions::default();
    let env_cols = build_combination(&records, ComboId::A, ClassLevel::Two, opts).unwrap().n_cols()
        - build_combination(&records, ComboId::B, ClassLevel::Two, opts).unwrap().n_cols();
    assert!(env_cols >= 25);

    let cc = ChildCharacteristics::COLUMNS.len();
    for combo in ComboId::ALL {
        for level in ClassLevel::ALL {
            let m = build_combination(&records, combo, level, opts).unwrap();
            let mut want = cc;
            if combo.includes_major() {
                want += MAJOR_NAMES.len();
            }
            if combo.includes_minor() {
                want += MINOR_NAMES.len();
            }
            if combo.includes_env() {
                want += env_cols;
            }
            assert_eq!(m.n_cols(), want, "{combo} class {}", level.n_classes());
            assert_eq!(m.n_rows(), records.len());
            assert_eq!(m.n_classes(), level.n_classes());
            assert_eq!(&m.column_names()[..cc], ChildCharacteristics::COLUMNS);
        }
    }
}

#[test]
fn unimputed_records_are_refused() {
    let records = generate(&SynthConfig::default()).unwrap();
    assert!(build_combination(&records, ComboId::A, ClassLevel::Seven, EncodingOptions::default()).is_err());
    assert!(build_combination(&records, ComboId::B, ClassLevel::Seven, EncodingOptions::default()).is_ok());
}
