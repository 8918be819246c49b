//! Boruta feature selection on one dataset combination.
use behavior_bench::boruta::{apply_selection, boruta_select, BorutaConfig, Decision};
use behavior_bench::datamodel::{build_combination, ClassLevel, ComboId, EncodingOptions};
use behavior_bench::impute::impute_records;
use behavior_bench::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (records, _) = impute_records(&generate(&SynthConfig::default())?, 14)?;
    let m = build_combination(&records, ComboId::C, ClassLevel::Two, EncodingOptions::default())?;
    let report = boruta_select(&m, &BorutaConfig { seed: 1, ..Default::default() })?;
    println!("{} runs over {} columns", report.trace.len(), m.n_cols());
    for d in [Decision::Confirmed, Decision::Tentative] {
        println!("{d}: {:?}", report.names_with(d));
    }
    println!("rejected: {}", report.count(Decision::Rejected));
    match apply_selection(&m, &report, false) {
        Ok(kept) => println!("selected matrix: {} x {}", kept.n_rows(), kept.n_cols()),
        Err(e) => println!("selection: {e}"),
    }
    Ok(())
}
