//! Fill missing environment cells: same-session carry, then k-NN (k = 14).
use behavior_bench::impute::{impute_records, knn_impute};
use behavior_bench::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = vec![
        vec![Some(1.0), Some(10.0)],
        vec![Some(2.0), None],
        vec![Some(3.0), Some(30.0)],
        vec![None, Some(20.0)],
    ];
    let (filled, donors) = knn_impute(&rows, 2)?;
    println!("toy matrix: {filled:?} ({} cells filled)", donors.len());

    let records = generate(&SynthConfig::default())?;
    let (_, report) = impute_records(&records, 14)?;
    for c in report.columns.iter().filter(|c| c.missing_before > 0) {
        println!(
            "{:<24} missing {:>3}  session {:>3}  knn {:>3}",
            c.column, c.missing_before, c.filled_by_session, c.filled_by_knn
        );
    }
    println!("{} cells imputed in total", report.total_imputed());
    Ok(())
}
