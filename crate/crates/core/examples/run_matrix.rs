//! The 144-cell grid with reduced compute, then the two-stage analysis.
use behavior_bench::config::RunConfig;
use behavior_bench::impute::impute_records;
use behavior_bench::matrix::{analyze, index_rows, run_matrix};
use behavior_bench::synth::generate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::from_text(
        "folds = 5\nboruta_trees = 50\nboruta_max_runs = 20\nrf_trees = 100\nxgb_rounds = 50\nnn_epochs = 50\n",
    )?;
    let (records, _) = impute_records(&generate(&cfg.synth)?, cfg.knn_k)?;
    let out = run_matrix(&records, &cfg.matrix)?;
    println!("{} cells, {} failed", out.table.cells.len(), out.table.failures.len());
    let report = analyze(&index_rows(&out.table), 0.05)?;
    print!("{}", report.rendered);
    Ok(())
}
