//! End-to-end run into a directory, then a rerun from its manifest.
use behavior_bench::cli::{load_config, reproduce, MANIFEST_FILE};
use behavior_bench::config::RunConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("behavior-bench-example");
    let cfg = RunConfig::from_text(
        "folds = 5\nboruta_trees = 50\nboruta_max_runs = 20\nrf_trees = 100\nxgb_rounds = 50\nnn_epochs = 50\n",
    )?;
    let first = reproduce(&cfg, &dir.join("first"))?;
    println!("{} cells, {} artifacts", first.table.cells.len(), first.manifest.artifacts.len());

    let again = load_config(&dir.join("first").join(MANIFEST_FILE))?;
    let second = reproduce(&again, &dir.join("second"))?;
    println!("identical artifacts: {}", first.manifest.artifacts == second.manifest.artifacts);
    Ok(())
}
