//! Four-factor ANOVA on a balanced design shaped like the experiment grid.
use behavior_bench::stats::{aggregate_mean_sd, factorial_anova, render_table, FactorialDesign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let xgb = aggregate_mean_sd(&[69.0, 67.6, 59.1, 64.4])?;
    println!("mean {:.1}, sd {:.2}", xgb.mean, xgb.sd.unwrap_or(0.0));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut design = FactorialDesign::experiment_grid();
    for env in 0..2 {
        for fs in 0..2 {
            for clf in 0..4 {
                for class in 0..3 {
                    for rep in 0..3 {
                        let acc = 60.0 + 5.0 * env as f64 - 10.0 * class as f64 + rng.random_range(-2.0..2.0);
                        design.push(vec![env, fs, clf, class], rep, acc);
                    }
                }
            }
        }
    }
    let table = factorial_anova(&design)?;
    print!("{}", render_table(&table, "Four-way ANOVA on simulated accuracies"));
    Ok(())
}
