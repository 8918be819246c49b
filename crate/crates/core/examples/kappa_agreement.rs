//! Inter-rater agreement on behavior codes.
use behavior_bench::agreement::{cohen_kappa, interpret_kappa, mean_pairwise_kappa, RatingPair};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = ["call", "call", "emotion", "interest", "call", "negative", "interest", "call"];
    let b = ["call", "emotion", "emotion", "interest", "call", "negative", "call", "call"];
    let c = ["call", "call", "emotion", "interest", "interest", "negative", "interest", "call"];
    let k = cohen_kappa(&RatingPair::new(a.to_vec(), b.to_vec())?)?;
    println!("rater a vs b: kappa {k:.3} ({})", interpret_kappa(k));
    let m = mean_pairwise_kappa(&[a.to_vec(), b.to_vec(), c.to_vec()])?;
    println!("three raters: mean pairwise kappa {m:.3} ({})", interpret_kappa(m));
    Ok(())
}
