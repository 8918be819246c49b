//! Generate a synthetic study dataset and summarize its shape.
use behavior_bench::datamodel::{write_records_to, ClassLevel, EnvNumeric};
use behavior_bench::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = SynthConfig { seed: 42, ..Default::default() };
    let records = generate(&cfg)?;
    println!("{} records from {} children", records.len(), cfg.n_children);

    let mut counts = [0usize; 7];
    for r in &records {
        counts[r.labels.at(ClassLevel::Seven)] += 1;
    }
    println!("class7 counts: {counts:?}");

    for col in EnvNumeric::all().into_iter().take(6) {
        let missing = records.iter().filter(|r| r.env.get_numeric(col).is_none()).count();
        println!("{col:?}: {missing} missing");
    }

    let mut head = Vec::new();
    write_records_to(&mut head, &records[..3])?;
    println!("{}", String::from_utf8_lossy(&head));
    Ok(())
}
