//! Ten-fold stratified cross-validation of the four learners.
use behavior_bench::datamodel::{build_combination, ClassLevel, ComboId, EncodingOptions};
use behavior_bench::eval::{cross_validate, kfold_plan};
use behavior_bench::impute::impute_records;
use behavior_bench::learners::{LearnerKind, LearnerSpec};
use behavior_bench::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (records, _) = impute_records(&generate(&SynthConfig::default())?, 14)?;
    let m = build_combination(&records, ComboId::E, ClassLevel::Three, EncodingOptions::default())?;
    let plan = kfold_plan(&m, 10, 7)?;
    for kind in LearnerKind::ALL {
        let r = cross_validate(&LearnerSpec::default_for(kind, 7), &m, &plan, None)?;
        println!(
            "{kind}: accuracy {:.3} (sd {:.3})  precision {:.3}  recall {:.3}  specificity {:.3}  auc {:?}",
            r.mean.accuracy, r.sd.accuracy, r.mean.precision, r.mean.recall_sensitivity, r.mean.specificity, r.mean.auc
        );
    }
    Ok(())
}
