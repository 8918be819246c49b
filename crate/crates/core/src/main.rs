use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use behavior_bench::cli::{self, CliError};
use behavior_bench::config::RunConfig;

#[derive(Parser)]
#[command(name = "behavior-bench", version, about = "Behavior-classification benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` config file, or a previous run's manifest.json.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set seed=7`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => cli::load_config(p)?,
            None => RunConfig::default(),
        };
        for pair in &self.overrides {
            cfg.set_pair(pair)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Synth {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// kNN-impute missing environmental values.
    Impute {
        #[arg(long, short)]
        input: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 14)]
        k: usize,
    },
    /// Inter-rater agreement over the rating columns of a CSV file.
    Kappa {
        #[arg(long, short)]
        input: PathBuf,
    },
    /// Boruta selection on one combination and class level.
    Select {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        data: PathBuf,
        #[arg(long)]
        combo: String,
        #[arg(long, default_value_t = 7)]
        classes: usize,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Train one learner; optionally report cross-validated metrics.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        data: PathBuf,
        #[arg(long)]
        combo: String,
        #[arg(long, default_value_t = 7)]
        classes: usize,
        #[arg(long)]
        learner: String,
        #[arg(long)]
        cv: bool,
        /// Where to save the fitted model.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run the full 144-cell grid on an imputed dataset.
    Matrix {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        data: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Two-stage ANOVA over a results index.
    Stats {
        #[arg(long, short)]
        index: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Synthesize, impute, run the grid and analyze, end to end.
    Reproduce {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn set_threads(n: usize) {
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text).map_err(cli::io_err(format!("writing {}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { cfg, out } => {
            let cfg = cfg.load()?;
            let n = cli::cmd_synth(&cfg, &out)?;
            println!("wrote {n} records to {}", out.display());
        }
        Command::Impute { input, out, k } => {
            let report = cli::cmd_impute(&input, &out, k)?;
            println!("imputed {} cells; wrote {}", report.total_imputed(), out.display());
        }
        Command::Kappa { input } => {
            let s = cli::cmd_kappa(&input)?;
            println!("raters: {}  items: {}  kappa: {:.4} ({})", s.raters.join(", "), s.items, s.kappa, s.band);
        }
        Command::Select { cfg, data, combo, classes, out } => {
            let cfg = cfg.load()?;
            set_threads(cfg.threads);
            let report = cli::cmd_select(&data, &cfg, &combo, classes)?;
            emit_json(&report, out.as_deref())?;
        }
        Command::Train { cfg, data, combo, classes, learner, cv, out } => {
            let cfg = cfg.load()?;
            set_threads(cfg.threads);
            let t = cli::cmd_train(&data, &cfg, &combo, classes, &learner, cv)?;
            if let Some(r) = &t.cv {
                println!(
                    "{}-fold accuracy {:.4} (sd {:.4})  f1 {:.4}",
                    r.folds.len(),
                    r.mean.accuracy,
                    r.sd.accuracy,
                    r.mean.f1
                );
            }
            if let Some(p) = out {
                t.model.save(&p)?;
                println!("saved model to {}", p.display());
            }
        }
        Command::Matrix { cfg, data, out } => {
            let cfg = cfg.load()?;
            set_threads(cfg.threads);
            let table = cli::cmd_matrix(&data, &cfg, &out)?;
            println!("{} cells written to {}", table.cells.len(), out.join("results").display());
        }
        Command::Stats { index, alpha, out } => {
            let report = cli::cmd_stats(&index, alpha)?;
            print!("{}", report.rendered);
            if let Some(p) = out {
                emit_json(&report, Some(&p))?;
            }
        }
        Command::Reproduce { cfg, out } => {
            let cfg = cfg.load()?;
            set_threads(cfg.threads);
            let outcome = cli::reproduce(&cfg, &out)?;
            println!(
                "{} cells complete; {} artifacts hashed in {}",
                outcome.table.cells.len(),
                outcome.manifest.artifacts.len(),
                out.join(cli::MANIFEST_FILE).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Cli::parse();
    match run(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
