//! Command-line driver: `train`, `infer`, `eval` and `bench` over a JSON
//! run config, plus `export` to write the bundled corpora to disk.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use primparse::pipeline::{cmd_bench, cmd_eval, cmd_infer, cmd_train, PipelineConfig};
use primparse::toy::{bundled, BUNDLED};

#[derive(Parser)]
#[command(
    name = "primparse",
    version,
    about = "Enumerate, rank and generate logical forms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn load(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::load(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the ranker and the composition scorer.
    Train(RunArgs),
    /// Predict logical forms and answers.
    Infer(RunArgs),
    /// Score predictions against gold forms and answers.
    Eval(RunArgs),
    /// Compare oracle logical-form counts with primitive counts.
    Bench(RunArgs),
    /// Write the bundled corpora as files.
    Export {
        /// Output directory; one subdirectory per corpus.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Train(a) => {
            let out = cmd_train(&a.load()?)?;
            println!(
                "ranker examples {}, gold coverage {:.4}, composer trained on {} (skipped {}), train EM {:.4}",
                out.ranker.examples,
                out.ranker.coverage(),
                out.composer_trained,
                out.composer_skipped.len(),
                out.train_em
            );
        }
        Command::Infer(a) => {
            let preds = cmd_infer(&a.load()?)?;
            let fallback = preds.iter().filter(|p| p.source == "fallback").count();
            println!("{} predictions ({} fallback)", preds.len(), fallback);
        }
        Command::Eval(a) => {
            let r = cmd_eval(&a.load()?)?;
            println!(
                "questions {}  EM {:.4}  answer F1 {:.4}",
                r.questions, r.em, r.f1
            );
        }
        Command::Bench(a) => {
            let r = cmd_bench(&a.load()?)?;
            println!("dataset,lf,first_hop,second_hop,tb_cl,tb_cl_vl");
            for s in &r.summary {
                println!(
                    "{},{},{},{},{},{}",
                    s.dataset, s.lf, s.first_hop, s.second_hop, s.tb_cl, s.tb_cl_vl
                );
            }
        }
        Command::Export { out } => {
            for name in BUNDLED {
                bundled(name)?.write(&out.join(name))?;
                println!("wrote {}", out.join(name).display());
            }
        }
    }
    Ok(())
}
