use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use curricula::data::{generate_synthetic, stratified_kfold, write_partitions};
use curricula::harness::{
    derive_seed, load_dataset, render_report, run_experiment, DataSource, ExperimentConfig,
    SeedPurpose,
};
use curricula::{Dataset, Error, Result};

#[derive(Parser)]
#[command(name = "curricula", version, about = "Scheduled easy/hard curriculum training under stratified k-fold CV")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every arm on every fold and write the comparison report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides CURRICULA_OUT and the config's out_dir).
        #[arg(long, env = "CURRICULA_OUT")]
        out: Option<PathBuf>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Also write each selected model to `<out>/models/`.
        #[arg(long)]
        save_models: bool,
    },
    /// Write the config's synthetic dataset as `id,label,f1,...,fd` CSV.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the fold assignment as `id,fold_index,split` CSV.
    Folds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            save_models,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = out
                .or_else(|| cfg.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("results"));
            let report = run_experiment(&cfg)?;
            let rendered = render_report(&report, &out_dir)?;
            if save_models {
                let dir = out_dir.join("models");
                std::fs::create_dir_all(&dir)?;
                for arm in &report.arms {
                    for f in &arm.folds {
                        f.model
                            .save(&dir.join(format!("{}_fold{}.txt", arm.arm.name, f.fold)))?;
                    }
                }
            }
            print!("{}", rendered.table);
            eprintln!("wrote {}", out_dir.display());
        }
        Command::GenData { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let DataSource::Synthetic(synth) = &cfg.data else {
                return Err(Error::Config(
                    "gen-data needs a [data.synthetic] section".into(),
                ));
            };
            let data: Dataset = generate_synthetic(synth)?;
            data.write_csv(&out)?;
            eprintln!("wrote {} samples to {}", data.len(), out.display());
        }
        Command::Folds { config, out, seed } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let data = load_dataset(&cfg.data)?;
            let parts = stratified_kfold(
                &data,
                cfg.folds,
                cfg.val_fraction,
                derive_seed(cfg.seed, 0, SeedPurpose::Folds),
            )?;
            write_partitions(&parts, &out)?;
            eprintln!("wrote {} partitions to {}", parts.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
