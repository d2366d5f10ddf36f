use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use cvtele::spectra::{spectrum_table, teleporter_noise_spectrum, usable_bandwidth, write_spectrum_csv};
use cvtele_cli::config::ExperimentConfig;
use cvtele_cli::exit;
use cvtele_cli::pipeline::{run_pipeline, run_tomography};
use cvtele_cli::reproduce::{render, reproduce, row_ids};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "cvtele", version, about = "Simulate teleportation of non-Gaussian wave packets")]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full simulation and write the output bundle.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the closed-form figures against their published values.
    ReproducePaper {
        /// Evaluate a single row.
        #[arg(long)]
        only: Option<String>,
    },
    /// Write the added-noise spectrum CSV.
    Spectra {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reconstruct a state from a `theta,x` dataset.
    Tomography {
        /// Dataset CSV.
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: Option<&Path>) -> Result<ExperimentConfig> {
    match config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run { config, seed, out } => {
            let mut cfg = load(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.sampling.seed = seed;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            let metrics = run_pipeline(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            eprintln!("wrote bundle to {}", cfg.out.display());
            Ok(exit::OK)
        }
        Command::ReproducePaper { only } => {
            let Some(rows) = reproduce(only.as_deref()) else {
                eprintln!("error: unknown row id {:?}; known ids: {}", only.unwrap_or_default(), row_ids().join(", "));
                return Ok(exit::VALIDATION);
            };
            print!("{}", render(&rows));
            let failed = rows.iter().filter(|r| !r.pass).count();
            println!("{} rows, {failed} failed", rows.len());
            Ok(if failed == 0 { exit::OK } else { exit::REGRESSION })
        }
        Command::Spectra { config, out } => {
            let cfg = load(config.as_deref())?;
            let out = out.unwrap_or(cfg.out.clone());
            let sp = &cfg.spectra;
            let rows = spectrum_table(&sp.squeezer, &sp.channel, sp.f_min_hz, sp.f_max_hz, sp.points)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let path = out.join("spectrum.csv");
            write_spectrum_csv(&rows, &path)?;
            let at_1mhz = teleporter_noise_spectrum(&sp.squeezer, &sp.channel, 1e6)?;
            println!("added noise at 1 MHz: {at_1mhz:.3} dB");
            match usable_bandwidth(&sp.squeezer, &sp.channel, 2.0 / 3.0) {
                Ok(b) => println!("usable bandwidth (F >= 2/3): {}", serde_json::to_string(&b)?),
                Err(e) => println!("usable bandwidth (F >= 2/3): {e}"),
            }
            eprintln!("wrote {}", path.display());
            Ok(exit::OK)
        }
        Command::Tomography { data, config, out } => {
            let cfg = load(config.as_deref())?;
            let out = out.unwrap_or(cfg.out.clone());
            let metrics = run_tomography(&cfg, &data, &out)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            eprintln!("wrote {}", out.join("rho.json").display());
            Ok(exit::OK)
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::VALIDATION } else { exit::OK };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::VALIDATION
        }
    };
    std::process::exit(code);
}
